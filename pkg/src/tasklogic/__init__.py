"""Executable three-level logic: facts, processes, and resource games."""

from .parser import ParseError, parse
from .printer import print_ast
from .semantics import (EvalConfig, EvalResult, OracleEvaluator,
                        ProcessEvaluator, ValidityVerdict,
                        check_validity_desk_scale, eval_process,
                        eval_process_oracle)
from .syntax import DefinitionEnv, Substitution, SyntaxError_
from .worlds import INF, Interval, StepWorld, holds_fact, load_world, random_world

__all__ = [
    "DefinitionEnv", "EvalConfig", "EvalResult", "INF", "Interval",
    "OracleEvaluator", "ParseError", "ProcessEvaluator", "StepWorld",
    "Substitution", "SyntaxError_", "ValidityVerdict",
    "check_validity_desk_scale", "eval_process", "eval_process_oracle",
    "holds_fact", "load_world", "parse", "print_ast", "random_world",
]

__version__ = "0.1.0"
