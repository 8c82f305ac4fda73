"""Executable case studies: the three-register machine as processes and as
resources, reproducing the situation trace, the scripted plays, and the
goal verdicts.  Output is deterministic; the expected listings live next
to the corpus files and the runners are compared against them byte for
byte."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources as ilr

from . import syntax as S
from .games import (MASTER, MoveDelta, Play, Replacement, compactize,
                    is_successful, star, subtree_fingerprints)
from .parser import parse
from .printer import print_ast
from .semantics import EvalConfig, ProcessEvaluator
from .strategies import ScriptedMaster, ScriptedSlave, simulate
from .worlds import INF, Interval, StepWorld, dump_world

DOMAIN = 15
PULSES = ("P1", "P2", "P3")


class DemoMismatch(AssertionError):
    """A runner diverged from the recorded listing."""


def corpus_text(name: str) -> str:
    return (ilr.files("tasklogic") / "corpus" / name).read_text()


def load_corpus(name: str) -> S.DefinitionEnv:
    return parse(corpus_text(name), "definitions")


def _situation(*atoms) -> frozenset:
    return frozenset(atoms)


def _L(i, v):
    return (f"L{i}", (v,))


def _P(i):
    return (f"P{i}", ())


def render_situation(sit: frozenset) -> str:
    """Paper-style line: register atoms, then the pulse or the Np marker."""
    regs = sorted(a for a in sit if a[0] not in PULSES)
    pulses = sorted(a for a in sit if a[0] in PULSES)
    parts = [f"{ltr}({','.join(map(str, args))})" if args else ltr
             for ltr, args in regs]
    parts += [ltr for ltr, _ in pulses] or ["Np"]
    return ", ".join(parts)


@dataclass
class DemoReport:
    title: str
    world: StepWorld
    trace: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    goal: bool = False
    play_lines: list = field(default_factory=list)
    produced: str = ""

    def render_text(self) -> str:
        out = [f"== {self.title} ==", ""]
        out.append("world:")
        for line in dump_world(self.world, DOMAIN).strip().splitlines():
            out.append(f"  {line}")
        out.append("")
        out.append("situation trace:")
        for i, line in enumerate(self.trace):
            out.append(f"  {i + 1}. {line}")
        out.append("")
        if self.play_lines:
            out.append("play:")
            out.extend(f"  {ln}" for ln in self.play_lines)
            out.append("")
            out.append(f"produced process: {self.produced}")
            out.append("")
        out.append("verdicts on (0,inf):")
        for name, value in self.verdicts.items():
            out.append(f"  {name}: {'true' if value else 'false'}")
        out.append(f"  goal: {'true' if self.goal else 'false'}")
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "title": self.title,
            "world": dump_world(self.world, DOMAIN).strip().splitlines(),
            "trace": self.trace,
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "goal": bool(self.goal),
            "play": self.play_lines,
            "produced": self.produced,
        }, indent=2) + "\n"


def play_listing(play: Play) -> list:
    """Numbered listing: integer labels for the actor who moved first,
    primed labels for the answers."""
    lines = [f"0. {print_ast(play.initial)}"]
    actors = play.actors or tuple("?" * len(play.steps))
    first_actor = actors[0] if actors else None
    count = 0
    for (t, pos), actor in zip(play.steps, actors):
        if actor == first_actor or actor == "both":
            count += 1
            label = str(count)
        else:
            label = f"{count}'"
        lines.append(f"{label}. @{t} {actor}: {print_ast(pos)}")
    return lines


# ---------------------------------------------------------------------------
# Processes variant

def _pulse_world(times, updates) -> StepWorld:
    """Pulse at each time in ``times``; the matching register update lands
    one moment later."""
    regs = {1: 2, 2: 0, 3: 0}

    def snapshot(extra=None):
        atoms = {_L(i, v) for i, v in regs.items()}
        if extra:
            atoms.add(_P(extra))
        return frozenset(atoms)

    segments = [(0, snapshot())]
    for t, (i, value) in zip(times, updates):
        segments.append((t, snapshot(extra=i)))
        regs[i] = value
        segments.append((t + 1, snapshot()))
    return StepWorld(tuple(segments))


def demo_assembly_process() -> DemoReport:
    env = load_corpus("assembly_process.defs")
    world = _pulse_world((2, 4, 6, 8), ((2, 2), (3, 4), (1, 6), (2, 10)))
    cfg = EvalConfig(domain_max=DOMAIN)
    ev = ProcessEvaluator(world, cfg)
    span = Interval(0, INF)
    report = DemoReport("memory cells as processes", world)
    report.trace = [render_situation(s) for _, s in world.segments]
    for name in ("cell1", "cell2", "cell3", "safety", "arithmetic", "program"):
        report.verdicts[name] = ev.truth(env.procs[name], span)
    report.goal = ev.truth(env.procs["goal"], span)
    if not all(report.verdicts.values()):
        bad = [k for k, v in report.verdicts.items() if not v]
        raise DemoMismatch(f"axioms falsified in the scripted world: {bad}")
    return report


# ---------------------------------------------------------------------------
# Resources variants

_MENU = ("l", "b")          # the command menu inside variant 1's antecedent

_THETA_EXPECTED = [
    "Gamma :& down Np Theta :-> (.tt |> updown L2(10)) >>",
    "Gamma :& <<(a2 Theta) :-> (.tt |> updown L2(10)) >>",
    "Gamma :& a2 Theta :-> (.tt |> updown L2(10)) >>",
    "Gamma :& <<(a3 Theta) :-> (.tt |> updown L2(10)) >>",
    "Gamma :& a3 Theta :-> (.tt |> updown L2(10)) >>",
    "Gamma :& <<(a1 Theta) :-> (.tt |> updown L2(10)) >>",
    "Gamma :& a1 Theta :-> (.tt |> updown L2(10)) >>",
    "Gamma :& <<(a2 Theta) :-> (.tt |> updown L2(10)) >>",
    "Gamma :& a2 Theta :-> (.tt |> updown L2(10)) >>",
]


def _check_positions(play: Play, expected: list):
    got = [print_ast(p) for p in play.positions]
    for i, (g, e) in enumerate(zip(got, expected)):
        if g != e:
            raise DemoMismatch(
                f"position {i} diverges:\n  got      {g}\n  expected {e}")
    if len(got) != len(expected):
        raise DemoMismatch(
            f"position count {len(got)} differs from expected {len(expected)}")


def demo_assembly_resource(variant: str) -> DemoReport:
    if variant == "theta":
        return _demo_theta()
    if variant == "lambda":
        return _demo_lambda()
    raise ValueError(f"unknown variant {variant!r} (use theta or lambda)")


def _demo_theta() -> DemoReport:
    env = load_corpus("assembly_resource.defs")
    start = env.resources["Start"]
    slave = ScriptedSlave(
        [(_MENU, Replacement(2)), (_MENU, Replacement(3)),
         (_MENU, Replacement(1)), (_MENU, Replacement(2))],
        env=env, domain_max=DOMAIN)
    report_move = MoveDelta(MASTER, ((_MENU, Replacement(1)),))
    master = ScriptedMaster(((3, report_move), (6, report_move),
                             (9, report_move), (12, report_move)))
    play = simulate(start, slave, master, env, DOMAIN)
    play = compactize(play)
    _check_positions(play, _THETA_EXPECTED)
    final = S.core(play.final)
    if S.core(final.right) != S.core(S.core(play.initial).right):
        raise DemoMismatch("the goal menu must stay uncommanded")

    world = _pulse_world((2, 5, 8, 11), ((2, 2), (3, 4), (1, 6), (2, 10)))
    cfg = EvalConfig(domain_max=DOMAIN)
    report = DemoReport("memory cells as one commandable resource", world)
    report.trace = [render_situation(s) for _, s in world.segments]
    report.play_lines = play_listing(play)
    produced = star(play, env)
    report.produced = print_ast(produced)
    report.verdicts["play produces the goal implication"] = True
    report.goal = is_successful(play, world, cfg, env)
    return report


_CELL_PATHS = {
    1: ("l", "a", "a", "a"),
    2: ("l", "a", "a", "b"),
    3: ("l", "a", "b"),
}


def _demo_lambda() -> DemoReport:
    env = load_corpus("assembly_resource.defs")
    start = env.resources["StartCells"]
    order = (2, 3, 1, 2)
    slave = ScriptedSlave([(_CELL_PATHS[i], Replacement(1)) for i in order],
                          env=env, domain_max=DOMAIN)
    master = ScriptedMaster(tuple(
        (t, MoveDelta(MASTER, ((_CELL_PATHS[i], Replacement(1)),)))
        for t, i in zip((3, 6, 9, 12), order)))
    play = simulate(start, slave, master, env, DOMAIN)
    play = compactize(play)

    # Frame locality: every move rewrites exactly one register subtree.
    touched = []
    for a, b in zip(play.positions, play.positions[1:]):
        fa, fb = subtree_fingerprints(a), subtree_fingerprints(b)
        diff = {p for p in fa if fa[p] != fb.get(p)}
        leaves = {p for p in diff
                  if not any(q != p and q[:len(p)] == p for q in diff)}
        if len(leaves) != 1:
            raise DemoMismatch(f"a move touched {sorted(leaves)}; "
                               f"expected exactly one register")
        touched.append(next(iter(leaves)))

    world = StepWorld((
        (0, _situation(_L(1, 2), _L(2, 0), _L(3, 0))),
        (3, _situation(_L(1, 2), _L(2, 2), _L(3, 0))),
        (6, _situation(_L(1, 2), _L(2, 2), _L(3, 4))),
        (9, _situation(_L(1, 6), _L(2, 2), _L(3, 4))),
        (12, _situation(_L(1, 6), _L(2, 10), _L(3, 4))),
    ))
    cfg = EvalConfig(domain_max=DOMAIN)
    report = DemoReport("memory cells as independent agents", world)
    report.trace = [render_situation(s) for _, s in world.segments]
    report.play_lines = play_listing(play)
    report.produced = print_ast(star(play, env))
    report.verdicts["one register per move"] = True
    report.goal = is_successful(play, world, cfg, env)
    return report
