"""Recursive-descent parser for the ASCII surface syntax.

Levels: ``fact``, ``process``, ``resource`` parse one expression;
``definitions`` parses a sequence of items

    fact NAME := <fact> ;        -- alias, expanded at parse time
    proc NAME := <process> ;     -- alias
    res  NAME := <resource> ;    -- alias
    def  NAME := >> ... ;        -- recursive DO-node definition, kept lazy

Aliases must appear before use; ``def`` bodies may reference each other
(mutual recursion) and are shape-checked after the whole text is read.
Comments run from ``--`` to end of line.
"""

from __future__ import annotations

import re
from typing import Optional

from . import syntax as S

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<nat>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>
        \.<->|<->|\.->|:->|->
      | \.\\/|:\\/|<\\/>|\\/
      | \.&|:&|<&>|&
      | \.~|:~|~>|~
      | \.all|\.ex|:all|:ex|<all>|<ex>
      | \.ff|\.tt|:ff|:tt
      | \|>=|\|>
      | >>|<<
      | :=|[().,;=+!\[\]]
    )
""", re.VERBOSE)

_RESERVED = {"ff", "tt", "all", "ex", "first", "inner", "upto", "box",
             "rep", "wrep", "updown", "down", "fact", "proc", "res", "def"}


class ParseError(S.SyntaxError_):
    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                line = text.count("\n", 0, pos) + 1
                col = pos - (text.rfind("\n", 0, pos) + 1) + 1
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            pos = m.end()
            if m.lastgroup == "ws":
                continue
            self.tokens.append((m.lastgroup, m.group(), m.start()))
        self.tokens.append(("eof", "", len(text)))
        self.i = 0

    def loc(self, idx=None):
        start = self.tokens[self.i if idx is None else idx][2]
        line = self.text.count("\n", 0, start) + 1
        col = start - (self.text.rfind("\n", 0, start) + 1) + 1
        return line, col

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, value: str) -> bool:
        return self.tokens[self.i][1] == value

    def try_eat(self, value: str) -> bool:
        if self.at(value):
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        if not self.try_eat(value):
            kind, got, _ = self.peek()
            line, col = self.loc()
            raise ParseError(f"expected {value!r}, found {got or kind!r}", line, col)


class Parser:
    def __init__(self, text: str, env: Optional[S.DefinitionEnv] = None):
        self.lx = _Lexer(text)
        self.env = env if env is not None else S.DefinitionEnv()

    def error(self, msg):
        line, col = self.lx.loc()
        raise ParseError(msg, line, col)

    # -- terms --------------------------------------------------------------

    def term(self):
        t = self.term_atom()
        while self.lx.try_eat("+"):
            t = S.Sum(t, self.term_atom())
        return t

    def term_atom(self):
        kind, value, _ = self.lx.peek()
        if kind == "nat":
            self.lx.next()
            return S.Const(int(value))
        if kind == "ident" and value not in _RESERVED:
            self.lx.next()
            return S.Var(value)
        self.error("expected a term")

    def term_list(self):
        self.lx.expect("(")
        args = []
        if not self.lx.at(")"):
            args.append(self.term())
            while self.lx.try_eat(","):
                args.append(self.term())
        self.lx.expect(")")
        return tuple(args)

    # -- facts ---------------------------------------------------------------

    def fact(self):
        left = self.fact_or()
        if self.lx.try_eat("->"):
            return S.FImplies(left, self.fact())
        if self.lx.try_eat("<->"):
            return S.DerivedFact("iff", (left, self.fact_or()))
        return left

    def fact_or(self):
        f = self.fact_and()
        while self.lx.try_eat("\\/"):
            f = S.DerivedFact("or", (f, self.fact_and()))
        return f

    def fact_and(self):
        f = self.fact_unary()
        while self.lx.try_eat("&"):
            f = S.DerivedFact("and", (f, self.fact_unary()))
        return f

    def fact_unary(self):
        if self.lx.try_eat("~"):
            return S.DerivedFact("not", (self.fact_unary(),))
        if self.lx.try_eat("all"):
            v = self.var_name()
            self.lx.expect(".")
            return S.FForAll(v, self.fact())
        if self.lx.try_eat("ex"):
            v = self.var_name()
            self.lx.expect(".")
            return S.DerivedFact("exists", (v, self.fact()))
        return self.fact_atom()

    def fact_atom(self):
        if self.lx.try_eat("ff"):
            return S.Falsum()
        if self.lx.try_eat("tt"):
            return S.DerivedFact("verum", ())
        if self.lx.try_eat("("):
            f = self.fact()
            self.lx.expect(")")
            return f
        kind, value, _ = self.lx.peek()
        if kind == "ident" and value not in _RESERVED:
            if self.lx.tokens[self.lx.i + 1][1] == "(":
                self.lx.next()
                args = self.term_list()
                self.env.register_arity(value, len(args))
                return S.Atom(value, args)
        # otherwise: term (equality) or a fact alias
        t = self.term()
        if self.lx.try_eat("="):
            return S.Equals(t, self.term())
        if isinstance(t, S.Var) and t.name in self.env.facts:
            return S.NamedFact(t.name, self.env.facts[t.name])
        if isinstance(t, S.Var):
            self.error(f"unknown fact name {t.name!r}")
        self.error("expected a fact")

    def var_name(self):
        kind, value, _ = self.lx.peek()
        if kind != "ident" or value in _RESERVED:
            self.error("expected a variable name")
        self.lx.next()
        return value

    # -- processes -------------------------------------------------------------

    def proc(self):
        left = self.proc_seq()
        if self.lx.try_eat(".->"):
            return S.PImplies(left, self.proc())
        if self.lx.try_eat(".<->"):
            return S.DerivedProc("iff", (left, self.proc_seq()))
        return left

    def proc_seq(self):
        p = self.proc_or()
        while True:
            if self.lx.try_eat("|>"):
                p = S.Seq(p, self.proc_or())
            elif self.lx.try_eat("|>="):
                p = S.DerivedProc("wseq", (p, self.proc_or()))
            elif self.lx.try_eat("~>"):
                self.lx.expect("[")
                k = self.nat()
                self.lx.expect(",")
                m = self.nat()
                self.lx.expect("]")
                step = self.proc_or()
                if isinstance(p, S.LeadChain) and not p.open_ended:
                    p = S.LeadChain(p.head, p.links + (S.ChainLink(k, m, step),))
                else:
                    p = S.LeadChain(p, (S.ChainLink(k, m, step),))
            else:
                return p

    def nat(self):
        kind, value, _ = self.lx.peek()
        if kind != "nat":
            self.error("expected a number")
        self.lx.next()
        return int(value)

    def proc_or(self):
        p = self.proc_and()
        while self.lx.try_eat(".\\/"):
            p = S.DerivedProc("or", (p, self.proc_and()))
        return p

    def proc_and(self):
        p = self.proc_unary()
        while self.lx.try_eat(".&"):
            p = S.DerivedProc("and", (p, self.proc_unary()))
        return p

    def proc_unary(self):
        for kw, cls in (("first", S.First), ("inner", S.Inner),
                        ("upto", S.Upto), ("box", S.Always)):
            if self.lx.try_eat(kw):
                return cls(self.fact_unary())
        for kw, op in (("updown", "updown"), ("down", "down")):
            if self.lx.try_eat(kw):
                return S.DerivedProc(op, (self.fact_unary(),))
        if self.lx.try_eat(".~"):
            return S.DerivedProc("not", (self.proc_unary(),))
        if self.lx.try_eat("rep"):
            return S.RepSeq(self.proc_unary())
        if self.lx.try_eat("wrep"):
            return S.WRepSeq(self.proc_unary())
        if self.lx.try_eat(".all"):
            v = self.var_name()
            self.lx.expect(".")
            return S.PForAll(v, self.proc())
        if self.lx.try_eat(".ex"):
            v = self.var_name()
            self.lx.expect(".")
            return S.DerivedProc("exists", (v, self.proc()))
        return self.proc_atom()

    def proc_atom(self):
        if self.lx.try_eat(".ff"):
            return S.DerivedProc("false", ())
        if self.lx.try_eat(".tt"):
            return S.DerivedProc("true", ())
        if self.lx.try_eat("("):
            p = self.proc()
            self.lx.expect(")")
            return p
        kind, value, _ = self.lx.peek()
        if kind == "ident" and value in self.env.procs:
            self.lx.next()
            return S.NamedProc(value, self.env.procs[value])
        if kind == "ident" and value not in _RESERVED:
            self.error(f"unknown process name {value!r}")
        self.error("expected a process")

    # -- resources ---------------------------------------------------------------

    def res(self):
        left = self.res_or()
        if self.lx.try_eat(":->"):
            return S.RImplies(left, self.res())
        return left

    def res_or(self):
        r = self.res_and()
        while True:
            if self.lx.try_eat(":\\/"):
                r = S.DerivedRes("or", (r, self.res_and()))
            elif self.lx.try_eat("<\\/>"):
                r = S.DerivedRes("aor", (r, self.res_and()))
            else:
                return r

    def res_and(self):
        r = self.res_unary()
        while True:
            if self.lx.try_eat(":&"):
                r = S.RAnd(r, self.res_unary())
            elif self.lx.try_eat("<&>"):
                r = S.DerivedRes("acc", (r, self.res_unary()))
            else:
                return r

    def res_unary(self):
        if self.lx.try_eat(":~"):
            return S.DerivedRes("not", (self.res_unary(),))
        if self.lx.try_eat("!"):
            return S.Bang(self.res_unary())
        if self.lx.try_eat(":all"):
            v = self.var_name()
            self.lx.expect(".")
            return S.RForAll(v, self.res())
        if self.lx.try_eat(":ex"):
            v = self.var_name()
            self.lx.expect(".")
            return S.DerivedRes("exists", (v, self.res()))
        if self.lx.try_eat("<all>"):
            v = self.var_name()
            self.lx.expect(".")
            return S.DerivedRes("aforall", (v, self.res()))
        if self.lx.try_eat("<ex>"):
            v = self.var_name()
            self.lx.expect(".")
            return S.DerivedRes("aexists", (v, self.res()))
        if self.lx.try_eat(":ff"):
            return S.DerivedRes("false", ())
        if self.lx.try_eat(":tt"):
            return S.DerivedRes("true", ())
        return self.res_atom()

    _PROC_STARTERS = ("first", "inner", "upto", "box", "updown", "down",
                      ".~", "rep", "wrep", ".ff", ".tt")

    def res_atom(self):
        kind, value, _ = self.lx.peek()
        # An explicit process prefix always opens an effect-potential pair.
        if any(self.lx.at(t) for t in self._PROC_STARTERS):
            effect = self.proc_unary()
            return self.with_potential(effect)
        if value == "(":
            # Either "(process) potential" or a parenthesized resource.
            save = self.lx.i
            try:
                self.lx.next()
                effect = self.proc()
                self.lx.expect(")")
                if self.at_potential():
                    return self.with_potential(effect)
            except ParseError:
                pass
            self.lx.i = save
            self.lx.next()
            r = self.res()
            self.lx.expect(")")
            return r
        if kind == "ident" and value not in _RESERVED:
            if value in self.env.procs:
                self.lx.next()
                return self.with_potential(S.NamedProc(value, self.env.procs[value]))
            self.lx.next()
            if self.lx.at("("):
                args = self.term_list()
                return S.LetterAtom(value, args)
            if value in self.env.resources:
                return S.NamedRes(value, self.env.resources[value])
            if value in self.env.dos:
                return S.DefRef(value)
            return S.LetterAtom(value, ())
        self.error("expected a resource")

    def at_potential(self) -> bool:
        kind, value, _ = self.lx.peek()
        if value == ">>" and kind == "punct":
            return True
        return kind == "ident" and (value in self.env.dos
                                    or value in self._forward_defs)

    _forward_defs: frozenset = frozenset()

    def with_potential(self, effect):
        kind, value, _ = self.lx.peek()
        if kind == "ident":
            if value in self.env.dos or value in self._forward_defs:
                self.lx.next()
                return S.WithPotential(effect, S.DefRef(value))
            self.error(f"unknown definition name {value!r}")
        self.lx.expect(">>")
        return S.WithPotential(effect, self.do_tail())

    def do_tail(self) -> S.DoNode:
        bound = ()
        kind, value, _ = self.lx.peek()
        if kind == "ident" and value not in _RESERVED:
            bound = self.bound_vars()
            self.lx.expect("(")
        elif not self.lx.try_eat("("):
            return S.DoNode((), ())
        branches = [self.done_node()]
        while self.lx.try_eat(","):
            branches.append(self.done_node())
        self.lx.expect(")")
        return S.DoNode(bound, tuple(branches))

    def bound_vars(self):
        names = [self.var_name()]
        while self.lx.try_eat(","):
            names.append(self.var_name())
        return tuple(names)

    def done_node(self) -> S.DoneNode:
        self.lx.expect("<<")
        bound = ()
        kind, value, _ = self.lx.peek()
        if kind == "ident" and value not in _RESERVED:
            bound = self.bound_vars()
        self.lx.expect("(")
        choices = [self.res()]
        while self.lx.try_eat(","):
            choices.append(self.res())
        self.lx.expect(")")
        return S.DoneNode(bound, tuple(choices))

    # -- definitions ----------------------------------------------------------

    def definitions(self) -> S.DefinitionEnv:
        # Pre-scan recursive definition names so bodies can refer forward.
        names = []
        for idx, (kind, value, _) in enumerate(self.lx.tokens):
            if kind == "ident" and value == "def":
                nxt = self.lx.tokens[idx + 1]
                if nxt[0] == "ident":
                    names.append(nxt[1])
        self._forward_defs = frozenset(names)
        while not self.lx.at(""):
            kind, value, _ = self.lx.peek()
            if kind == "eof":
                break
            if self.lx.try_eat("fact"):
                name = self.def_name()
                self.env.facts[name] = self.fact()
            elif self.lx.try_eat("proc"):
                name = self.def_name()
                self.env.procs[name] = self.proc()
            elif self.lx.try_eat("res"):
                name = self.def_name()
                self.env.resources[name] = self.res()
            elif self.lx.try_eat("def"):
                name = self.def_name()
                self.env.dos[name] = self.do_tail_with_marker()
            else:
                self.error("expected 'fact', 'proc', 'res' or 'def'")
            self.lx.expect(";")
        self.env.validate()
        return self.env

    def def_name(self):
        name = self.var_name()
        if (name in self.env.facts or name in self.env.procs
                or name in self.env.resources or name in self.env.dos):
            self.error(f"duplicate definition of {name!r}")
        self.lx.expect(":=")
        return name

    def do_tail_with_marker(self) -> S.DoNode:
        self.lx.expect(">>")
        return self.do_tail()


def parse(text: str, level: str, env: Optional[S.DefinitionEnv] = None):
    """Parse ``text`` at the given level; returns an AST, or the environment
    for level ``definitions``."""
    p = Parser(text, env)
    if level == "definitions":
        return p.definitions()
    if level == "fact":
        out = p.fact()
    elif level == "process":
        out = p.proc()
    elif level == "resource":
        out = p.res()
    else:
        raise ValueError(f"unknown level {level!r}")
    kind, value, _ = p.lx.peek()
    if kind != "eof":
        p.error(f"trailing input {value!r}")
    return out
