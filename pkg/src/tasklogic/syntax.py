"""AST definitions for the three expression levels: facts, processes, resources.

Facts are classical first-order formulas, true or false at a single time
moment.  Processes are built over facts and hold on time intervals.
Resources wrap finitary processes with command menus (DO/DONE nodes) and
double as game positions.

Derived operators are kept as explicit sugar nodes (``Derived*``) so that
printed output matches source text; semantic code strips them on demand
via ``core`` / ``expand_all``.  Named abbreviations introduced by
definition files are kept as ``Named*`` wrapper nodes for the same reason.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields
from typing import Iterator, Mapping, Optional, Union


def node(cls):
    """Frozen dataclass with a cached structural hash."""
    cls = dataclass(frozen=True)(cls)
    generated = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = generated(self)
            object.__setattr__(self, "_h", h)
        return h

    cls.__hash__ = __hash__
    return cls


class SyntaxError_(Exception):
    """Malformed expression (arity clash, unknown name, bad shape)."""


# ---------------------------------------------------------------------------
# Terms

@node
class Var:
    name: str


@node
class Const:
    value: int


@node
class Sum:
    left: "Term"
    right: "Term"


Term = Union[Var, Const, Sum]


# ---------------------------------------------------------------------------
# Facts

@node
class Falsum:
    pass


@node
class Atom:
    letter: str
    args: tuple


@node
class Equals:
    left: Term
    right: Term


@node
class FImplies:
    left: "Fact"
    right: "Fact"


@node
class FForAll:
    var: str
    body: "Fact"


@node
class DerivedFact:
    # ops: not(a) or(a,b) and(a,b) iff(a,b) verum() exists(var, body)
    op: str
    args: tuple


@node
class NamedFact:
    name: str
    body: "Fact"


Fact = Union[Falsum, Atom, Equals, FImplies, FForAll, DerivedFact, NamedFact]


# ---------------------------------------------------------------------------
# Processes

@node
class First:
    fact: Fact


@node
class Inner:
    fact: Fact


@node
class Upto:
    fact: Fact


@node
class Always:
    fact: Fact


@node
class PImplies:
    left: "Process"
    right: "Process"


@node
class PForAll:
    var: str
    body: "Process"


@node
class Seq:
    left: "Process"
    right: "Process"


@node
class RepSeq:
    body: "Process"


@node
class WRepSeq:
    body: "Process"


@node
class ChainLink:
    after: int          # command moment k: the switch happens strictly after it
    before: int         # report moment k': ... and strictly before it
    step: "Process"


@node
class LeadChain:
    head: "Process"
    links: tuple        # of ChainLink, times strictly increasing across links
    open_ended: bool = False


@node
class InfConj:
    # Distinct conjuncts of a countable conjunction; the flag marks a
    # conjunct that stands for unboundedly many identical copies.
    entries: tuple      # of (Process, bool)


@node
class DerivedProc:
    # ops: not(a) or(a,b) and(a,b) iff(a,b) exists(var, body)
    #      false() true() updown(fact) down(fact) wseq(a,b)
    op: str
    args: tuple


@node
class NamedProc:
    name: str
    body: "Process"


Process = Union[First, Inner, Upto, Always, PImplies, PForAll, Seq, RepSeq,
                WRepSeq, LeadChain, InfConj, DerivedProc, NamedProc]


# ---------------------------------------------------------------------------
# Resources (and positions: a position may additionally contain BareDone)

@node
class DoneNode:
    bound: tuple        # of str
    choices: tuple      # of Resource, nonempty


@node
class DoNode:
    bound: tuple        # of str
    branches: tuple     # of DoneNode, possibly empty


@node
class DefRef:
    name: str


@node
class WithPotential:
    effect: Process     # finitary
    potential: "Union[DoNode, DefRef]"


@node
class RImplies:
    left: "Resource"
    right: "Resource"


@node
class RAnd:
    left: "Resource"
    right: "Resource"


@node
class RForAll:
    var: str
    body: "Resource"


@node
class Bang:
    body: "Resource"


@node
class LetterAtom:
    letter: str
    args: tuple


@node
class BareDone:
    # A commanded menu awaiting its report; occurs in positions only.
    done: DoneNode


@node
class DerivedRes:
    # ops: false() true() not(a) or(a,b) exists(var, body)
    #      acc(a,b) aor(a,b) aforall(var, body) aexists(var, body)
    op: str
    args: tuple


@node
class NamedRes:
    name: str
    body: "Resource"


Resource = Union[WithPotential, RImplies, RAnd, RForAll, Bang, LetterAtom,
                 DefRef, BareDone, DerivedRes, NamedRes]

AST = Union[Term, Fact, Process, Resource, DoNode, DoneNode]


# ---------------------------------------------------------------------------
# Derived-operator expansion

def fact_not(a):
    return DerivedFact("not", (a,))


def fact_verum():
    return DerivedFact("verum", ())


def expand_fact(op: str, args: tuple) -> Fact:
    if op == "not":
        return FImplies(args[0], Falsum())
    if op == "or":
        return FImplies(fact_not(args[0]), args[1])
    if op == "and":
        return fact_not(DerivedFact("or", (fact_not(args[0]), fact_not(args[1]))))
    if op == "iff":
        a, b = args
        return DerivedFact("and", (FImplies(a, b), FImplies(b, a)))
    if op == "verum":
        return fact_not(Falsum())
    if op == "exists":
        v, body = args
        return fact_not(FForAll(v, fact_not(body)))
    raise SyntaxError_(f"unknown fact operator {op!r}")


def proc_false():
    return DerivedProc("false", ())


def proc_true():
    return DerivedProc("true", ())


def proc_not(a):
    return DerivedProc("not", (a,))


def proc_and(a, b):
    return DerivedProc("and", (a, b))


def expand_proc(op: str, args: tuple) -> Process:
    if op == "false":
        return Always(Falsum())
    if op == "true":
        return First(fact_verum())
    if op == "not":
        return PImplies(args[0], proc_false())
    if op == "or":
        return PImplies(proc_not(args[0]), args[1])
    if op == "and":
        return proc_not(DerivedProc("or", (proc_not(args[0]), proc_not(args[1]))))
    if op == "iff":
        a, b = args
        return proc_and(PImplies(a, b), PImplies(b, a))
    if op == "exists":
        v, body = args
        return proc_not(PForAll(v, proc_not(body)))
    if op == "updown":
        return proc_and(First(args[0]), Upto(args[0]))
    if op == "down":
        return proc_and(First(args[0]), Inner(args[0]))
    if op == "wseq":
        a, b = args
        return DerivedProc("or", (a, Seq(a, b)))
    raise SyntaxError_(f"unknown process operator {op!r}")


def empty_do():
    return DoNode((), ())


def res_false():
    return DerivedRes("false", ())


def res_not(a):
    return DerivedRes("not", (a,))


def expand_res(op: str, args: tuple) -> Resource:
    if op == "false":
        return WithPotential(proc_false(), empty_do())
    if op == "true":
        return WithPotential(proc_true(), empty_do())
    if op == "not":
        return RImplies(args[0], res_false())
    if op == "or":
        return RImplies(res_not(args[0]), args[1])
    if op == "exists":
        v, body = args
        return res_not(RForAll(v, res_not(body)))
    if op == "acc":
        a, b = args
        return WithPotential(proc_true(),
                             DoNode((), (DoneNode((), (a,)), DoneNode((), (b,)))))
    if op == "aforall":
        v, body = args
        return WithPotential(proc_true(), DoNode((v,), (DoneNode((), (body,)),)))
    if op == "aor":
        a, b = args
        return res_not(DerivedRes("acc", (res_not(a), res_not(b))))
    if op == "aexists":
        v, body = args
        return res_not(DerivedRes("aforall", (v, res_not(body))))
    raise SyntaxError_(f"unknown resource operator {op!r}")


# Sugar ops that bind their first argument (a variable name).
BINDER_OPS = {"exists", "aforall", "aexists"}


def core(x: AST) -> AST:
    """Strip Named wrappers and expand sugar until a core constructor shows."""
    while True:
        if isinstance(x, (NamedFact, NamedProc, NamedRes)):
            x = x.body
        elif isinstance(x, DerivedFact):
            x = expand_fact(x.op, x.args)
        elif isinstance(x, DerivedProc):
            x = expand_proc(x.op, x.args)
        elif isinstance(x, DerivedRes):
            x = expand_res(x.op, x.args)
        else:
            return x


def expand_all(x: AST) -> AST:
    """Recursively expand every sugar/Named node into core constructors."""
    x = core(x)
    if isinstance(x, (Var, Const, Falsum, Atom, Equals, LetterAtom, DefRef, Sum)):
        return x
    if isinstance(x, FImplies):
        return FImplies(expand_all(x.left), expand_all(x.right))
    if isinstance(x, FForAll):
        return FForAll(x.var, expand_all(x.body))
    if isinstance(x, (First, Inner, Upto, Always)):
        return type(x)(expand_all(x.fact))
    if isinstance(x, PImplies):
        return PImplies(expand_all(x.left), expand_all(x.right))
    if isinstance(x, PForAll):
        return PForAll(x.var, expand_all(x.body))
    if isinstance(x, Seq):
        return Seq(expand_all(x.left), expand_all(x.right))
    if isinstance(x, (RepSeq, WRepSeq)):
        return type(x)(expand_all(x.body))
    if isinstance(x, LeadChain):
        links = tuple(ChainLink(l.after, l.before, expand_all(l.step)) for l in x.links)
        return LeadChain(expand_all(x.head), links, x.open_ended)
    if isinstance(x, InfConj):
        return InfConj(tuple((expand_all(p), u) for p, u in x.entries))
    if isinstance(x, WithPotential):
        return WithPotential(expand_all(x.effect), expand_all(x.potential))
    if isinstance(x, DoNode):
        return DoNode(x.bound, tuple(expand_all(b) for b in x.branches))
    if isinstance(x, DoneNode):
        return DoneNode(x.bound, tuple(expand_all(c) for c in x.choices))
    if isinstance(x, RImplies):
        return RImplies(expand_all(x.left), expand_all(x.right))
    if isinstance(x, RAnd):
        return RAnd(expand_all(x.left), expand_all(x.right))
    if isinstance(x, RForAll):
        return RForAll(x.var, expand_all(x.body))
    if isinstance(x, Bang):
        return Bang(expand_all(x.body))
    if isinstance(x, BareDone):
        return BareDone(expand_all(x.done))
    raise SyntaxError_(f"cannot expand {type(x).__name__}")


# ---------------------------------------------------------------------------
# Free variables and substitution

def free_vars(x: AST) -> frozenset:
    if isinstance(x, Var):
        return frozenset((x.name,))
    if isinstance(x, Const):
        return frozenset()
    if isinstance(x, Sum):
        return free_vars(x.left) | free_vars(x.right)
    if isinstance(x, (Falsum, DefRef)):
        return frozenset()
    if isinstance(x, (Atom, LetterAtom)):
        out = frozenset()
        for t in x.args:
            out |= free_vars(t)
        return out
    if isinstance(x, Equals):
        return free_vars(x.left) | free_vars(x.right)
    if isinstance(x, (FImplies, PImplies, Seq, RImplies, RAnd)):
        return free_vars(x.left) | free_vars(x.right)
    if isinstance(x, (FForAll, PForAll, RForAll)):
        return free_vars(x.body) - {x.var}
    if isinstance(x, (NamedFact, NamedProc, NamedRes)):
        return free_vars(x.body)
    if isinstance(x, (DerivedFact, DerivedProc, DerivedRes)):
        if x.op in BINDER_OPS:
            return free_vars(x.args[1]) - {x.args[0]}
        out = frozenset()
        for a in x.args:
            out |= free_vars(a)
        return out
    if isinstance(x, (First, Inner, Upto, Always)):
        return free_vars(x.fact)
    if isinstance(x, (RepSeq, WRepSeq)):
        return free_vars(x.body)
    if isinstance(x, LeadChain):
        out = free_vars(x.head)
        for l in x.links:
            out |= free_vars(l.step)
        return out
    if isinstance(x, InfConj):
        out = frozenset()
        for p, _ in x.entries:
            out |= free_vars(p)
        return out
    if isinstance(x, WithPotential):
        return free_vars(x.effect) | free_vars(x.potential)
    if isinstance(x, DoNode):
        out = frozenset()
        for b in x.branches:
            out |= free_vars(b)
        return out - set(x.bound)
    if isinstance(x, DoneNode):
        out = frozenset()
        for c in x.choices:
            out |= free_vars(c)
        return out - set(x.bound)
    if isinstance(x, Bang):
        return free_vars(x.body)
    if isinstance(x, BareDone):
        return free_vars(x.done)
    raise SyntaxError_(f"free_vars: unknown node {type(x).__name__}")


def is_closed(x: AST) -> bool:
    return not free_vars(x)


def _shadow(mapping: Mapping[str, Term], names) -> dict:
    out = {k: v for k, v in mapping.items() if k not in names}
    for v in out.values():
        clash = free_vars(v) & set(names)
        if clash:
            raise SyntaxError_(f"substitution would capture {sorted(clash)}")
    return out


def substitute(x: AST, mapping: Mapping[str, Term]) -> AST:
    """Replace free variables by terms; binders shadow, capture is rejected."""
    if not mapping:
        return x
    if isinstance(x, Var):
        return mapping.get(x.name, x)
    if isinstance(x, (Const, Falsum, DefRef)):
        return x
    if isinstance(x, Sum):
        return Sum(substitute(x.left, mapping), substitute(x.right, mapping))
    if isinstance(x, (Atom, LetterAtom)):
        return type(x)(x.letter, tuple(substitute(t, mapping) for t in x.args))
    if isinstance(x, Equals):
        return Equals(substitute(x.left, mapping), substitute(x.right, mapping))
    if isinstance(x, (FImplies, PImplies, Seq, RImplies, RAnd)):
        return type(x)(substitute(x.left, mapping), substitute(x.right, mapping))
    if isinstance(x, (FForAll, PForAll, RForAll)):
        inner = _shadow(mapping, (x.var,))
        return type(x)(x.var, substitute(x.body, inner))
    if isinstance(x, (NamedFact, NamedProc, NamedRes)):
        body = substitute(x.body, mapping)
        return x if body is x.body else body
    if isinstance(x, (DerivedFact, DerivedProc, DerivedRes)):
        if x.op in BINDER_OPS:
            inner = _shadow(mapping, (x.args[0],))
            return type(x)(x.op, (x.args[0], substitute(x.args[1], inner)))
        return type(x)(x.op, tuple(substitute(a, mapping) for a in x.args))
    if isinstance(x, (First, Inner, Upto, Always)):
        return type(x)(substitute(x.fact, mapping))
    if isinstance(x, (RepSeq, WRepSeq)):
        return type(x)(substitute(x.body, mapping))
    if isinstance(x, LeadChain):
        links = tuple(ChainLink(l.after, l.before, substitute(l.step, mapping))
                      for l in x.links)
        return LeadChain(substitute(x.head, mapping), links, x.open_ended)
    if isinstance(x, InfConj):
        return InfConj(tuple((substitute(p, mapping), u) for p, u in x.entries))
    if isinstance(x, WithPotential):
        return WithPotential(substitute(x.effect, mapping),
                             substitute(x.potential, mapping))
    if isinstance(x, DoNode):
        inner = _shadow(mapping, x.bound)
        return DoNode(x.bound, tuple(substitute(b, inner) for b in x.branches))
    if isinstance(x, DoneNode):
        inner = _shadow(mapping, x.bound)
        return DoneNode(x.bound, tuple(substitute(c, inner) for c in x.choices))
    if isinstance(x, Bang):
        return Bang(substitute(x.body, mapping))
    if isinstance(x, BareDone):
        return BareDone(substitute(x.done, mapping))
    raise SyntaxError_(f"substitute: unknown node {type(x).__name__}")


# ---------------------------------------------------------------------------
# Classifiers

def is_finitary_process(p: Process) -> bool:
    """True when p uses only the finitary constructors (no chains, no InfConj)."""
    p = core(p)
    if isinstance(p, (First, Inner, Upto, Always)):
        return True
    if isinstance(p, (PImplies, Seq)):
        return is_finitary_process(p.left) and is_finitary_process(p.right)
    if isinstance(p, PForAll):
        return is_finitary_process(p.body)
    if isinstance(p, (RepSeq, WRepSeq)):
        return is_finitary_process(p.body)
    return False


def is_well_formed_resource(r: Resource, allow_letters: bool = True,
                            allow_bare_done: bool = False) -> bool:
    """Total shape check: a resource is an implication/conjunction/forall
    combination of effect-prefixed DO-resources, letters, bangs and defRefs."""
    r = core(r)
    if isinstance(r, WithPotential):
        return is_finitary_process(r.effect) and _well_formed_potential(
            r.potential, allow_letters)
    if isinstance(r, (RImplies, RAnd)):
        return (is_well_formed_resource(r.left, allow_letters, allow_bare_done)
                and is_well_formed_resource(r.right, allow_letters, allow_bare_done))
    if isinstance(r, RForAll):
        return is_well_formed_resource(r.body, allow_letters, allow_bare_done)
    if isinstance(r, Bang):
        return is_well_formed_resource(r.body, allow_letters, allow_bare_done)
    if isinstance(r, LetterAtom):
        return allow_letters
    if isinstance(r, DefRef):
        return True
    if isinstance(r, BareDone):
        return allow_bare_done and all(
            is_well_formed_resource(c, allow_letters, allow_bare_done)
            for c in core(r.done).choices)
    return False


def _well_formed_potential(pot, allow_letters: bool) -> bool:
    pot = core(pot)
    if isinstance(pot, DefRef):
        return True
    if not isinstance(pot, DoNode):
        return False
    for b in pot.branches:
        b = core(b)
        if not isinstance(b, DoneNode) or not b.choices:
            return False
        if not all(is_well_formed_resource(c, allow_letters) for c in b.choices):
            return False
    return True


def is_safe_resource(r: Resource) -> bool:
    """Safe: a trivial-effect DO-resource, or an implication/conjunction/
    forall combination of such."""
    r = core(r)
    if isinstance(r, WithPotential):
        return expand_all(r.effect) == expand_all(proc_true())
    if isinstance(r, (RImplies, RAnd)):
        return is_safe_resource(r.left) and is_safe_resource(r.right)
    if isinstance(r, RForAll):
        return is_safe_resource(r.body)
    return False


def resource_letters(r: Resource) -> dict:
    """Letters occurring in a resource scheme, mapped to their arity."""
    out: dict = {}

    def walk(x):
        x = core(x)
        if isinstance(x, LetterAtom):
            n = len(x.args)
            if out.setdefault(x.letter, n) != n:
                raise SyntaxError_(f"letter {x.letter} used at two arities")
        elif isinstance(x, (RImplies, RAnd)):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, RForAll):
            walk(x.body)
        elif isinstance(x, Bang):
            walk(x.body)
        elif isinstance(x, WithPotential):
            pot = core(x.potential)
            if isinstance(pot, DoNode):
                for b in pot.branches:
                    for c in core(b).choices:
                        walk(c)
        elif isinstance(x, BareDone):
            for c in core(x.done).choices:
                walk(c)

    walk(r)
    return out


def sequencing_depth(p: Process) -> int:
    """Bound on the window widths the process can tell apart; drives the
    probe offsets used by the canonical evaluator."""
    p = core(p)
    if isinstance(p, (First, Inner, Upto, Always)):
        return 1
    if isinstance(p, PImplies):
        return max(sequencing_depth(p.left), sequencing_depth(p.right))
    if isinstance(p, PForAll):
        return sequencing_depth(p.body)
    if isinstance(p, Seq):
        return sequencing_depth(p.left) + sequencing_depth(p.right)
    if isinstance(p, (RepSeq, WRepSeq)):
        return sequencing_depth(p.body) + 1
    if isinstance(p, LeadChain):
        total = sequencing_depth(p.head)
        for l in p.links:
            total += sequencing_depth(l.step)
        return total + len(p.links)
    if isinstance(p, InfConj):
        return max((sequencing_depth(q) for q, _ in p.entries), default=1)
    raise SyntaxError_(f"sequencing_depth: unknown node {type(p).__name__}")


# ---------------------------------------------------------------------------
# Definition environments

@dataclass
class DefinitionEnv:
    """Named abbreviations plus the recursive DO-node definitions.

    Aliases (facts / procs / resources) are expanded at parse time and only
    remembered here for name resolution.  ``dos`` holds the recursive
    definitions, which stay unexpanded in ASTs as DefRef nodes.
    """

    facts: dict = None
    procs: dict = None
    resources: dict = None
    dos: dict = None
    arities: dict = None

    def __post_init__(self):
        self.facts = dict(self.facts or {})
        self.procs = dict(self.procs or {})
        self.resources = dict(self.resources or {})
        self.dos = dict(self.dos or {})
        self.arities = dict(self.arities or {})

    def resolve(self, name: str) -> DoNode:
        try:
            return self.dos[name]
        except KeyError:
            raise SyntaxError_(f"unknown definition name {name!r}") from None

    def register_arity(self, letter: str, arity: int):
        if self.arities.setdefault(letter, arity) != arity:
            raise SyntaxError_(
                f"arity mismatch: {letter} declared with arity "
                f"{self.arities[letter]}, used with {arity}")

    def validate(self):
        """Referenced names present; every recursive body has the allowed
        shape: a DO-node whose leaf resources are effect-prefixed defRefs."""
        for name, body in self.dos.items():
            body = core(body)
            if not isinstance(body, DoNode):
                raise SyntaxError_(f"definition {name}: body is not a DO-node")
            for b in body.branches:
                b = core(b)
                if not isinstance(b, DoneNode) or not b.choices:
                    raise SyntaxError_(f"definition {name}: malformed branch")
                for c in b.choices:
                    c = core(c)
                    if not isinstance(c, WithPotential):
                        raise SyntaxError_(
                            f"definition {name}: choice is not an "
                            f"effect-prefixed DO-resource")
                    if not is_finitary_process(c.effect):
                        raise SyntaxError_(
                            f"definition {name}: non-finitary effect")
                    pot = core(c.potential)
                    if not isinstance(pot, DefRef):
                        raise SyntaxError_(
                            f"definition {name}: choice potential must name "
                            f"a recursive definition")
                    if pot.name not in self.dos:
                        raise SyntaxError_(
                            f"definition {name}: unknown definition name "
                            f"{pot.name!r}")


def resolve_potential(pot, env: Optional[DefinitionEnv]) -> DoNode:
    pot = core(pot)
    if isinstance(pot, DoNode):
        return pot
    if isinstance(pot, DefRef):
        if env is None:
            raise SyntaxError_(f"unknown definition name {pot.name!r}")
        return core(env.resolve(pot.name))
    raise SyntaxError_(f"not a potential: {type(pot).__name__}")


def expand_once(res: Resource, env: Optional[DefinitionEnv]) -> AST:
    """One-level unfolding: resolve a top defRef, peel a bang one conjunct."""
    stripped = core(res)
    if isinstance(stripped, DefRef):
        return resolve_potential(stripped, env)
    if isinstance(stripped, Bang):
        return RAnd(stripped.body, stripped)
    if isinstance(stripped, WithPotential):
        pot = core(stripped.potential)
        if isinstance(pot, DefRef):
            return WithPotential(stripped.effect, resolve_potential(pot, env))
    return res


# ---------------------------------------------------------------------------
# Resource schemata and substitutions

class Substitution:
    """Maps n-ary resource letters to resources with n designated variables."""

    def __init__(self, images: Mapping[str, tuple], safe: bool = False):
        # images: letter -> (var name tuple, Resource)
        self.images = dict(images)
        self.safe = safe
        for letter, (params, body) in self.images.items():
            fv = free_vars(body)
            if fv != frozenset(params):
                raise SyntaxError_(
                    f"image of {letter} must have exactly the designated "
                    f"free variables {params}, got {sorted(fv)}")
            if safe and not is_safe_resource(body):
                raise SyntaxError_(f"image of {letter} is not a safe resource")

    def image(self, letter: str, arity: int):
        try:
            params, body = self.images[letter]
        except KeyError:
            raise SyntaxError_(f"substitution missing letter {letter!r}") from None
        if len(params) != arity:
            raise SyntaxError_(f"letter {letter} arity mismatch in substitution")
        return params, body


def apply_substitution(scheme: Resource, tau: Substitution,
                       _schema_vars: Optional[frozenset] = None) -> Resource:
    """Replace every resource letter by its image, structurally."""
    if _schema_vars is None:
        _schema_vars = free_vars(scheme)
        for _, (params, body) in tau.images.items():
            clash = (free_vars(body) - set(params)) & _schema_vars
            if clash:
                raise SyntaxError_(
                    f"substitution images reuse schema variables {sorted(clash)}")
    x = scheme
    if isinstance(x, (NamedRes, DerivedRes)):
        x = core(x)
    if isinstance(x, LetterAtom):
        params, body = tau.image(x.letter, len(x.args))
        return substitute(body, dict(zip(params, x.args)))
    if isinstance(x, RImplies):
        return RImplies(apply_substitution(x.left, tau, _schema_vars),
                        apply_substitution(x.right, tau, _schema_vars))
    if isinstance(x, RAnd):
        return RAnd(apply_substitution(x.left, tau, _schema_vars),
                    apply_substitution(x.right, tau, _schema_vars))
    if isinstance(x, RForAll):
        return RForAll(x.var, apply_substitution(x.body, tau, _schema_vars))
    if isinstance(x, Bang):
        return Bang(apply_substitution(x.body, tau, _schema_vars))
    if isinstance(x, DefRef):
        return x
    if isinstance(x, WithPotential):
        pot = core(x.potential)
        if isinstance(pot, DefRef):
            return x
        branches = tuple(
            DoneNode(core(b).bound,
                     tuple(apply_substitution(c, tau, _schema_vars)
                           for c in core(b).choices))
            for b in pot.branches)
        return WithPotential(x.effect, DoNode(pot.bound, branches))
    if isinstance(x, BareDone):
        d = core(x.done)
        return BareDone(DoneNode(d.bound,
                                 tuple(apply_substitution(c, tau, _schema_vars)
                                       for c in d.choices)))
    raise SyntaxError_(f"apply_substitution: unknown node {type(x).__name__}")
