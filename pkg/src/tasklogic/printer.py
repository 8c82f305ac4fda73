"""Canonical text rendering of ASTs.

``parse(print(x))`` is structurally equal to ``x`` for everything the
grammar covers.  Sugar and Named nodes print as their surface form, never
expanded.  Chain and infinite-conjunction nodes (which only arise from
plays) get a readable rendering; chains are in the grammar, infinite
conjunctions are output-only.
"""

from __future__ import annotations

from . import syntax as S

# Tier numbers; a child is parenthesized when its tier is below what the
# context requires.  Quantifier-like forms are weakest (tier 0) and extend
# maximally to the right.
_ATOM = 50
_UNARY = 40
_AND = 30
_OR = 20
_SEQ = 15          # process sequencing sits between .\/ and .->
_IMPLIES = 10
_QUANT = 0


def print_term(t) -> str:
    if isinstance(t, S.Var):
        return t.name
    if isinstance(t, S.Const):
        return str(t.value)
    if isinstance(t, S.Sum):
        return f"{print_term(t.left)}+{print_term(t.right)}"
    raise S.SyntaxError_(f"print_term: {type(t).__name__}")


def _args(args) -> str:
    return "(" + ", ".join(print_term(a) for a in args) + ")"


def _wrap(text: str, tier: int, need: int) -> str:
    return f"({text})" if tier < need else text


# ---------------------------------------------------------------------------
# Facts

def print_fact(f, need: int = 0) -> str:
    text, tier = _fact(f)
    return _wrap(text, tier, need)


def _fact(f):
    if isinstance(f, S.NamedFact):
        return f.name, _ATOM
    if isinstance(f, S.Falsum):
        return "ff", _ATOM
    if isinstance(f, S.Atom):
        return f.letter + _args(f.args), _ATOM
    if isinstance(f, S.Equals):
        return f"{print_term(f.left)} = {print_term(f.right)}", _ATOM
    if isinstance(f, S.FImplies):
        return (f"{print_fact(f.left, _IMPLIES + 1)} -> "
                f"{print_fact(f.right, _IMPLIES)}"), _IMPLIES
    if isinstance(f, S.FForAll):
        return f"all {f.var}. {print_fact(f.body)}", _QUANT
    if isinstance(f, S.DerivedFact):
        op, a = f.op, f.args
        if op == "not":
            return "~" + print_fact(a[0], _UNARY), _UNARY
        if op == "verum":
            return "tt", _ATOM
        if op == "and":
            return (f"{print_fact(a[0], _AND)} & "
                    f"{print_fact(a[1], _AND + 1)}"), _AND
        if op == "or":
            return (f"{print_fact(a[0], _OR)} \\/ "
                    f"{print_fact(a[1], _OR + 1)}"), _OR
        if op == "iff":
            return (f"{print_fact(a[0], _IMPLIES + 1)} <-> "
                    f"{print_fact(a[1], _IMPLIES + 1)}"), _IMPLIES
        if op == "exists":
            return f"ex {a[0]}. {print_fact(a[1])}", _QUANT
    raise S.SyntaxError_(f"print_fact: {type(f).__name__}")


# ---------------------------------------------------------------------------
# Processes

def print_proc(p, need: int = 0) -> str:
    text, tier = _proc(p)
    return _wrap(text, tier, need)


def _proc(p):
    if isinstance(p, S.NamedProc):
        return p.name, _ATOM
    if isinstance(p, S.First):
        return "first " + print_fact(p.fact, _UNARY), _UNARY
    if isinstance(p, S.Inner):
        return "inner " + print_fact(p.fact, _UNARY), _UNARY
    if isinstance(p, S.Upto):
        return "upto " + print_fact(p.fact, _UNARY), _UNARY
    if isinstance(p, S.Always):
        return "box " + print_fact(p.fact, _UNARY), _UNARY
    if isinstance(p, S.PImplies):
        return (f"{print_proc(p.left, _IMPLIES + 1)} .-> "
                f"{print_proc(p.right, _IMPLIES)}"), _IMPLIES
    if isinstance(p, S.PForAll):
        return f".all {p.var}. {print_proc(p.body)}", _QUANT
    if isinstance(p, S.Seq):
        return (f"{print_proc(p.left, _SEQ)} |> "
                f"{print_proc(p.right, _SEQ + 1)}"), _SEQ
    if isinstance(p, S.RepSeq):
        return "rep " + print_proc(p.body, _UNARY), _UNARY
    if isinstance(p, S.WRepSeq):
        return "wrep " + print_proc(p.body, _UNARY), _UNARY
    if isinstance(p, S.LeadChain):
        parts = [print_proc(p.head, _SEQ)]
        for l in p.links:
            parts.append(f"~>[{l.after},{l.before}] {print_proc(l.step, _SEQ + 1)}")
        text = " ".join(parts)
        if p.open_ended:
            text += " ~> ..."
        return text, _SEQ
    if isinstance(p, S.InfConj):
        inner = ", ".join(print_proc(q) + (" ..." if u else "")
                          for q, u in p.entries)
        return f"[.&]({inner})", _ATOM
    if isinstance(p, S.DerivedProc):
        op, a = p.op, p.args
        if op == "false":
            return ".ff", _ATOM
        if op == "true":
            return ".tt", _ATOM
        if op == "not":
            return ".~" + print_proc(a[0], _UNARY), _UNARY
        if op == "and":
            return (f"{print_proc(a[0], _AND)} .& "
                    f"{print_proc(a[1], _AND + 1)}"), _AND
        if op == "or":
            return (f"{print_proc(a[0], _OR)} .\\/ "
                    f"{print_proc(a[1], _OR + 1)}"), _OR
        if op == "iff":
            return (f"{print_proc(a[0], _IMPLIES + 1)} .<-> "
                    f"{print_proc(a[1], _IMPLIES + 1)}"), _IMPLIES
        if op == "exists":
            return f".ex {a[0]}. {print_proc(a[1])}", _QUANT
        if op == "updown":
            return "updown " + print_fact(a[0], _UNARY), _UNARY
        if op == "down":
            return "down " + print_fact(a[0], _UNARY), _UNARY
        if op == "wseq":
            return (f"{print_proc(a[0], _SEQ)} |>= "
                    f"{print_proc(a[1], _SEQ + 1)}"), _SEQ
    raise S.SyntaxError_(f"print_proc: {type(p).__name__}")


# ---------------------------------------------------------------------------
# Resources / positions

def print_res(r, need: int = 0) -> str:
    text, tier = _res(r)
    return _wrap(text, tier, need)


def _effect_text(p) -> str:
    # Bare when a prefix-unary chain or alias; parenthesized otherwise.
    text, tier = _proc(p)
    return text if tier >= _UNARY else f"({text})"


def _potential_text(pot) -> str:
    if isinstance(pot, S.DefRef):
        return " " + pot.name
    if isinstance(pot, S.DoNode):
        head = " >>"
        if pot.bound:
            head += " " + ",".join(pot.bound)
        if not pot.branches:
            return head
        menu = ", ".join(print_done(b) for b in pot.branches)
        return f"{head} ({menu})"
    raise S.SyntaxError_(f"print potential: {type(pot).__name__}")


def print_done(d: S.DoneNode) -> str:
    head = "<<"
    if d.bound:
        head += " " + ",".join(d.bound) + " "
    return f"{head}(" + ", ".join(print_res(c) for c in d.choices) + ")"


def _res(r):
    if isinstance(r, S.NamedRes):
        return r.name, _ATOM
    if isinstance(r, S.LetterAtom):
        if not r.args:
            return r.letter, _ATOM
        return r.letter + _args(r.args), _ATOM
    if isinstance(r, S.DefRef):
        return r.name, _ATOM
    if isinstance(r, S.WithPotential):
        return _effect_text(r.effect) + _potential_text(r.potential), _ATOM
    if isinstance(r, S.BareDone):
        return print_done(r.done), _ATOM
    if isinstance(r, S.RImplies):
        return (f"{print_res(r.left, _IMPLIES + 1)} :-> "
                f"{print_res(r.right, _IMPLIES)}"), _IMPLIES
    if isinstance(r, S.RAnd):
        return (f"{print_res(r.left, _AND)} :& "
                f"{print_res(r.right, _AND + 1)}"), _AND
    if isinstance(r, S.RForAll):
        return f":all {r.var}. {print_res(r.body)}", _QUANT
    if isinstance(r, S.Bang):
        return "!" + print_res(r.body, _UNARY), _UNARY
    if isinstance(r, S.DerivedRes):
        op, a = r.op, r.args
        if op == "false":
            return ":ff", _ATOM
        if op == "true":
            return ":tt", _ATOM
        if op == "not":
            return ":~" + print_res(a[0], _UNARY), _UNARY
        if op == "or":
            return (f"{print_res(a[0], _OR)} :\\/ "
                    f"{print_res(a[1], _OR + 1)}"), _OR
        if op == "exists":
            return f":ex {a[0]}. {print_res(a[1])}", _QUANT
        if op == "acc":
            return (f"{print_res(a[0], _AND)} <&> "
                    f"{print_res(a[1], _AND + 1)}"), _AND
        if op == "aor":
            return (f"{print_res(a[0], _OR)} <\\/> "
                    f"{print_res(a[1], _OR + 1)}"), _OR
        if op == "aforall":
            return f"<all> {a[0]}. {print_res(a[1])}", _QUANT
        if op == "aexists":
            return f"<ex> {a[0]}. {print_res(a[1])}", _QUANT
    raise S.SyntaxError_(f"print_res: {type(r).__name__}")


def print_ast(x) -> str:
    """Render any level; dispatches on node family."""
    if isinstance(x, (S.Var, S.Const, S.Sum)):
        return print_term(x)
    if isinstance(x, (S.Falsum, S.Atom, S.Equals, S.FImplies, S.FForAll,
                      S.DerivedFact, S.NamedFact)):
        return print_fact(x)
    if isinstance(x, (S.First, S.Inner, S.Upto, S.Always, S.PImplies,
                      S.PForAll, S.Seq, S.RepSeq, S.WRepSeq, S.LeadChain,
                      S.InfConj, S.DerivedProc, S.NamedProc)):
        return print_proc(x)
    if isinstance(x, S.DoneNode):
        return print_done(x)
    if isinstance(x, S.DoNode):
        return _potential_text(x).lstrip()
    return print_res(x)
