"""Discrete time, situations, step worlds, and classical fact evaluation.

Time moments are the naturals; ``INF`` marks the right end of unbounded
intervals.  A situation is the set of ground atoms true at a moment; a
step world is piecewise constant and keeps its last situation forever.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import syntax as S

INF = float("inf")

# A ground atom is (letter, (constants...)).
GroundAtom = tuple


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: object  # int or INF

    def __post_init__(self):
        if not (self.lo >= 0 and self.lo < self.hi):
            raise ValueError(f"not an interval: ({self.lo}, {self.hi})")

    def __str__(self):
        hi = "inf" if self.hi == INF else str(self.hi)
        return f"({self.lo},{hi})"


@dataclass(frozen=True)
class StepWorld:
    """Segments (start, situation); first start is 0, last persists forever."""

    segments: tuple  # of (int, frozenset[GroundAtom])

    def __post_init__(self):
        if not self.segments or self.segments[0][0] != 0:
            raise ValueError("world must start at moment 0")
        starts = [s for s, _ in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must strictly increase")

    def situation_at(self, t) -> frozenset:
        if t == INF:
            return self.segments[-1][1]
        sit = self.segments[0][1]
        for start, s in self.segments:
            if start <= t:
                sit = s
            else:
                break
        return sit

    @property
    def change_points(self) -> tuple:
        return tuple(s for s, _ in self.segments[1:])

    @property
    def tail_start(self) -> int:
        return self.segments[-1][0]

    def regions_over(self, lo, hi, include_hi: bool):
        """Situations of the regions meeting (lo, hi) or (lo, hi]; each
        region is reported once."""
        out = []
        bounds = [s for s, _ in self.segments] + [INF]
        for (start, sit), nxt in zip(self.segments, bounds[1:]):
            # region [start, nxt)
            left = max(start, lo + 1)
            right = nxt - 1 if nxt != INF else INF
            if hi != INF:
                right = min(right, hi if include_hi else hi - 1)
            if left <= right:
                out.append(sit)
        return out


def atom_key(letter: str, args: Iterable[int]) -> GroundAtom:
    return (letter, tuple(args))


def eval_term(t, domain_max: int) -> Optional[int]:
    """Value of a ground term; None when a sum exceeds the domain."""
    if isinstance(t, S.Const):
        return t.value if t.value <= domain_max else None
    if isinstance(t, S.Sum):
        a = eval_term(t.left, domain_max)
        b = eval_term(t.right, domain_max)
        if a is None or b is None:
            return None
        v = a + b
        return v if v <= domain_max else None
    if isinstance(t, S.Var):
        raise S.SyntaxError_(f"unbound variable {t.name!r}")
    raise S.SyntaxError_(f"eval_term: {type(t).__name__}")


def holds_fact(situation: frozenset, fact, domain_max: int) -> bool:
    """Classical truth of a closed fact in a situation; quantifiers range
    over constants 0..domain_max, overflowing sums falsify their atom."""
    f = S.core(fact)
    if isinstance(f, S.Falsum):
        return False
    if isinstance(f, S.Atom):
        vals = [eval_term(t, domain_max) for t in f.args]
        if any(v is None for v in vals):
            return False
        return (f.letter, tuple(vals)) in situation
    if isinstance(f, S.Equals):
        a = eval_term(f.left, domain_max)
        b = eval_term(f.right, domain_max)
        return a is not None and b is not None and a == b
    if isinstance(f, S.FImplies):
        return (not holds_fact(situation, f.left, domain_max)
                or holds_fact(situation, f.right, domain_max))
    if isinstance(f, S.FForAll):
        for c in range(domain_max + 1):
            inst = S.substitute(f.body, {f.var: S.Const(c)})
            if not holds_fact(situation, inst, domain_max):
                return False
        return True
    raise S.SyntaxError_(f"holds_fact: {type(f).__name__}")


def random_world(seed: int, domain_max: int, max_segments: int,
                 atom_pool: Iterable[GroundAtom]) -> StepWorld:
    """Deterministic fuzzing worlds: random segment count, strictly
    increasing change points, random situations from the pool."""
    if max_segments < 1:
        raise ValueError("max_segments must be >= 1")
    rng = random.Random(seed)
    pool = sorted(set(atom_pool))
    n = rng.randint(1, max_segments)
    points = sorted(rng.sample(range(1, max(2, 4 * max_segments)), n - 1)) \
        if n > 1 else []
    segments = []
    for start in [0] + points:
        sit = frozenset(a for a in pool if rng.random() < 0.5)
        segments.append((start, sit))
    return StepWorld(tuple(segments))


# ---------------------------------------------------------------------------
# World files: `domain <N>` header, then one `@<time>: atom, atom` per segment.

_ATOM_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*$")


def parse_atom(text: str) -> GroundAtom:
    m = _ATOM_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad atom {text!r}")
    args = m.group(2)
    if args is None or args.strip() == "":
        return (m.group(1), ())
    return (m.group(1), tuple(int(a) for a in args.split(",")))


def format_atom(atom: GroundAtom) -> str:
    letter, args = atom
    return f"{letter}({','.join(str(a) for a in args)})"


def load_world(text: str) -> tuple:
    """Returns (world, domain_max)."""
    lines = [ln.split("--")[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("domain"):
        raise ValueError("world file must start with a 'domain <N>' header")
    domain_max = int(lines[0].split()[1])
    segments = []
    for ln in lines[1:]:
        m = re.match(r"@(\d+)\s*:\s*(.*)$", ln)
        if not m:
            raise ValueError(f"bad segment line {ln!r}")
        start = int(m.group(1))
        body = m.group(2).strip()
        atoms = frozenset(parse_atom(a) for a in _split_atoms(body))
        segments.append((start, atoms))
    return StepWorld(tuple(segments)), domain_max


def _split_atoms(body: str):
    out, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur))
    return [a for a in out if a.strip()]


def dump_world(world: StepWorld, domain_max: int) -> str:
    out = [f"domain {domain_max}"]
    for start, sit in world.segments:
        atoms = ", ".join(format_atom(a) for a in sorted(sit))
        out.append(f"@{start}: {atoms}")
    return "\n".join(out) + "\n"
