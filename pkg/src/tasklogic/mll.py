"""Universal validity for the multiplicative fragment via binary tautologies.

An MLL formula — implications and conjunctions over 0-ary resource letters
and :ff — is universally valid iff it is a binary tautology: an instance
of a classical tautology in which every letter occurs at most twice, once
positively and once negatively.  The decision enumerates matchings of
opposite-polarity occurrences of each letter, relabels matched pairs to a
shared fresh atom and leftovers to distinct fresh atoms, and accepts as
soon as one relabeling passes a truth table.  The accepting matching
directly yields the copycat strategy that wins every play.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from . import syntax as S
from .games import Path
from .strategies import PairingSlave


class NotMll(S.SyntaxError_):
    """The expression falls outside the multiplicative fragment."""


@dataclass(frozen=True)
class Occurrence:
    path: Path
    letter: str
    positive: bool


@dataclass(frozen=True)
class Matching:
    pairs: tuple       # of (Path, Path), positive first
    leftovers: tuple   # of Path


def validate_mll(res) -> None:
    """Check the shape: letters are 0-ary, connectives only :-> and :&."""
    r = res
    if isinstance(r, (S.NamedRes,)):
        return validate_mll(r.body)
    if isinstance(r, S.DerivedRes) and r.op == "false":
        return
    if isinstance(r, S.LetterAtom):
        if r.args:
            raise NotMll("MLL letters must be 0-ary")
        return
    if isinstance(r, S.RImplies) or isinstance(r, S.RAnd):
        validate_mll(r.left)
        validate_mll(r.right)
        return
    raise NotMll(f"not an MLL node: {type(r).__name__}")


def occurrences(res, prefix: Path = (), positive: bool = True) -> list:
    """Letter occurrences with their paths and polarities, left to right."""
    r = res
    if isinstance(r, S.NamedRes):
        return occurrences(r.body, prefix, positive)
    if isinstance(r, S.DerivedRes) and r.op == "false":
        return []
    if isinstance(r, S.LetterAtom):
        return [Occurrence(prefix, r.letter, positive)]
    if isinstance(r, S.RImplies):
        return (occurrences(r.left, prefix + ("l",), not positive)
                + occurrences(r.right, prefix + ("r",), positive))
    if isinstance(r, S.RAnd):
        return (occurrences(r.left, prefix + ("a",), positive)
                + occurrences(r.right, prefix + ("b",), positive))
    raise NotMll(f"not an MLL node: {type(r).__name__}")


def _truth_table(res, labels: dict) -> bool:
    """Tautology test for the relabeled formula; ``labels`` maps occurrence
    paths to atom names, :ff stays constantly false."""
    atoms = sorted(set(labels.values()))
    if len(atoms) > 20:
        raise NotMll("too many distinct atoms for a truth table")

    def ev(r, prefix, val):
        if isinstance(r, S.NamedRes):
            return ev(r.body, prefix, val)
        if isinstance(r, S.DerivedRes) and r.op == "false":
            return False
        if isinstance(r, S.LetterAtom):
            return val[labels[prefix]]
        if isinstance(r, S.RImplies):
            return (not ev(r.left, prefix + ("l",), val)
                    or ev(r.right, prefix + ("r",), val))
        if isinstance(r, S.RAnd):
            return (ev(r.left, prefix + ("a",), val)
                    and ev(r.right, prefix + ("b",), val))
        raise NotMll(f"not an MLL node: {type(r).__name__}")

    for bits in itertools.product((False, True), repeat=len(atoms)):
        val = dict(zip(atoms, bits))
        if not ev(res, (), val):
            return False
    return True


def is_classical_tautology(res) -> bool:
    """Truth-table tautology where every letter occurrence of the same
    letter shares one atom (the plain classical reading)."""
    validate_mll(res)
    occs = occurrences(res)
    labels = {o.path: o.letter for o in occs}
    return _truth_table(res, labels)


def _letter_matchings(pos_paths, neg_paths):
    """All injective partial matchings between the two occurrence lists,
    in a deterministic lexicographic order."""
    out = []
    max_k = min(len(pos_paths), len(neg_paths))
    for k in range(max_k, -1, -1):
        for pos_sel in itertools.combinations(range(len(pos_paths)), k):
            for neg_perm in itertools.permutations(range(len(neg_paths)), k):
                out.append(tuple((pos_paths[i], neg_paths[j])
                                 for i, j in zip(pos_sel, neg_perm)))
    return out


def decide_binary_tautology(res) -> Optional[Matching]:
    """The accepting matching, or None when no relabeling is a tautology.

    Larger matchings are tried first so the returned strategy pairs as many
    occurrences as possible; ties are broken lexicographically by path."""
    validate_mll(res)
    occs = occurrences(res)
    by_letter = {}
    for o in occs:
        by_letter.setdefault(o.letter, ([], []))[0 if o.positive else 1].append(o.path)
    letters = sorted(by_letter)
    per_letter = [_letter_matchings(*by_letter[ltr]) for ltr in letters]
    all_paths = [o.path for o in occs]
    for combo in itertools.product(*per_letter):
        pairs = tuple(pr for group in combo for pr in group)
        matched = {p for pr in pairs for p in pr}
        labels = {}
        for i, pr in enumerate(sorted(pairs)):
            labels[pr[0]] = f"m{i}"
            labels[pr[1]] = f"m{i}"
        leftovers = tuple(p for p in all_paths if p not in matched)
        for i, p in enumerate(leftovers):
            labels[p] = f"u{i}"
        if _truth_table(res, labels):
            return Matching(tuple(sorted(pairs)), leftovers)
    return None


def strategy_from_matching(res, matching: Matching, tau: S.Substitution,
                           env=None, domain_max: int = 31) -> PairingSlave:
    """Lift the matching through a substitution into a copycat strategy for
    the instantiated resource.  Any accepting matching is allowed."""
    if not _accepts(res, matching):
        raise S.SyntaxError_("matching is not accepting")
    instance = S.apply_substitution(res, tau)
    return PairingSlave(matching.pairs, initial=instance, env=env,
                        domain_max=domain_max)


def _accepts(res, matching: Matching) -> bool:
    occs = occurrences(res)
    all_paths = [o.path for o in occs]
    matched = {p for pr in matching.pairs for p in pr}
    labels = {}
    for i, pr in enumerate(sorted(matching.pairs)):
        labels[pr[0]] = f"m{i}"
        labels[pr[1]] = f"m{i}"
    for i, p in enumerate(p for p in all_paths if p not in matched):
        labels[p] = f"u{i}"
    return _truth_table(res, labels)


# ---------------------------------------------------------------------------
# Independent brute-force oracle (kept here so the CLI can expose it; the
# acceptance suite compares it against decide_binary_tautology).

def binary_tautology_oracle(res) -> bool:
    """Enumerate every relabeling that uses each fresh atom at most twice —
    blocks of occurrences of one letter, no polarity filtering — and test
    each by truth table."""
    validate_mll(res)
    occs = occurrences(res)
    paths = [o.path for o in occs]
    letter_of = {o.path: o.letter for o in occs}

    def partitions(items):
        if not items:
            yield []
            return
        head, rest = items[0], items[1:]
        for sub in partitions(rest):
            yield [[head]] + sub
        for i, other in enumerate(rest):
            if letter_of[head] == letter_of[other]:
                remaining = rest[:i] + rest[i + 1:]
                for sub in partitions(remaining):
                    yield [[head, other]] + sub

    for part in partitions(paths):
        labels = {}
        for i, block in enumerate(part):
            for p in block:
                labels[p] = f"g{i}"
        if _truth_table(res, labels):
            return True
    return False
