"""Truth of closed processes on intervals of step worlds.

Two evaluators:

* ``ProcessEvaluator`` — the production path.  Existential cut points are
  drawn from a canonical candidate set: world change points inside the
  interval plus a band of consecutive moments at the start of every
  constant region and next to the interval ends.  Within a constant
  region fact truth does not depend on the exact moment, so the band
  width only has to cover the window widths the process can tell apart
  (``sequencing_depth``).

* ``OracleEvaluator`` — independent brute force.  Every sequencing
  operator ranges over all integer moments up to the horizon, with no
  candidate shortcut.  Unbounded intervals are probed up to the horizon
  plus one window period.

``rep p`` on a finite interval is false outright: with time = naturals
there is no infinite strictly increasing chain below a finite bound.  On
an unbounded interval it holds iff a finite chain of p-stages reaches the
constant tail and p holds on some fixed-width tail window, which can then
be repeated forever (the tail is shift-invariant).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional

from . import syntax as S
from .worlds import INF, Interval, StepWorld, holds_fact, random_world


@dataclass(frozen=True)
class EvalConfig:
    domain_max: int = 31
    probe_depth: int = 3
    horizon: int = 64


@dataclass(frozen=True)
class EvalResult:
    truth: bool
    witness: Optional[tuple]
    config: EvalConfig


class _BaseEvaluator:
    """Shared clause structure; subclasses supply the cut-point sets."""

    def __init__(self, world: StepWorld, config: EvalConfig = EvalConfig()):
        self.world = world
        self.config = config
        self.cache = {}
        self._probe = config.probe_depth

    def truth(self, process, interval: Interval) -> bool:
        fv = S.free_vars(process)
        if fv:
            raise S.SyntaxError_(f"open process: free variables {sorted(fv)}")
        self._probe = max(self.config.probe_depth, S.sequencing_depth(process))
        return self._eval(process, interval.lo, interval.hi)

    def _eval(self, p, lo, hi) -> bool:
        p = S.core(p)
        key = (p, lo, hi, self._probe)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = self._dispatch(p, lo, hi)
        self.cache[key] = out
        return out

    def _holds(self, sit, fact) -> bool:
        return holds_fact(sit, fact, self.config.domain_max)

    def _dispatch(self, p, lo, hi) -> bool:
        W = self.world
        if isinstance(p, S.First):
            return self._holds(W.situation_at(lo), p.fact)
        if isinstance(p, S.Inner):
            return all(self._holds(s, p.fact)
                       for s in self._regions(lo, hi, include_hi=False))
        if isinstance(p, S.Upto):
            return all(self._holds(s, p.fact)
                       for s in self._regions(lo, hi, include_hi=True))
        if isinstance(p, S.Always):
            return all(self._holds(s, p.fact) for _, s in W.segments)
        if isinstance(p, S.PImplies):
            return (not self._eval(p.left, lo, hi)) or self._eval(p.right, lo, hi)
        if isinstance(p, S.PForAll):
            return all(
                self._eval(S.substitute(p.body, {p.var: S.Const(c)}), lo, hi)
                for c in range(self.config.domain_max + 1))
        if isinstance(p, S.Seq):
            return any(self._eval(p.left, lo, e) and self._eval(p.right, e, hi)
                       for e in self._cuts(lo, hi))
        if isinstance(p, S.RepSeq):
            if hi != INF:
                return False
            return self._rep_unbounded(p.body, lo)
        if isinstance(p, S.WRepSeq):
            if hi == INF:
                if self._rep_unbounded(p.body, lo):
                    return True
                return any(self._eval(p.body, e, INF)
                           for e in self._partition_reach(p.body, lo, INF))
            reach = self._partition_reach(p.body, lo, hi)
            return any(e < hi and self._eval(p.body, e, hi) for e in reach)
        if isinstance(p, S.LeadChain):
            return self._chain(p, lo, hi) is not None
        if isinstance(p, S.InfConj):
            return all(self._eval(q, lo, hi) for q, _ in p.entries)
        raise S.SyntaxError_(f"eval: unknown node {type(p).__name__}")

    def _regions(self, lo, hi, include_hi):
        return self.world.regions_over(lo, hi, include_hi)

    # Finite partition pieces between reachable points, starting at lo.
    def _partition_reach(self, body, lo, hi):
        points = sorted(self._cuts(lo, hi))
        reach = [lo]
        for e2 in points:
            if any(e1 < e2 and self._eval(body, e1, e2) for e1 in reach):
                reach.append(e2)
        return reach

    def _rep_unbounded(self, body, lo) -> bool:
        # Only anchors inside the constant tail admit a repeating window.
        reach = self._partition_reach(body, lo, INF)
        tail = self.world.tail_start
        for e in (e for e in reach if e >= tail):
            for width in range(1, self._period() + 1):
                if self._eval(body, e, e + width):
                    return True
        return False

    def _period(self) -> int:
        return self._probe + 1

    def _chain(self, chain: S.LeadChain, lo, hi) -> Optional[tuple]:
        steps = [S.core(l.step) for l in chain.links]
        bounds = [(l.after, l.before) for l in chain.links]
        head = S.core(chain.head)
        n = len(steps)
        if n == 0:
            raise S.SyntaxError_("lead chain without links")
        witness = []

        def rec(m, start):
            if m == n:
                last = steps[-1] if n else head
                if chain.open_ended:
                    return any(self._eval(last, start, c)
                               for c in self._cuts(start, INF))
                return start < hi and self._eval(last, start, hi)
            k, kp = bounds[m]
            prev = head if m == 0 else steps[m - 1]
            for e in range(max(k + 1, start + 1), kp):
                if self._eval(prev, start, e) and rec(m + 1, e):
                    witness.insert(0, e)
                    return True
            return False

        ok = rec(0, lo)
        return tuple(witness) if ok else None

    def _cuts(self, lo, hi):
        raise NotImplementedError


class ProcessEvaluator(_BaseEvaluator):
    """Canonical evaluator with the region-probe candidate set."""

    def _cuts(self, lo, hi):
        probe = self._probe
        cand = set()
        for cp in self.world.change_points:
            for d in range(probe + 1):
                cand.add(cp + d)
        for d in range(probe + 1):
            cand.add(lo + 1 + d)
        if hi != INF:
            for d in range(probe + 1):
                cand.add(hi - 1 - d)
        upper = hi if hi != INF else INF
        return sorted(e for e in cand if lo < e and e < upper)


class OracleEvaluator(_BaseEvaluator):
    """Brute-force evaluator: every integer moment up to the horizon."""

    def __init__(self, world, config: EvalConfig = EvalConfig()):
        super().__init__(world, config)
        if config.horizon < world.tail_start + 2:
            raise ValueError("horizon too small relative to world change points")

    def truth(self, process, interval: Interval) -> bool:
        if interval.hi != INF and interval.hi > self.config.horizon:
            raise ValueError("interval end exceeds the oracle horizon")
        return super().truth(process, interval)

    def _cuts(self, lo, hi):
        if hi == INF:
            # Probe a full horizon-sized band past both the left end and the
            # last change point, so no window collapses to emptiness.
            top = max(lo, self.world.tail_start) + self.config.horizon + 1
        else:
            top = hi
        return range(lo + 1, top)

    def _regions(self, lo, hi, include_hi):
        # Point-by-point enumeration instead of region reasoning.
        if hi == INF:
            top = max(lo, self.world.tail_start) + self.config.horizon
            points = range(lo + 1, top + 1)
        else:
            points = range(lo + 1, hi + 1 if include_hi else hi)
        return [self.world.situation_at(r) for r in points]

    def _period(self) -> int:
        return self.config.horizon


def eval_process(world: StepWorld, interval: Interval, process,
                 config: EvalConfig = EvalConfig()) -> EvalResult:
    """One-shot canonical evaluation with a best-effort top-level witness."""
    ev = ProcessEvaluator(world, config)
    truth = ev.truth(process, interval)
    witness = None
    if truth:
        top = S.core(process)
        if isinstance(top, S.Seq):
            for e in ev._cuts(interval.lo, interval.hi):
                if ev._eval(top.left, interval.lo, e) and \
                        ev._eval(top.right, e, interval.hi):
                    witness = (e,)
                    break
        elif isinstance(top, S.LeadChain):
            witness = ev._chain(top, interval.lo, interval.hi)
    effective = replace(config, probe_depth=ev._probe)
    return EvalResult(truth, witness, effective)


def eval_process_oracle(world: StepWorld, interval: Interval, process,
                        config: EvalConfig = EvalConfig()) -> bool:
    return OracleEvaluator(world, config).truth(process, interval)


# ---------------------------------------------------------------------------
# Desk-scale validity search

@dataclass(frozen=True)
class ValidityVerdict:
    counterexample: Optional[tuple]  # (StepWorld, Interval)
    checked: int
    note: str = "desk-scale evidence, not a proof"

    @property
    def no_counterexample_found(self) -> bool:
        return self.counterexample is None


def ground_atoms_of(process, constants=(0, 1)) -> list:
    """Ground instantiations of the fact letters occurring in the process."""
    letters = {}

    def walk_fact(f):
        f = S.core(f)
        if isinstance(f, S.Atom):
            letters.setdefault(f.letter, len(f.args))
        elif isinstance(f, (S.FImplies,)):
            walk_fact(f.left)
            walk_fact(f.right)
        elif isinstance(f, S.FForAll):
            walk_fact(f.body)

    def walk(p):
        p = S.core(p)
        if isinstance(p, (S.First, S.Inner, S.Upto, S.Always)):
            walk_fact(p.fact)
        elif isinstance(p, (S.PImplies, S.Seq)):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, (S.PForAll, S.RepSeq, S.WRepSeq)):
            walk(p.body if not isinstance(p, S.PForAll) else p.body)
        elif isinstance(p, S.LeadChain):
            walk(p.head)
            for l in p.links:
                walk(l.step)
        elif isinstance(p, S.InfConj):
            for q, _ in p.entries:
                walk(q)

    walk(process)
    out = []
    for letter in sorted(letters):
        arity = letters[letter]
        if arity == 0:
            out.append((letter, ()))
        else:
            idx = [0] * arity
            while True:
                out.append((letter, tuple(constants[i] for i in idx)))
                for k in range(arity - 1, -1, -1):
                    idx[k] += 1
                    if idx[k] < len(constants):
                        break
                    idx[k] = 0
                else:
                    break
    return out


def _structured_worlds(atoms):
    a_pool = atoms[:2] if len(atoms) >= 2 else atoms
    sits = []
    for mask in range(2 ** len(a_pool)):
        sits.append(frozenset(a for i, a in enumerate(a_pool) if mask >> i & 1))
    worlds = [StepWorld(((0, s),)) for s in sits]
    for s0 in sits:
        for s1 in sits:
            if s0 == s1:
                continue
            for t in (1, 2):
                worlds.append(StepWorld(((0, s0), (t, s1))))
    if len(a_pool) >= 2:
        a, b = a_pool[0], a_pool[1]
        fa, fb = frozenset((a,)), frozenset((b,))
        worlds.append(StepWorld(((0, fa), (1, fb), (2, fa))))
        worlds.append(StepWorld(((0, fb), (1, fa), (2, fb))))
        worlds.append(StepWorld(((0, frozenset()), (1, fa), (2, fb), (3, fa))))
    return worlds


def _intervals(max_lo, max_hi):
    out = []
    for lo in range(max_lo + 1):
        for hi in range(lo + 1, max_hi + 1):
            out.append(Interval(lo, hi))
        out.append(Interval(lo, INF))
    return out


def check_validity_desk_scale(process, config: EvalConfig = EvalConfig(),
                              trials: int = 1000, seed: int = 0) -> ValidityVerdict:
    """Search structured then random (world, interval) pairs for a falsifying
    pair.  A clean pass is evidence relative to the step-world class only."""
    fv = S.free_vars(process)
    if fv:
        raise S.SyntaxError_(f"open process: free variables {sorted(fv)}")
    atoms = ground_atoms_of(process)
    checked = 0
    for world in _structured_worlds(atoms):
        ev = ProcessEvaluator(world, config)
        for iv in _intervals(3, 5):
            checked += 1
            if not ev.truth(process, iv):
                return ValidityVerdict((world, iv), checked)
    rng = random.Random(seed)
    for t in range(trials):
        world = random_world(rng.randrange(2 ** 30), config.domain_max,
                             max_segments=4, atom_pool=atoms)
        ev = ProcessEvaluator(world, config)
        lo = rng.randrange(0, 7)
        hi = INF if rng.random() < 0.4 else lo + 1 + rng.randrange(0, 9)
        checked += 1
        if not ev.truth(process, Interval(lo, hi)):
            return ValidityVerdict((world, Interval(lo, hi)), checked)
    return ValidityVerdict(None, checked)
