"""Slave strategies, master scripts, asynchronous play simulation, and the
desk-scale universal-success / s-validity harnesses.

The simulation clock is a logical tick counter.  The slave reads the
current position, thinks for ``delay`` ticks, and its move (computed for
the stale snapshot) is composed with whatever position holds when the
move lands.  Master moves fire at their scripted ticks; when both land on
one tick they are composed into a single play entry.  A ``delay`` of
``None`` models divergence: the slave never moves again and only master
moves remain.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from . import syntax as S
from .games import (MASTER, SLAVE, MoveDelta, MoveError, Path, Play,
                    Replacement, apply_move, is_successful, iter_surface,
                    legal_single_moves, node_at, polarity_of_path, _vectors)
from .semantics import EvalConfig
from .worlds import StepWorld, random_world


class ScriptError(S.SyntaxError_):
    def __init__(self, message, position, time):
        super().__init__(f"{message} at time {time}")
        self.position = position
        self.time = time


# ---------------------------------------------------------------------------
# Slave strategies

class SlaveStrategy:
    """Reads a position, answers with a slave move and a thinking time."""

    def react(self, position) -> MoveDelta:
        return MoveDelta(SLAVE)

    def delay(self, position) -> Optional[int]:
        return 1


class WaitingSlave(SlaveStrategy):
    """Always returns the position unchanged."""


class DivergentSlave(SlaveStrategy):
    """Thinks forever; after its first read only master moves happen."""

    def delay(self, position):
        return None


class ScriptedSlave(SlaveStrategy):
    """Fires a fixed command sequence, one report round at a time: the next
    command waits until the previous one has been answered."""

    def __init__(self, commands: Iterable, env=None, domain_max: int = 31):
        self.pending = list(commands)  # of (Path, Replacement)
        self.awaiting: Optional[Path] = None
        self.env = env
        self.domain_max = domain_max

    def react(self, position) -> MoveDelta:
        if self.awaiting is not None:
            try:
                node = S.core(node_at(position, self.awaiting))
            except MoveError:
                node = None
            if isinstance(node, S.BareDone):
                return MoveDelta(SLAVE)
            self.awaiting = None
        if self.pending:
            path, rep = self.pending[0]
            try:
                node = S.core(node_at(position, path))
            except MoveError:
                node = None
            if isinstance(node, S.WithPotential) and \
                    polarity_of_path(path) == "negative":
                self.pending.pop(0)
                self.awaiting = path
                return MoveDelta(SLAVE, ((path, rep),))
        return MoveDelta(SLAVE)


class PairingBroken(S.SyntaxError_):
    """The paired subtrees diverged in a way copying cannot repair."""


class PairingSlave(SlaveStrategy):
    """Copycat play: keeps each pair of occurrences structurally in sync by
    copying master's resolutions from either side into the other."""

    def __init__(self, pairs: Iterable, initial=None, env=None,
                 domain_max: int = 31):
        self.pairs = tuple(tuple(map(tuple, pr)) for pr in pairs)
        self.env = env
        self.domain_max = domain_max
        if initial is not None:
            for a, b in self.pairs:
                if polarity_of_path(a) == polarity_of_path(b):
                    raise PairingBroken("paired occurrences must have "
                                        "opposite polarity")
                if S.expand_all(node_at(initial, a)) != \
                        S.expand_all(node_at(initial, b)):
                    raise PairingBroken("paired occurrences must be "
                                        "structurally identical")

    def react(self, position) -> MoveDelta:
        reps = []
        for a, b in self.pairs:
            reps.extend(self._sync(position, a, b))
        return MoveDelta(SLAVE, tuple(reps))

    def _sync(self, position, path_a: Path, path_b: Path):
        sub_a = node_at(position, path_a)
        sub_b = node_at(position, path_b)
        return _mirror(sub_a, path_a, sub_b, path_b, self.env, self.domain_max)


def _mirror(sub_a, path_a, sub_b, path_b, env, domain_max):
    """Replacements that bring the lagging side level with the leading one."""
    ca, cb = S.core(sub_a), S.core(sub_b)
    if ca == cb:
        return []
    kinds = (type(ca), type(cb))
    if isinstance(ca, S.WithPotential) and isinstance(cb, S.BareDone):
        return _mirror_menu_done(ca, path_a, cb, path_b, env, domain_max)
    if isinstance(cb, S.WithPotential) and isinstance(ca, S.BareDone):
        return _mirror_menu_done(cb, path_b, ca, path_a, env, domain_max)
    if isinstance(ca, S.BareDone) and not isinstance(cb, S.BareDone):
        rep = _infer_report(ca, cb, domain_max)
        if rep is None:
            raise PairingBroken("no choice matches the reported twin")
        return [(path_a, rep)]
    if isinstance(cb, S.BareDone) and not isinstance(ca, S.BareDone):
        rep = _infer_report(cb, ca, domain_max)
        if rep is None:
            raise PairingBroken("no choice matches the reported twin")
        return [(path_b, rep)]
    if kinds == (S.RImplies, S.RImplies):
        return (_mirror(ca.left, path_a + ("l",), cb.left, path_b + ("l",),
                        env, domain_max)
                + _mirror(ca.right, path_a + ("r",), cb.right,
                          path_b + ("r",), env, domain_max))
    if kinds == (S.RAnd, S.RAnd):
        return (_mirror(ca.left, path_a + ("a",), cb.left, path_b + ("a",),
                        env, domain_max)
                + _mirror(ca.right, path_a + ("b",), cb.right,
                          path_b + ("b",), env, domain_max))
    if kinds == (S.RForAll, S.RForAll):
        return _mirror(ca.body, path_a + ("f",), cb.body, path_b + ("f",),
                       env, domain_max)
    raise PairingBroken(
        f"cannot reconcile {type(ca).__name__} with {type(cb).__name__}")


def _mirror_menu_done(wp, wp_path, bd, bd_path, env, domain_max):
    """Menu on one side, commanded node on the other: either the command
    must be copied onto the menu side, or the menu side already shows the
    reported resource and the report must be copied onto the other.  The
    two readings are told apart by content; recursive content can make
    both fit, which copying alone cannot untangle."""
    cmd = _infer_command(wp, bd, env, domain_max)
    rep = _infer_report(bd, wp, domain_max)
    if cmd is not None and rep is not None:
        raise PairingBroken("ambiguous pairing state (recursive content)")
    if cmd is not None:
        if polarity_of_path(wp_path) != "negative":
            raise PairingBroken("command mirror would not be a slave's move")
        return [(wp_path, cmd)]
    if rep is not None:
        if polarity_of_path(bd_path) != "positive":
            raise PairingBroken("report mirror would not be a slave's move")
        return [(bd_path, rep)]
    raise PairingBroken("paired subtrees are unrelated")


def _infer_command(wp: S.WithPotential, done: S.BareDone, env,
                   domain_max) -> Optional[Replacement]:
    menu = S.resolve_potential(wp.potential, env)
    target = S.core(done.done)
    for i, branch in enumerate(menu.branches, start=1):
        for consts in _vectors(len(menu.bound), tuple(range(domain_max + 1))):
            inst = S.substitute(branch, {v: S.Const(c)
                                         for v, c in zip(menu.bound, consts)})
            if S.core(inst) == target:
                return Replacement(i, consts)
    return None


def _infer_report(done: S.BareDone, resource, domain_max) -> Optional[Replacement]:
    d = S.core(done.done)
    target = S.core(resource)
    for j, choice in enumerate(d.choices, start=1):
        for consts in _vectors(len(d.bound), tuple(range(domain_max + 1))):
            inst = S.substitute(choice, {v: S.Const(c)
                                         for v, c in zip(d.bound, consts)})
            if S.core(inst) == target:
                return Replacement(j, consts)
    return None


# ---------------------------------------------------------------------------
# Master scripts

class ScriptedMaster:
    """Concrete moves at fixed times; an illegal move is a script error."""

    def __init__(self, moves: Iterable):
        self.moves = tuple(moves)  # of (time, MoveDelta)
        times = [t for t, _ in self.moves]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("script times must strictly increase")

    def times(self):
        return tuple(t for t, _ in self.moves)

    def pick(self, position, time) -> MoveDelta:
        for t, delta in self.moves:
            if t == time:
                return delta
        return MoveDelta(MASTER)


class RandomMaster:
    """At each scripted slot, a uniformly random legal single-target move
    or the empty move."""

    def __init__(self, times: Iterable[int], seed: int, env=None,
                 domain_max: int = 31, constants=(0, 1)):
        self._times = tuple(sorted(times))
        self.rng = random.Random(seed)
        self.env = env
        self.domain_max = domain_max
        self.constants = constants

    def times(self):
        return self._times

    def pick(self, position, time) -> MoveDelta:
        opts = legal_single_moves(position, MASTER, self.env,
                                  self.domain_max, self.constants)
        opts.append(MoveDelta(MASTER))
        return self.rng.choice(opts)


class DecisionMaster:
    """Deterministic option picker used by the exhaustive small grids: at
    slot k it takes option ``decisions[k]`` (mod the current option count)."""

    def __init__(self, times: Iterable[int], decisions: Iterable[int],
                 env=None, domain_max: int = 31, constants=(0, 1)):
        self._times = tuple(sorted(times))
        self.decisions = tuple(decisions)
        self.slot = 0
        self.env = env
        self.domain_max = domain_max
        self.constants = constants

    def times(self):
        return self._times

    def pick(self, position, time) -> MoveDelta:
        k = self.slot
        self.slot += 1
        if k >= len(self.decisions):
            return MoveDelta(MASTER)
        opts = legal_single_moves(position, MASTER, self.env,
                                  self.domain_max, self.constants)
        if not opts:
            return MoveDelta(MASTER)
        return opts[self.decisions[k] % len(opts)]


# ---------------------------------------------------------------------------
# Simulation

class Simulation:
    """Stepwise driver shared by ``simulate`` and the interactive loop."""

    def __init__(self, initial, slave: SlaveStrategy, env=None,
                 domain_max: int = 31, budget: int = 64, max_ticks: int = 4096):
        if S.free_vars(initial):
            raise S.SyntaxError_("initial position must be closed")
        if S.resource_letters(initial):
            raise S.SyntaxError_("initial position must be letter-free")
        self.pos = initial
        self.initial = initial
        self.steps = []
        self.actors = []
        self.truncated = False
        self.env = env
        self.domain_max = domain_max
        self.budget = budget
        self.max_ticks = max_ticks
        self.slave = slave
        self.read_pos = initial
        d = slave.delay(initial)
        self.slave_ready = None if d is None else max(1, d)

    def _record(self, t, new, actor):
        if new != self.pos:
            if len(self.steps) >= self.budget:
                self.truncated = True
                return
            self.steps.append((t, new))
            self.actors.append(actor)
            self.pos = new

    def _fire_slave(self, t) -> bool:
        """Apply the slave's pending move; returns True when the slave is
        quiescent (waited on an up-to-date read)."""
        snapshot = self.read_pos
        delta = self.slave.react(snapshot)
        if delta is None:
            self.slave_ready = None
            return False
        if not delta.empty:
            try:
                new = apply_move(self.pos, delta, self.env, self.domain_max)
            except MoveError:
                # Bogus strategy output counts as divergence.
                self.slave_ready = None
                return False
            self._record(t, new, SLAVE)
        quiescent = delta.empty and snapshot == self.pos
        self.read_pos = self.pos
        d = self.slave.delay(self.pos)
        self.slave_ready = None if d is None else t + max(1, d)
        return quiescent

    def advance_to(self, t):
        """Fire slave events strictly before t."""
        while (self.slave_ready is not None and self.slave_ready < t
               and not self.truncated and self.slave_ready <= self.max_ticks):
            self._fire_slave(self.slave_ready)

    def master_move(self, t, delta: MoveDelta):
        """Fire a master move at time t, composing with a slave move that
        lands on the same tick."""
        self.advance_to(t)
        if self.truncated:
            return
        if self.steps and t <= self.steps[-1][0]:
            raise ScriptError("master move scheduled in the past",
                              self.pos, t)
        if self.slave_ready == t:
            snapshot = self.read_pos
            sdelta = self.slave.react(snapshot)
            try:
                new = apply_move(self.pos, delta, self.env, self.domain_max)
            except MoveError as exc:
                raise ScriptError(str(exc), self.pos, t) from None
            actor = MASTER
            if sdelta is not None and not sdelta.empty:
                try:
                    new = apply_move(new, sdelta, self.env, self.domain_max)
                    actor = "both"
                except MoveError:
                    sdelta = None
                    self.slave_ready = None
            self._record(t, new, actor)
            if sdelta is not None:
                self.read_pos = self.pos
                d = self.slave.delay(self.pos)
                self.slave_ready = None if d is None else t + max(1, d)
        else:
            try:
                new = apply_move(self.pos, delta, self.env, self.domain_max)
            except MoveError as exc:
                raise ScriptError(str(exc), self.pos, t) from None
            self._record(t, new, MASTER)

    def drain(self):
        """Let the slave run until it waits on an up-to-date read."""
        while (self.slave_ready is not None and not self.truncated
               and self.slave_ready <= self.max_ticks):
            t = self.slave_ready
            if self._fire_slave(t):
                break
        if (self.slave_ready is not None
                and self.slave_ready > self.max_ticks):
            self.truncated = True

    def play(self) -> Play:
        return Play(self.initial, tuple(self.steps), self.truncated,
                    tuple(self.actors))


def simulate(initial, slave: SlaveStrategy, master, env=None,
             domain_max: int = 31, budget: int = 64,
             max_ticks: int = 4096) -> Play:
    """Run the staleness protocol to quiescence or the move budget."""
    sim = Simulation(initial, slave, env, domain_max, budget, max_ticks)
    for t in master.times():
        if sim.truncated:
            break
        sim.advance_to(t)
        delta = master.pick(sim.pos, t)
        if delta is None or delta.empty:
            continue
        sim.master_move(t, delta)
    sim.drain()
    return sim.play()


# ---------------------------------------------------------------------------
# Universal success / s-validity harnesses

@dataclass(frozen=True)
class UniversalVerdict:
    failure: Optional[tuple]   # (Play, StepWorld)
    checked: int
    note: str = "desk-scale evidence, not a proof"

    @property
    def no_failure_found(self) -> bool:
        return self.failure is None


def _resource_ground_atoms(resource, env, constants=(0, 1)) -> list:
    from .semantics import ground_atoms_of
    effects = []

    def walk(r, depth=0):
        r = S.core(r)
        if isinstance(r, S.WithPotential):
            effects.append(r.effect)
            pot = S.core(r.potential)
            if isinstance(pot, S.DefRef):
                if env is not None and depth < 1:
                    pot = S.core(env.resolve(pot.name))
                else:
                    return
            for b in pot.branches:
                for c in S.core(b).choices:
                    walk(c, depth + 1)
        elif isinstance(r, (S.RImplies, S.RAnd)):
            walk(r.left, depth)
            walk(r.right, depth)
        elif isinstance(r, (S.RForAll, S.Bang)):
            walk(r.body, depth)
        elif isinstance(r, S.BareDone):
            for c in S.core(r.done).choices:
                walk(c, depth)

    walk(resource)
    atoms = []
    for eff in effects:
        closed = eff
        fv = S.free_vars(eff)
        if fv:
            closed = S.substitute(eff, {v: S.Const(0) for v in fv})
        atoms.extend(ground_atoms_of(closed, constants))
    seen = []
    for a in atoms:
        if a not in seen:
            seen.append(a)
    return seen


def _grid_worlds(atoms) -> list:
    pool = atoms[:2]
    sits = [frozenset()]
    for a in pool:
        sits = sits + [s | {a} for s in sits]
    worlds = [StepWorld(((0, s),)) for s in sits]
    for s0 in sits:
        for s1 in sits:
            if s0 != s1:
                worlds.append(StepWorld(((0, s0), (2, s1))))
    return worlds


def check_universal_success(resource, slave_factory: Callable[[], SlaveStrategy],
                            trials: int = 500,
                            config: EvalConfig = EvalConfig(),
                            env=None, seed: int = 0) -> UniversalVerdict:
    """Systematic small grid, then seeded random masters and worlds."""
    atoms = _resource_ground_atoms(resource, env)
    checked = 0

    def attempt(master, world) -> Optional[tuple]:
        nonlocal checked
        checked += 1
        play = simulate(resource, slave_factory(), master, env,
                        config.domain_max)
        if not is_successful(play, world, config, env):
            return (play, world)
        return None

    grid = _grid_worlds(atoms)
    for world in grid:
        fail = attempt(ScriptedMaster(()), world)
        if fail:
            return UniversalVerdict(fail, checked)
        for first in range(6):
            fail = attempt(DecisionMaster((1, 5), (first,), env,
                                          config.domain_max), world)
            if fail:
                return UniversalVerdict(fail, checked)
            for second in range(4):
                fail = attempt(DecisionMaster((1, 5), (first, second), env,
                                              config.domain_max), world)
                if fail:
                    return UniversalVerdict(fail, checked)
    rng = random.Random(seed)
    for _ in range(trials):
        world = random_world(rng.randrange(2 ** 30), config.domain_max,
                             max_segments=3, atom_pool=atoms)
        n_moves = rng.randint(0, 3)
        times = sorted(rng.sample(range(1, 16), n_moves))
        master = RandomMaster(times, rng.randrange(2 ** 30), env,
                              config.domain_max)
        fail = attempt(master, world)
        if fail:
            return UniversalVerdict(fail, checked)
    return UniversalVerdict(None, checked)


@dataclass(frozen=True)
class SValidityVerdict:
    failure: Optional[tuple]   # (Substitution, Play, StepWorld)
    instances_checked: int
    note: str = "sampling harness, not a decision procedure"

    @property
    def no_failure_found(self) -> bool:
        return self.failure is None


def check_s_validity_by_sampling(scheme, strategy_factory,
                                 sampler: Callable[[int], "S.Substitution"],
                                 trials: int = 20,
                                 config: EvalConfig = EvalConfig(),
                                 env=None, seed: int = 0,
                                 trials_per_instance: int = 40) -> SValidityVerdict:
    """Instantiate the scheme through sampled safe substitutions and check
    universal success per instance.  ``strategy_factory(instance, tau)``
    must build a fresh slave strategy for each play."""
    for k in range(trials):
        tau = sampler(seed + k)
        if not tau.safe:
            raise S.SyntaxError_("sampler produced a non-safe substitution")
        instance = S.apply_substitution(scheme, tau)
        verdict = check_universal_success(
            instance, lambda: strategy_factory(instance, tau),
            trials_per_instance, config, env, seed=seed + k)
        if not verdict.no_failure_found:
            play, world = verdict.failure
            return SValidityVerdict((tau, play, world), k + 1)
    return SValidityVerdict(None, trials)


def sample_safe_substitution(letters: Mapping[str, int], seed: int) -> "S.Substitution":
    """Random safe images: trivial-effect menus whose leaves carry the
    designated variables in fresh fact letters."""
    rng = random.Random(seed)
    images = {}
    for idx, letter in enumerate(sorted(letters)):
        arity = letters[letter]
        params = tuple(f"w{idx}_{i}" for i in range(arity))
        leaf_effect = S.First(S.Atom(f"S{idx}", tuple(S.Var(p) for p in params))) \
            if arity else S.First(S.Atom(f"S{idx}", ()))
        leaf = S.WithPotential(leaf_effect, S.empty_do())
        n_branches = rng.randint(1, 2)
        branches = tuple(
            S.DoneNode((), (S.WithPotential(
                S.First(S.Atom(f"S{idx}", tuple(S.Var(p) for p in params))
                        if arity else S.Atom(f"T{idx}_{b}", ())),
                S.empty_do()),))
            for b in range(n_branches))
        body = S.WithPotential(S.proc_true(), S.DoNode((), branches))
        if arity and rng.random() < 0.5:
            body = S.RAnd(body, S.WithPotential(S.proc_true(),
                                                S.DoNode((), (S.DoneNode((), (leaf,)),))))
        images[letter] = (params, body)
    return S.Substitution(images, safe=True)
