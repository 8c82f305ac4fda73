"""Positions, moves, plays, compactization, and the play-to-process map.

A position is a resource tree in which commanded menus appear as bare
DONE-nodes.  Occurrences are addressed by paths of step tokens through
the implication/conjunction/forall spine:

    l / r   implication antecedent / consequent
    a / b   conjunction left / right
    f       forall body

Named and sugar wrappers are transparent to addressing; applying a move
through one materializes it, so the printed position reflects the change.
Moves never descend into a menu: everything under a DO/DONE operator is
out of reach until the node itself is resolved.  A surface bang must be
peeled (``!R`` becomes ``R :& !R``) before anything inside it is touched;
peels ride along on the move that needs them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import syntax as S
from .semantics import EvalConfig, ProcessEvaluator
from .worlds import INF, Interval, StepWorld

MASTER = "master"
SLAVE = "slave"

Path = tuple


class MoveError(S.SyntaxError_):
    """Illegal move: bad path, polarity violation, bad index or constants."""


@dataclass(frozen=True)
class Replacement:
    index: int              # 1-based branch (at >>) or choice (at <<)
    constants: tuple = ()


@dataclass(frozen=True)
class MoveDelta:
    actor: str
    replacements: tuple = ()   # of (Path, Replacement), path-sorted
    peels: tuple = ()          # of Path, applied first, outermost first

    def __post_init__(self):
        object.__setattr__(self, "replacements",
                           tuple(sorted(self.replacements, key=lambda pr: pr[0])))
        object.__setattr__(self, "peels", tuple(sorted(self.peels)))

    @property
    def empty(self) -> bool:
        return not self.replacements and not self.peels


def polarity_of_path(path: Path) -> str:
    return "positive" if path.count("l") % 2 == 0 else "negative"


def _child(node, step):
    node = S.core(node)
    if isinstance(node, S.RImplies):
        if step == "l":
            return node.left
        if step == "r":
            return node.right
    elif isinstance(node, S.RAnd):
        if step == "a":
            return node.left
        if step == "b":
            return node.right
    elif isinstance(node, S.RForAll):
        if step == "f":
            return node.body
    raise MoveError(f"no child {step!r} below {type(node).__name__}")


def node_at(pos, path: Path):
    for step in path:
        pos = _child(pos, step)
    return pos


def _rebuild(node, path: Path, value):
    """Replace the subtree at path; wrappers along the way are expanded."""
    if not path:
        return value
    node = S.core(node)
    step, rest = path[0], path[1:]
    if isinstance(node, S.RImplies):
        if step == "l":
            return S.RImplies(_rebuild(node.left, rest, value), node.right)
        if step == "r":
            return S.RImplies(node.left, _rebuild(node.right, rest, value))
    elif isinstance(node, S.RAnd):
        if step == "a":
            return S.RAnd(_rebuild(node.left, rest, value), node.right)
        if step == "b":
            return S.RAnd(node.left, _rebuild(node.right, rest, value))
    elif isinstance(node, S.RForAll):
        if step == "f":
            return S.RForAll(node.var, _rebuild(node.body, rest, value))
    raise MoveError(f"no child {step!r} below {type(node).__name__}")


def iter_surface(pos, prefix: Path = ()) -> Iterator[tuple]:
    """Yield (path, core node) for every surface menu-bearing occurrence:
    WithPotential, BareDone and Bang nodes outside every menu scope."""
    node = S.core(pos)
    if isinstance(node, (S.WithPotential, S.BareDone, S.Bang)):
        yield prefix, node
        return
    if isinstance(node, S.RImplies):
        yield from iter_surface(node.left, prefix + ("l",))
        yield from iter_surface(node.right, prefix + ("r",))
    elif isinstance(node, S.RAnd):
        yield from iter_surface(node.left, prefix + ("a",))
        yield from iter_surface(node.right, prefix + ("b",))
    elif isinstance(node, S.RForAll):
        yield from iter_surface(node.body, prefix + ("f",))
    # LetterAtom / DefRef leaves carry no movable occurrence.


def polarity(pos, path: Path) -> str:
    node_at(pos, path)  # raises on a dangling path
    return polarity_of_path(path)


def _may_command(actor: str, pol: str) -> bool:
    return pol == ("positive" if actor == MASTER else "negative")


def _may_report(actor: str, pol: str) -> bool:
    return pol == ("negative" if actor == MASTER else "positive")


def _apply_replacement(pos, path, rep: Replacement, actor, env, domain_max):
    node = S.core(node_at(pos, path))
    pol = polarity_of_path(path)
    if isinstance(node, S.WithPotential):
        if not _may_command(actor, pol):
            raise MoveError(f"{actor} may not command a {pol} occurrence "
                            f"at {'.'.join(path) or '<root>'}")
        menu = S.resolve_potential(node.potential, env)
        if not menu.branches:
            raise MoveError("this resource accepts no commands")
        if not 1 <= rep.index <= len(menu.branches):
            raise MoveError(f"branch index {rep.index} out of range")
        if len(rep.constants) != len(menu.bound):
            raise MoveError(f"expected {len(menu.bound)} constants")
        if any(c < 0 or c > domain_max for c in rep.constants):
            raise MoveError("constant outside the domain")
        chosen = menu.branches[rep.index - 1]
        inst = S.substitute(chosen, {v: S.Const(c)
                                     for v, c in zip(menu.bound, rep.constants)})
        return _rebuild(pos, path, S.BareDone(inst))
    if isinstance(node, S.BareDone):
        if not _may_report(actor, pol):
            raise MoveError(f"{actor} may not report a {pol} occurrence "
                            f"at {'.'.join(path) or '<root>'}")
        done = S.core(node.done)
        if not 1 <= rep.index <= len(done.choices):
            raise MoveError(f"choice index {rep.index} out of range")
        if len(rep.constants) != len(done.bound):
            raise MoveError(f"expected {len(done.bound)} constants")
        if any(c < 0 or c > domain_max for c in rep.constants):
            raise MoveError("constant outside the domain")
        chosen = done.choices[rep.index - 1]
        inst = S.substitute(chosen, {v: S.Const(c)
                                     for v, c in zip(done.bound, rep.constants)})
        return _rebuild(pos, path, inst)
    raise MoveError(f"nothing to resolve at {'.'.join(path) or '<root>'}")


def apply_move(pos, delta: MoveDelta, env: Optional[S.DefinitionEnv] = None,
               domain_max: int = 31):
    """Apply one actor's move; untouched subtrees are preserved as-is."""
    for path in delta.peels:
        node = S.core(node_at(pos, path))
        if not isinstance(node, S.Bang):
            raise MoveError(f"peel target at {'.'.join(path)} is not a bang")
        pos = _rebuild(pos, path, S.RAnd(node.body, node))
    seen = set()
    for path, rep in delta.replacements:
        for other in seen:
            k = min(len(other), len(path))
            if other[:k] == path[:k]:
                raise MoveError("overlapping replacement targets")
        seen.add(path)
        pos = _apply_replacement(pos, path, rep, delta.actor, env, domain_max)
    return pos


def compose_moves(base, master_delta: MoveDelta, slave_delta: MoveDelta,
                  env: Optional[S.DefinitionEnv] = None, domain_max: int = 31):
    """Combine one master and one slave move made for the same position."""
    if master_delta.actor != MASTER or slave_delta.actor != SLAVE:
        raise MoveError("compose_moves expects a master and a slave move")
    m_paths = {p for p, _ in master_delta.replacements}
    s_paths = {p for p, _ in slave_delta.replacements}
    if m_paths & s_paths:
        raise MoveError("internal error: moves overlap despite polarity")
    out = apply_move(base, master_delta, env, domain_max)
    return apply_move(out, slave_delta, env, domain_max)


# ---------------------------------------------------------------------------
# Plays

@dataclass(frozen=True)
class Play:
    """Timestamped position sequence <pos0, t1, pos1, ...>.

    ``actors`` optionally tags each step with who moved ("master",
    "slave" or "both"); it is listing metadata, invisible to star."""

    initial: object
    steps: tuple = ()          # of (time, position), times strictly increasing
    truncated: bool = False
    actors: tuple = ()

    def __post_init__(self):
        times = self.times
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("play times must strictly increase")
        if self.actors and len(self.actors) != len(self.steps):
            raise ValueError("one actor tag per step")

    @property
    def positions(self) -> tuple:
        return (self.initial,) + tuple(p for _, p in self.steps)

    @property
    def times(self) -> tuple:
        return tuple(t for t, _ in self.steps)

    @property
    def final(self):
        return self.positions[-1]

    def is_compact(self) -> bool:
        ps = self.positions
        return all(a != b for a, b in zip(ps, ps[1:]))


def compactize(play: Play) -> Play:
    """Drop every position identical to its predecessor, with its time."""
    steps = []
    actors = []
    prev = play.initial
    for i, (t, p) in enumerate(play.steps):
        if p != prev:
            steps.append((t, p))
            if play.actors:
                actors.append(play.actors[i])
            prev = p
    return Play(play.initial, tuple(steps), play.truncated, tuple(actors))


def _project(positions, times, getter):
    """Sub-play over one spine component, compactized."""
    seq = [getter(S.core(p)) for p in positions]
    out_p, out_t = [seq[0]], []
    for t, p in zip(times, seq[1:]):
        if p != out_p[-1]:
            out_p.append(p)
            out_t.append(t)
    return out_p, out_t


def star(play: Play, env: Optional[S.DefinitionEnv] = None):
    """The process a compact play produces."""
    compact = compactize(play)
    return _star(list(compact.positions), list(compact.times), env)


def _star(ps, ts, env):
    root = S.core(ps[0])
    if isinstance(root, S.RImplies):
        lp, lt = _project(ps, ts, lambda n: n.left)
        rp, rt = _project(ps, ts, lambda n: n.right)
        return S.PImplies(_star(lp, lt, env), _star(rp, rt, env))
    if isinstance(root, S.RAnd):
        lp, lt = _project(ps, ts, lambda n: n.left)
        rp, rt = _project(ps, ts, lambda n: n.right)
        return S.proc_and(_star(lp, lt, env), _star(rp, rt, env))
    if isinstance(root, S.RForAll):
        bp, bt = _project(ps, ts, lambda n: n.body)
        return S.PForAll(root.var, _star(bp, bt, env))
    if isinstance(root, S.Bang):
        if len(ps) == 1:
            return S.InfConj(((_star([root.body], [], env), True),))
        # The first change must be a peel; read the pre-peel position as
        # the equivalent conjunction and recurse.
        ps = [S.RAnd(root.body, root)] + ps[1:]
        return _star(ps, ts, env)
    if isinstance(root, S.WithPotential):
        effect = root.effect
        if len(ps) == 1:
            return effect
        second = S.core(ps[1])
        if not isinstance(second, S.BareDone):
            raise S.SyntaxError_("illegal play: a commanded resource must "
                                 "turn into a DONE-node")
        k = ts[0]
        if len(ps) == 2:
            return S.proc_false()
        m = ts[1]
        cont = _star(ps[2:], ts[2:], env)
        if isinstance(cont, S.LeadChain) and not cont.open_ended:
            return S.LeadChain(effect,
                               (S.ChainLink(k, m, cont.head),) + cont.links)
        return S.LeadChain(effect, (S.ChainLink(k, m, cont),))
    if isinstance(root, S.DefRef):
        raise S.SyntaxError_("illegal play: a bare definition reference "
                             "is not a playable position")
    if isinstance(root, S.LetterAtom):
        raise S.SyntaxError_("plays require letter-free positions")
    if isinstance(root, S.BareDone):
        raise S.SyntaxError_("illegal play: sub-play rooted at a DONE-node")
    raise S.SyntaxError_(f"star: unknown position node {type(root).__name__}")


def is_successful(play: Play, world: StepWorld,
                  config: EvalConfig = EvalConfig(),
                  env: Optional[S.DefinitionEnv] = None) -> bool:
    """A play succeeds in a world iff its produced process holds on (0, inf)."""
    produced = star(play, env)
    return ProcessEvaluator(world, config).truth(produced, Interval(0, INF))


# ---------------------------------------------------------------------------
# Option enumeration (used by random masters and the small exhaustive grids)

def legal_single_moves(pos, actor: str, env=None, domain_max: int = 31,
                       constants=(0, 1), _prefix: Path = ()) -> list:
    """All single-target moves for the actor, plus peel-and-command options
    for surface bangs.  Constant vectors are drawn from a small set."""
    out = []
    for rel, node in iter_surface(pos):
        path = _prefix + rel
        pol = polarity_of_path(path)
        if isinstance(node, S.WithPotential) and _may_command(actor, pol):
            menu = S.resolve_potential(node.potential, env)
            for i, _ in enumerate(menu.branches, start=1):
                for consts in _vectors(len(menu.bound), constants):
                    out.append(MoveDelta(actor, ((path, Replacement(i, consts)),)))
        elif isinstance(node, S.BareDone) and _may_report(actor, pol):
            done = S.core(node.done)
            for j, _ in enumerate(done.choices, start=1):
                for consts in _vectors(len(done.bound), constants):
                    out.append(MoveDelta(actor, ((path, Replacement(j, consts)),)))
        elif isinstance(node, S.Bang):
            # Moves inside a bang ride on a peel; the peeled copy sits at
            # the conjunction's left side.
            inner = legal_single_moves(node.body, actor, env, domain_max,
                                       constants, path + ("a",))
            for mv in inner:
                out.append(MoveDelta(actor, mv.replacements,
                                     (path,) + mv.peels))
    return out


def _vectors(n, constants):
    if n == 0:
        return [()]
    out = [()]
    for _ in range(n):
        out = [v + (c,) for v in out for c in constants]
    return out


def subtree_fingerprints(pos, prefix: Path = ()) -> dict:
    """Hashes of every spine-addressable subtree; used by the frame-locality
    checks (a move changes exactly the targeted occurrences)."""
    out = {prefix: hash(pos)}
    node = S.core(pos)
    if isinstance(node, S.RImplies):
        out.update(subtree_fingerprints(node.left, prefix + ("l",)))
        out.update(subtree_fingerprints(node.right, prefix + ("r",)))
    elif isinstance(node, S.RAnd):
        out.update(subtree_fingerprints(node.left, prefix + ("a",)))
        out.update(subtree_fingerprints(node.right, prefix + ("b",)))
    elif isinstance(node, S.RForAll):
        out.update(subtree_fingerprints(node.body, prefix + ("f",)))
    return out
