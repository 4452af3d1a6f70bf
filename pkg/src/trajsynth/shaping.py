"""Demonstration-guided reward shaping.

For a transition (s, a, s'), the shaping bonus is

    F = delta(s)                     if (s, a) matches a demonstrated pair,
    F = 0                            if s was demonstrated with a different action,
    F = gamma * phi(s') - phi(s)     otherwise,

where delta measures closeness to the goal and phi closeness to the
nearest demonstrated state.  Matching is by observation id (cell plus key
flag), so the two key phases of capture-the-flag games are distinct.
Shaping is applied per collected transition (shaped = base + F) and never
accumulated into any persistent reward table.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .distances import DistanceTable, PotentialContext, delta as _delta, phi as _phi
from .errors import InsufficientDataError, MapMismatchError
from .gridworld import Action, Cell, GameKind, GameState, GridMap, decode_obs, obs_id
from .trajio import Trajectory


@dataclass(frozen=True)
class DemoSet:
    """Demonstrations plus the two lookup indexes the reward cases need."""

    trajectories: tuple[Trajectory, ...]
    pair_index: frozenset[tuple[int, int]]  # (obs_id, action_id)
    state_index: frozenset[int]  # obs_id

    def __post_init__(self):
        if not self.trajectories:
            raise InsufficientDataError("demonstration set is empty")


def build_demo_set(trajs: Iterable[Trajectory]) -> DemoSet:
    trajs = tuple(trajs)
    if not trajs:
        raise InsufficientDataError("demonstration set is empty")
    map_ids = {t.map_id for t in trajs}
    if len(map_ids) != 1:
        raise MapMismatchError(f"demonstrations span multiple maps: {sorted(map_ids)}")
    pairs = frozenset((s.obs_id, s.action_id) for t in trajs for s in t.steps)
    states = frozenset(s.obs_id for t in trajs for s in t.steps)
    return DemoSet(trajectories=trajs, pair_index=pairs, state_index=states)


@dataclass(frozen=True)
class ShapingContext:
    gm: GridMap
    demos: DemoSet
    potentials: dict[bool, PotentialContext]  # keyed by has_key phase
    goal_cell: Cell
    gamma: float


def build_shaping_context(gm: GridMap, demos: DemoSet, dist: DistanceTable,
                          gamma: float) -> ShapingContext:
    """Partition demonstrated cells by key phase and build one potential
    context per phase present.  Games with a key require demonstrations in
    both phases, since any rollout can visit either."""
    if demos.trajectories[0].map_id != gm.map_id:
        raise MapMismatchError("demonstrations were recorded on a different map")
    by_phase: dict[bool, set[Cell]] = {}
    for oid in demos.state_index:
        cell, has_key = decode_obs(gm, oid)
        by_phase.setdefault(has_key, set()).add(cell)
    needed = (False, True) if gm.game_kind in (GameKind.CTF, GameKind.CTFE) else (False,)
    potentials = {}
    for phase in needed:
        cells = by_phase.get(phase)
        if not cells:
            raise InsufficientDataError(
                f"no demonstrated states with has_key={phase}; "
                "shaping needs coverage of every reachable key phase")
        ordered = tuple(sorted(cells, key=gm.cell_id))
        potentials[phase] = PotentialContext(dist=dist, demo_cells=ordered,
                                             goal_cell=gm.goal, gamma=gamma)
    return ShapingContext(gm=gm, demos=demos, potentials=potentials,
                          goal_cell=gm.goal, gamma=gamma)


def f_value(ctx: ShapingContext, s: GameState, a: Action, s_next: GameState) -> float:
    """Shaping bonus for one transition; see the module docstring."""
    oid = obs_id(ctx.gm, s)
    if (oid, int(a)) in ctx.demos.pair_index:
        return _delta(ctx.potentials[s.has_key], s.agent)
    if oid in ctx.demos.state_index:
        return 0.0
    phi_s = _phi(ctx.potentials[s.has_key], s.agent)
    phi_next = _phi(ctx.potentials[s_next.has_key], s_next.agent)
    return ctx.gamma * phi_next - phi_s


def shape_rewards(ctx: ShapingContext,
                  transitions: Sequence[tuple[GameState, Action, float, GameState]]
                  ) -> list[float]:
    """Shaped reward (base + F) for each transition, order preserved."""
    return [base + f_value(ctx, s, a, s_next) for s, a, base, s_next in transitions]
