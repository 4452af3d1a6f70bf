"""The three grid games (MAZE, CTF, CTFE): map format, deterministic
dynamics and base reward functions.

Coordinates are (row, col) with row 0 at the top.  Movement is 4-connected;
stepping into an obstacle or off the grid leaves the agent in place.  In
CTFE the enemy advances one patrol cell per agent action and captures the
agent at Manhattan distance <= 1.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from collections import deque
from importlib import resources
from typing import Iterator, Optional, TYPE_CHECKING

from .errors import (
    DuplicateMarkerError,
    InconsistentKindError,
    MalformedPatrolError,
    MapError,
    MissingGoalError,
    MissingStartError,
    SteppedTerminalStateError,
    UnreachableGoalError,
)

if TYPE_CHECKING:
    from .distances import DistanceTable

Cell = tuple[int, int]

DEFAULT_HORIZON = 300


class GameKind(str, enum.Enum):
    MAZE = "maze"
    CTF = "ctf"
    CTFE = "ctfe"


class Action(enum.IntEnum):
    UP = 0
    RIGHT = 1
    DOWN = 2
    LEFT = 3


# (d_row, d_col) per action id
ACTION_DELTAS = {
    Action.UP: (-1, 0),
    Action.RIGHT: (0, 1),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
}


class EnemyDir(enum.IntEnum):
    FWD = 1
    BACK = -1


class Status(str, enum.Enum):
    ACTIVE = "active"
    GOAL_REACHED = "goal_reached"
    CAPTURED = "captured"
    TIMED_OUT = "timed_out"


class Event(str, enum.Enum):
    MOVED = "moved"
    BLOCKED = "blocked"
    KEY_COLLECTED = "key_collected"
    GOAL_REACHED = "goal_reached"
    CAPTURED = "captured"
    TIMED_OUT = "timed_out"


TERMINAL_EVENTS = frozenset({Event.GOAL_REACHED, Event.CAPTURED, Event.TIMED_OUT})


@dataclass(frozen=True)
class GridMap:
    """Static map topology.  Immutable and shareable."""

    width: int
    height: int
    passable: tuple[tuple[bool, ...], ...]  # [row][col]
    start: Cell
    goal: Cell
    key: Optional[Cell]
    patrol: Optional[tuple[Cell, ...]]  # left-to-right patrol cells
    game_kind: GameKind
    horizon: int
    map_id: str

    def is_passable(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and self.passable[r][c]

    def cell_id(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def passable_cells(self) -> Iterator[Cell]:
        for r in range(self.height):
            for c in range(self.width):
                if self.passable[r][c]:
                    yield (r, c)


@dataclass(frozen=True)
class GameState:
    agent: Cell
    has_key: bool
    enemy_index: Optional[int]
    enemy_dir: Optional[EnemyDir]
    steps_taken: int
    status: Status


@dataclass(frozen=True)
class StepOutcome:
    next_state: GameState
    base_reward: float
    terminal: bool
    event: Event


def normalize_map_text(text: str) -> str:
    """Canonical form used for the map digest: per-line trailing whitespace
    stripped, LF endings, exactly one trailing newline."""
    lines = [ln.rstrip() for ln in text.replace("\r\n", "\n").split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"


def load_map(text: str) -> GridMap:
    """Parse a map description.

    Format: first line ``kind=<maze|ctf|ctfe> horizon=<int>``, then one row
    per line using ``#`` obstacle, ``.`` floor, ``S`` start, ``G`` goal,
    ``K`` key, ``E`` patrol cell.  Marker cells are passable.
    """
    norm = normalize_map_text(text)
    lines = norm.rstrip("\n").split("\n")
    if not lines:
        raise MapError("empty map text")
    header = lines[0]
    fields = dict(part.split("=", 1) for part in header.split() if "=" in part)
    if "kind" not in fields:
        raise MapError(f"missing kind= in header line {header!r}")
    try:
        kind = GameKind(fields["kind"])
    except ValueError:
        raise MapError(f"unknown game kind {fields['kind']!r}") from None
    try:
        horizon = int(fields.get("horizon", DEFAULT_HORIZON))
    except ValueError:
        raise MapError(f"bad horizon in header line {header!r}") from None
    if horizon < 1:
        raise MapError("horizon must be >= 1")

    rows = lines[1:]
    if not rows:
        raise MapError("map has no grid rows")
    width = max(len(r) for r in rows)
    height = len(rows)
    passable_rows: list[tuple[bool, ...]] = []
    start = goal = key = None
    patrol_cells: list[Cell] = []
    for r, row in enumerate(rows):
        flags = []
        for c in range(width):
            ch = row[c] if c < len(row) else "#"
            if ch == "#":
                flags.append(False)
                continue
            if ch not in ".SGKE":
                raise MapError(f"invalid character {ch!r} at row {r}, col {c}")
            flags.append(True)
            if ch == "S":
                if start is not None:
                    raise DuplicateMarkerError("more than one start marker")
                start = (r, c)
            elif ch == "G":
                if goal is not None:
                    raise DuplicateMarkerError("more than one goal marker")
                goal = (r, c)
            elif ch == "K":
                if key is not None:
                    raise DuplicateMarkerError("more than one key marker")
                key = (r, c)
            elif ch == "E":
                patrol_cells.append((r, c))
        passable_rows.append(tuple(flags))

    if start is None:
        raise MissingStartError("map has no start marker")
    if goal is None:
        raise MissingGoalError("map has no goal marker")

    if kind is GameKind.MAZE:
        if key is not None or patrol_cells:
            raise InconsistentKindError("MAZE maps take no key or patrol markers")
    elif kind is GameKind.CTF:
        if key is None:
            raise InconsistentKindError("CTF maps need a key marker")
        if patrol_cells:
            raise InconsistentKindError("CTF maps take no patrol markers")
    else:  # CTFE
        if key is None:
            raise InconsistentKindError("CTFE maps need a key marker")
        if not patrol_cells:
            raise InconsistentKindError("CTFE maps need at least one patrol cell")

    patrol: Optional[tuple[Cell, ...]] = None
    if patrol_cells:
        patrol_cells.sort(key=lambda rc: (rc[0], rc[1]))
        prow = patrol_cells[0][0]
        cols = [c for _, c in patrol_cells]
        if any(r != prow for r, _ in patrol_cells):
            raise MalformedPatrolError("patrol cells span multiple rows")
        if cols != list(range(cols[0], cols[0] + len(cols))):
            raise MalformedPatrolError("patrol cells are not contiguous")
        patrol = tuple(patrol_cells)

    map_id = hashlib.sha256(norm.encode("utf-8")).hexdigest()
    gm = GridMap(
        width=width,
        height=height,
        passable=tuple(passable_rows),
        start=start,
        goal=goal,
        key=key,
        patrol=patrol,
        game_kind=kind,
        horizon=horizon,
        map_id=map_id,
    )
    _check_reachability(gm)
    return gm


def _check_reachability(gm: GridMap) -> None:
    if gm.key is not None:
        if _bfs_dist(gm, gm.start, gm.key) is None:
            raise UnreachableGoalError("key is not reachable from start")
        if _bfs_dist(gm, gm.key, gm.goal) is None:
            raise UnreachableGoalError("goal is not reachable from key")
    if _bfs_dist(gm, gm.start, gm.goal) is None:
        raise UnreachableGoalError("goal is not reachable from start")


def _bfs_dist(gm: GridMap, src: Cell, dst: Cell) -> Optional[int]:
    # local check only; the distances module owns the real all-pairs tables
    seen = {src: 0}
    q = deque([src])
    while q:
        cell = q.popleft()
        if cell == dst:
            return seen[cell]
        r, c = cell
        for dr, dc in ACTION_DELTAS.values():
            nxt = (r + dr, c + dc)
            if gm.is_passable(nxt) and nxt not in seen:
                seen[nxt] = seen[cell] + 1
                q.append(nxt)
    return None


def load_map_file(path) -> GridMap:
    with open(path, "r", encoding="utf-8") as fh:
        return load_map(fh.read())


def bundled_map_names() -> list[str]:
    root = resources.files("trajsynth") / "maps"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".txt"))


def load_bundled_map(name: str) -> GridMap:
    """Load one of the maps shipped with the package, e.g. ``maze_20x13``."""
    ref = resources.files("trajsynth") / "maps" / f"{name}.txt"
    if not ref.is_file():
        raise MapError(f"no bundled map named {name!r}")
    return load_map(ref.read_text(encoding="utf-8"))


def initial_state(gm: GridMap) -> GameState:
    if gm.game_kind is GameKind.CTFE:
        enemy_index, enemy_dir = 0, EnemyDir.FWD
    else:
        enemy_index = enemy_dir = None
    return GameState(
        agent=gm.start,
        has_key=False,
        enemy_index=enemy_index,
        enemy_dir=enemy_dir,
        steps_taken=0,
        status=Status.ACTIVE,
    )


def enemy_next(gm: GridMap, enemy_index: int, enemy_dir: EnemyDir) -> tuple[int, EnemyDir]:
    """One patrol step: advance along the segment, reflecting at the ends."""
    n = len(gm.patrol)
    if n == 1:
        return 0, enemy_dir
    j = enemy_index + int(enemy_dir)
    if j < 0 or j >= n:
        enemy_dir = EnemyDir(-int(enemy_dir))
        j = enemy_index + int(enemy_dir)
    return j, enemy_dir


def enemy_cell(gm: GridMap, state: GameState) -> Optional[Cell]:
    if state.enemy_index is None or gm.patrol is None:
        return None
    return gm.patrol[state.enemy_index]


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def obs_id(gm: GridMap, state: GameState) -> int:
    """Encode (cell, key flag) as a single id: (row*width + col)*2 + has_key.

    The enemy phase is deliberately not encoded so that trajectories from
    every game share one word alphabet."""
    r, c = state.agent
    return (r * gm.width + c) * 2 + int(state.has_key)


def decode_obs(gm: GridMap, oid: int) -> tuple[Cell, bool]:
    has_key = bool(oid & 1)
    cid = oid >> 1
    return (cid // gm.width, cid % gm.width), has_key


def step(gm: GridMap, state: GameState, action: Action,
         dist: "DistanceTable", horizon: Optional[int] = None) -> StepOutcome:
    """Advance the game one action.

    Order of resolution: agent move (blocked moves keep the cell), key
    pickup, goal check, enemy advance + capture check (CTFE), timeout.
    When several fire on the same step, the terminal events win:
    GoalReached > Captured > TimedOut > KeyCollected.
    """
    if state.status is not Status.ACTIVE:
        raise SteppedTerminalStateError(f"game already ended with {state.status.value}")
    if horizon is None:
        horizon = gm.horizon

    dr, dc = ACTION_DELTAS[Action(action)]
    target = (state.agent[0] + dr, state.agent[1] + dc)
    if gm.is_passable(target):
        agent, event = target, Event.MOVED
    else:
        agent, event = state.agent, Event.BLOCKED

    has_key = state.has_key
    if gm.key is not None and not has_key and agent == gm.key:
        has_key = True
        event = Event.KEY_COLLECTED

    steps_taken = state.steps_taken + 1
    enemy_index, enemy_dir = state.enemy_index, state.enemy_dir
    status = Status.ACTIVE

    reached_goal = agent == gm.goal and (gm.game_kind is GameKind.MAZE or has_key)
    if reached_goal:
        event, status = Event.GOAL_REACHED, Status.GOAL_REACHED
    else:
        if gm.game_kind is GameKind.CTFE:
            enemy_index, enemy_dir = enemy_next(gm, enemy_index, enemy_dir)
            if manhattan(agent, gm.patrol[enemy_index]) <= 1:
                event, status = Event.CAPTURED, Status.CAPTURED
        if status is Status.ACTIVE and steps_taken >= horizon:
            event, status = Event.TIMED_OUT, Status.TIMED_OUT

    next_state = GameState(
        agent=agent,
        has_key=has_key,
        enemy_index=enemy_index,
        enemy_dir=enemy_dir,
        steps_taken=steps_taken,
        status=status,
    )
    reward = base_reward(gm, event, next_state, dist)
    return StepOutcome(next_state=next_state, base_reward=reward,
                       terminal=status is not Status.ACTIVE, event=event)


def base_reward(gm: GridMap, event: Event, resulting_state: GameState,
                dist: "DistanceTable") -> float:
    """Environment reward for the step that produced ``resulting_state``.

    MAZE: 100 at the goal, otherwise 1 - d(s,goal)/ecc(goal).
    CTF/CTFE: 100 on key pickup, 1000 at the goal with the key, 0 on
    capture, otherwise the distance term toward the current objective
    (key while the agent lacks it, goal afterwards).
    """
    if event is Event.GOAL_REACHED:
        return 100.0 if gm.game_kind is GameKind.MAZE else 1000.0
    if event is Event.KEY_COLLECTED:
        return 100.0
    if event is Event.CAPTURED:
        return 0.0
    if gm.game_kind is not GameKind.MAZE and not resulting_state.has_key:
        target = gm.key
    else:
        target = gm.goal
    return 1.0 - dist.ratio_to(resulting_state.agent, target)
