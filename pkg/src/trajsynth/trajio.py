"""Trajectory data model and its canonical on-disk form.

One trajectory per line of a JSON-lines file.  Records are canonical:
keys sorted, floats printed with 17 significant digits, LF endings — so
equal trajectories serialize to byte-identical files.  The enemy position
is never recorded; under the turn-synchronous patrol it is a pure
function of the step index and so is recovered by replay.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .distances import DistanceTable, distance_table
from .errors import (
    DigestMismatchError,
    EmptyTrajectoryError,
    MapMismatchError,
    ReplayMismatchError,
    SchemaVersionError,
    TrajectoryFormatError,
)
from .gridworld import Action, GameKind, GameState, GridMap, Status, initial_state, obs_id, step

SCHEMA_VERSION = "traj/1"

_TERMINAL_STATUSES = frozenset({Status.GOAL_REACHED, Status.CAPTURED, Status.TIMED_OUT})


class Source(str, enum.Enum):
    HUMAN = "human"
    DQN = "dqn"
    DAGGER_E = "dagger_e"
    DAGGER_PLUS_E = "dagger_plus_e"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class TrajStep:
    """State observed before the action, the action, and its rewards."""

    obs_id: int
    row: int
    col: int
    has_key: bool
    action_id: int
    base_reward: float
    shaped_reward: Optional[float] = None


@dataclass(frozen=True)
class Trajectory:
    map_id: str
    game_kind: GameKind
    source: Source
    steps: tuple[TrajStep, ...]
    outcome: Status
    created_at: Optional[str] = None  # ISO-8601; None for generated data
    session_id: Optional[str] = None

    def __post_init__(self):
        if not self.steps:
            raise EmptyTrajectoryError("a completed trajectory records at least one step")
        if self.outcome not in _TERMINAL_STATUSES:
            raise TrajectoryFormatError(f"outcome {self.outcome!r} is not terminal")

    def base_return(self, gamma: Optional[float] = None) -> float:
        """Sum of base rewards; discounted from the first step when a
        discount factor is given."""
        if gamma is None:
            return sum(s.base_reward for s in self.steps)
        return sum(s.base_reward * gamma**i for i, s in enumerate(self.steps))

    def shaped_return(self, gamma: Optional[float] = None) -> float:
        """Like base_return but uses the recorded shaped reward where one
        is present (shaped values already include the base reward)."""
        vals = [s.base_reward if s.shaped_reward is None else s.shaped_reward
                for s in self.steps]
        if gamma is None:
            return sum(vals)
        return sum(v * gamma**i for i, v in enumerate(vals))


def format_float(x: float) -> str:
    """Canonical float text: 17 significant digits, always visibly a float."""
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("non-finite value in a trajectory record")
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_emit(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(f"{json.dumps(k)}:{_emit(v)}" for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """Canonical JSON text (sorted keys, fixed float format) for any
    JSON-representable object; used wherever byte-stable output matters."""
    return _emit(obj)


def to_record(traj: Trajectory) -> dict:
    steps = []
    for s in traj.steps:
        rec = {
            "obs_id": s.obs_id,
            "row": s.row,
            "col": s.col,
            "has_key": s.has_key,
            "action_id": s.action_id,
            "base_reward": s.base_reward,
        }
        if s.shaped_reward is not None:
            rec["shaped_reward"] = s.shaped_reward
        steps.append(rec)
    return {
        "schema_version": SCHEMA_VERSION,
        "map_id": traj.map_id,
        "game_kind": traj.game_kind.value,
        "source": traj.source.value,
        "outcome": traj.outcome.value,
        "created_at": traj.created_at,
        "session_id": traj.session_id,
        "steps": steps,
    }


def from_record(record: dict) -> Trajectory:
    if not isinstance(record, dict):
        raise TrajectoryFormatError("trajectory record must be a JSON object")
    version = record.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema version {version!r}")
    try:
        steps = tuple(
            TrajStep(
                obs_id=int(s["obs_id"]),
                row=int(s["row"]),
                col=int(s["col"]),
                has_key=bool(s["has_key"]),
                action_id=int(s["action_id"]),
                base_reward=float(s["base_reward"]),
                shaped_reward=(float(s["shaped_reward"]) if "shaped_reward" in s else None),
            )
            for s in record["steps"]
        )
        return Trajectory(
            map_id=str(record["map_id"]),
            game_kind=GameKind(record["game_kind"]),
            source=Source(record["source"]),
            steps=steps,
            outcome=Status(record["outcome"]),
            created_at=record.get("created_at"),
            session_id=record.get("session_id"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, TrajectoryFormatError):
            raise
        raise TrajectoryFormatError(f"malformed trajectory record: {exc}") from exc


def dumps(traj: Trajectory) -> str:
    """One canonical JSON line (no trailing newline)."""
    return _emit(to_record(traj))


def loads(line: str) -> Trajectory:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"invalid JSON: {exc}") from exc
    return from_record(record)


def replay_states(traj: Trajectory, gm: GridMap,
                  dist: Optional[DistanceTable] = None) -> list[GameState]:
    """Re-simulate the recorded actions; returns the pre-action state for
    every step plus the final (terminal) state."""
    if traj.map_id != gm.map_id:
        raise MapMismatchError(f"trajectory is for map {traj.map_id}, not {gm.map_id}")
    if dist is None:
        dist = distance_table(gm)
    state = initial_state(gm)
    states = [state]
    for s in traj.steps:
        state = step(gm, state, Action(s.action_id), dist).next_state
        states.append(state)
    return states


def validate_replay(traj: Trajectory, gm: GridMap,
                    dist: Optional[DistanceTable] = None) -> Optional[str]:
    """None when the record replays exactly; otherwise a description of the
    first disagreement between recorded and simulated states."""
    try:
        states = replay_states(traj, gm, dist)
    except MapMismatchError as exc:
        return str(exc)
    except Exception as exc:  # e.g. stepping past a terminal state
        return f"replay failed: {exc}"
    for i, (rec, sim) in enumerate(zip(traj.steps, states)):
        if (rec.row, rec.col) != sim.agent or rec.has_key != sim.has_key:
            return (f"step {i}: recorded ({rec.row},{rec.col},key={rec.has_key}) "
                    f"but simulation gives ({sim.agent[0]},{sim.agent[1]},key={sim.has_key})")
        expected_obs = obs_id(gm, sim)
        if rec.obs_id != expected_obs:
            return f"step {i}: recorded obs_id {rec.obs_id} but state encodes to {expected_obs}"
        if sim.status is not Status.ACTIVE:
            return f"step {i}: action recorded in terminal status {sim.status.value}"
    final = states[-1]
    if final.status != traj.outcome:
        return (f"outcome {traj.outcome.value} but simulation "
                f"terminates as {final.status.value}")
    return None


def save_jsonl(trajs: Iterable[Trajectory], path: Path) -> int:
    """Write one canonical line per trajectory; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for traj in trajs:
            fh.write(dumps(traj))
            fh.write("\n")
            count += 1
    return count


def load_jsonl(path: Path, gm: Optional[GridMap] = None,
               dist: Optional[DistanceTable] = None) -> list[Trajectory]:
    """Load a trajectory file; when a map is supplied, every record must
    replay exactly or ReplayMismatchError is raised."""
    trajs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                traj = loads(line)
            except TrajectoryFormatError as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
            if gm is not None:
                problem = validate_replay(traj, gm, dist)
                if problem is not None:
                    raise ReplayMismatchError(f"{path}:{lineno}: {problem}")
            trajs.append(traj)
    return trajs


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    path: str  # relative to the manifest's directory
    source: Source
    count: int
    digest: str


@dataclass(frozen=True)
class DatasetManifest:
    map_path: str
    map_id: str
    entries: tuple[ManifestEntry, ...]


def build_manifest(map_path: str, map_id: str, files: Iterable[Path],
                   base_dir: Path) -> DatasetManifest:
    """Digest and count each trajectory file, recording paths relative to
    ``base_dir`` (where the manifest will live)."""
    base_dir = Path(base_dir)
    entries = []
    for path in files:
        path = Path(path)
        trajs = load_jsonl(path)
        if not trajs:
            raise EmptyTrajectoryError(f"{path} holds no trajectories")
        sources = {t.source for t in trajs}
        if len(sources) != 1:
            raise TrajectoryFormatError(f"{path} mixes sources {sorted(s.value for s in sources)}")
        entries.append(ManifestEntry(
            path=path.relative_to(base_dir).as_posix(),
            source=next(iter(sources)),
            count=len(trajs),
            digest=file_digest(path),
        ))
    entries.sort(key=lambda e: e.path)
    return DatasetManifest(map_path=map_path, map_id=map_id, entries=tuple(entries))


def write_manifest(manifest: DatasetManifest, path: Path) -> None:
    record = {
        "schema_version": SCHEMA_VERSION,
        "map_path": manifest.map_path,
        "map_id": manifest.map_id,
        "files": [
            {"path": e.path, "source": e.source.value, "count": e.count, "digest": e.digest}
            for e in manifest.entries
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_emit(record))
        fh.write("\n")


def read_manifest(path: Path, verify: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"{path}: invalid JSON: {exc}") from exc
    if record.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: unsupported schema version")
    entries = tuple(
        ManifestEntry(path=f["path"], source=Source(f["source"]),
                      count=int(f["count"]), digest=str(f["digest"]))
        for f in record["files"]
    )
    manifest = DatasetManifest(map_path=str(record["map_path"]),
                               map_id=str(record["map_id"]), entries=entries)
    if verify:
        for entry in entries:
            target = path.parent / entry.path
            if not target.exists():
                raise DigestMismatchError(f"{target} listed in manifest but missing")
            actual = file_digest(target)
            if actual != entry.digest:
                raise DigestMismatchError(
                    f"{target}: digest {actual[:12]}… does not match manifest")
    return manifest


def dataset_path(root: Path, game_kind: GameKind, source: Source) -> Path:
    """Conventional layout: <root>/<game>/<source>/ for trajectory files."""
    return Path(root) / game_kind.value / source.value
