"""HTTP service for capturing human demonstrations and replaying stored
trajectories.

The server owns all game state: clients send only action ids and render
whatever comes back.  Saved trajectories are validated by replay before
they are acknowledged, written atomically, and never modified afterwards.
The on-screen score follows the human-facing convention (+100 for the
key, +1000 for finishing a key game, +100 for finishing a maze, 0 when
captured) and is independent of the agent-facing reward signal.
"""
from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .distances import DistanceTable, distance_table
from .gridworld import (
    Action,
    GameKind,
    GameState,
    GridMap,
    Status,
    bundled_map_names,
    enemy_cell,
    initial_state,
    load_bundled_map,
    load_map_file,
    obs_id,
    step,
)
from .trajio import (
    Source,
    TrajStep,
    Trajectory,
    dumps as traj_dumps,
    load_jsonl,
    validate_replay,
)

DEFAULT_TTL_SECONDS = 30 * 60

_GOAL_SCORE = {GameKind.MAZE: 100, GameKind.CTF: 1000, GameKind.CTFE: 1000}
_KEY_SCORE = 100


@dataclass
class _Session:
    session_id: str
    map_name: str
    gm: GridMap
    dist: DistanceTable
    state: GameState
    steps: list[TrajStep] = field(default_factory=list)
    score: int = 0
    last_event: Optional[str] = None
    created_at: str = ""
    expires_at: float = 0.0
    saved_as: Optional[str] = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class CreateSessionRequest(BaseModel):
    map_name: Optional[str] = None
    game_kind: Optional[str] = None


class ActionRequest(BaseModel):
    action_id: int = Field(ge=0, le=3)


class SaveRequest(BaseModel):
    label: str = Field(default="anonymous", min_length=1, max_length=64,
                       pattern=r"^[A-Za-z0-9_-]+$")


_DEFAULT_MAP_FOR_KIND = {
    GameKind.MAZE: "maze_20x13",
    GameKind.CTF: "ctf_20x20",
    GameKind.CTFE: "ctfe_20x20",
}


def _map_rows(gm: GridMap) -> list[str]:
    rows = []
    for r in range(gm.height):
        chars = []
        for c in range(gm.width):
            cell = (r, c)
            if not gm.passable[r][c]:
                chars.append("#")
            elif cell == gm.start:
                chars.append("S")
            elif cell == gm.goal:
                chars.append("G")
            elif gm.key is not None and cell == gm.key:
                chars.append("K")
            elif gm.patrol is not None and cell in gm.patrol:
                chars.append("E")
            else:
                chars.append(".")
        rows.append("".join(chars))
    return rows


def create_app(maps_dir: Optional[str] = None,
               datasets_dir: Path = Path("datasets"),
               ttl_seconds: int = DEFAULT_TTL_SECONDS,
               static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="trajsynth demonstration capture")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])

    maps: dict[str, GridMap] = {}
    for name in bundled_map_names():
        maps[name] = load_bundled_map(name)
    if maps_dir:
        for path in sorted(Path(maps_dir).glob("*.txt")):
            maps[path.stem] = load_map_file(path)

    datasets_dir = Path(datasets_dir)
    dists: dict[str, DistanceTable] = {}
    sessions: dict[str, _Session] = {}
    store_lock = threading.Lock()

    def _dist_for(name: str, gm: GridMap) -> DistanceTable:
        with store_lock:
            if name not in dists:
                dists[name] = distance_table(gm)
            return dists[name]

    def _get_session(session_id: str) -> _Session:
        with store_lock:
            session = sessions.get(session_id)
            if session is None:
                raise HTTPException(404, "unknown session")
            if time.monotonic() > session.expires_at:
                del sessions[session_id]
                raise HTTPException(410, "session expired")
            return session

    def _render(session: _Session) -> dict:
        state = session.state
        enemy = enemy_cell(session.gm, state)
        return {
            "session_id": session.session_id,
            "map_name": session.map_name,
            "game_kind": session.gm.game_kind.value,
            "width": session.gm.width,
            "height": session.gm.height,
            "agent": {"row": state.agent[0], "col": state.agent[1]},
            "has_key": state.has_key,
            "enemy": None if enemy is None else {"row": enemy[0], "col": enemy[1]},
            "score": session.score,
            "steps_taken": state.steps_taken,
            "status": state.status.value,
            "last_event": session.last_event,
            "saved_as": session.saved_as,
        }

    @app.get("/api/maps")
    def list_maps() -> list[dict]:
        out = []
        for name in sorted(maps):
            gm = maps[name]
            out.append({
                "name": name,
                "game_kind": gm.game_kind.value,
                "width": gm.width,
                "height": gm.height,
                "horizon": gm.horizon,
                "map_id": gm.map_id,
                "rows": _map_rows(gm),
            })
        return out

    @app.post("/api/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        if req.map_name is not None:
            name = req.map_name
        elif req.game_kind is not None:
            try:
                name = _DEFAULT_MAP_FOR_KIND[GameKind(req.game_kind)]
            except ValueError:
                raise HTTPException(422, f"unknown game kind {req.game_kind!r}")
        else:
            raise HTTPException(422, "provide map_name or game_kind")
        gm = maps.get(name)
        if gm is None:
            raise HTTPException(404, f"unknown map {name!r}")
        session = _Session(
            session_id=secrets.token_urlsafe(16),
            map_name=name,
            gm=gm,
            dist=_dist_for(name, gm),
            state=initial_state(gm),
            created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            expires_at=time.monotonic() + ttl_seconds,
        )
        with store_lock:
            sessions[session.session_id] = session
        view = _render(session)
        view["map_rows"] = _map_rows(gm)
        return view

    @app.get("/api/sessions/{session_id}")
    def get_state(session_id: str) -> dict:
        return _render(_get_session(session_id))

    @app.post("/api/sessions/{session_id}/actions")
    def post_action(session_id: str, req: ActionRequest) -> dict:
        session = _get_session(session_id)
        with session.lock:
            if session.state.status is not Status.ACTIVE:
                raise HTTPException(409, "session already finished")
            state = session.state
            action = Action(req.action_id)
            out = step(session.gm, state, action, session.dist)
            session.steps.append(TrajStep(
                obs_id=obs_id(session.gm, state), row=state.agent[0],
                col=state.agent[1], has_key=state.has_key,
                action_id=int(action), base_reward=out.base_reward))
            if out.event.value == "key_collected":
                session.score += _KEY_SCORE
            if out.next_state.status is Status.GOAL_REACHED:
                session.score += _GOAL_SCORE[session.gm.game_kind]
            elif out.next_state.status is Status.CAPTURED:
                session.score = 0
            session.state = out.next_state
            session.last_event = out.event.value
            session.expires_at = time.monotonic() + ttl_seconds
            return _render(session)

    @app.post("/api/sessions/{session_id}/save", status_code=201)
    def save_trajectory(session_id: str, req: SaveRequest) -> dict:
        session = _get_session(session_id)
        with session.lock:
            if session.state.status is Status.ACTIVE:
                raise HTTPException(409, "session still in progress")
            traj = Trajectory(
                map_id=session.gm.map_id, game_kind=session.gm.game_kind,
                source=Source.HUMAN, steps=tuple(session.steps),
                outcome=session.state.status, created_at=session.created_at,
                session_id=session.session_id)
            problem = validate_replay(traj, session.gm, session.dist)
            if problem is not None:
                raise HTTPException(500, f"recorded moves failed replay: {problem}")
            target_dir = datasets_dir / session.gm.game_kind.value / "human"
            target_dir.mkdir(parents=True, exist_ok=True)
            target = target_dir / f"{req.label}-{session.session_id[:8]}.jsonl"
            tmp = target.with_suffix(".jsonl.tmp")
            tmp.write_text(traj_dumps(traj) + "\n", encoding="utf-8")
            tmp.replace(target)
            rel = target.relative_to(datasets_dir).as_posix()
            session.saved_as = f"{rel}#0"
            return {"trajectory_id": session.saved_as, "path": rel,
                    "outcome": traj.outcome.value, "steps": len(traj.steps)}

    def _iter_stored():
        if not datasets_dir.is_dir():
            return
        for path in sorted(datasets_dir.rglob("*.jsonl")):
            rel = path.relative_to(datasets_dir).as_posix()
            try:
                trajs = load_jsonl(path)
            except Exception:
                continue  # skip foreign or partial files
            for i, traj in enumerate(trajs):
                yield f"{rel}#{i}", traj

    @app.get("/api/trajectories")
    def list_trajectories(game: Optional[str] = None,
                          source: Optional[str] = None) -> list[dict]:
        out = []
        for traj_id, traj in _iter_stored():
            if game and traj.game_kind.value != game:
                continue
            if source and traj.source.value != source:
                continue
            out.append({
                "id": traj_id,
                "game_kind": traj.game_kind.value,
                "source": traj.source.value,
                "steps": len(traj.steps),
                "outcome": traj.outcome.value,
                "map_id": traj.map_id,
            })
        return out

    @app.get("/api/trajectories/{traj_id:path}")
    def get_trajectory(traj_id: str) -> dict:
        rel, _, index_text = traj_id.partition("#")
        try:
            index = int(index_text) if index_text else 0
        except ValueError:
            raise HTTPException(404, "unknown trajectory")
        path = (datasets_dir / rel).resolve()
        if not str(path).startswith(str(datasets_dir.resolve())) or not path.is_file():
            raise HTTPException(404, "unknown trajectory")
        trajs = load_jsonl(path)
        if not 0 <= index < len(trajs):
            raise HTTPException(404, "unknown trajectory")
        traj = trajs[index]
        map_name = next((n for n, gm in maps.items() if gm.map_id == traj.map_id), None)
        return {
            "id": traj_id,
            "map_id": traj.map_id,
            "map_name": map_name,
            "game_kind": traj.game_kind.value,
            "source": traj.source.value,
            "outcome": traj.outcome.value,
            "created_at": traj.created_at,
            "steps": [
                {"obs_id": s.obs_id, "row": s.row, "col": s.col,
                 "has_key": s.has_key, "action_id": s.action_id}
                for s in traj.steps
            ],
        }

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="client")

    return app
