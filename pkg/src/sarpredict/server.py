"""Live mission service: a human plays over a WebSocket while the model
predicts their current goal and next victim type after every action.

HTTP bootstrap: GET /maps, GET /models, POST /session, GET /schema; the
static browser UI is served at /. Gameplay runs over /ws/session/{id} with
JSON messages; every server message carries a monotonically increasing
sequence number, and state updates are cell deltas rather than full grids.
"""

from __future__ import annotations

import asyncio
import json
import secrets
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import bundled_map_names, bundled_map_path, neural
from .areagraph import fold_events, init_graph
from .features import MoveWindow, build_frame, enumerate_goals
from .neural import frames_to_dataset
from .world import (DIR_DELTA, GridMap, MissionSim, SimConfig, SimError, SimEvent,
                    load_map, write_log)

WIRE_VERSION = 1


def wire_schema() -> dict:
    path = Path(__file__).with_name("wire_schema.json")
    return json.loads(path.read_text(encoding="utf-8"))


class LiveSession:
    """One mission, one player, one model; mutated strictly in arrival order."""

    def __init__(self, session_id: str, map_id: str, gmap: GridMap,
                 model_id: str, params: neural.ModelParams,
                 session_dir: Path, sim_config: SimConfig = SimConfig()):
        self.session_id = session_id
        self.map_id = map_id
        self.model_id = model_id
        self.map = gmap
        self.params = params
        self.sim_config = sim_config
        self.session_dir = session_dir
        self.lock = asyncio.Lock()
        self.connected = False
        self.seq = 0
        self.closed_path: Path | None = None
        self._reset()

    def _reset(self):
        self.sim = MissionSim(self.map, self.sim_config)
        self.graph = init_graph(self.map)
        self.window = MoveWindow(self.params.manifest["m"], start=self.sim.agent)
        self.events: list[SimEvent] = []
        self._grid = self.sim.cells()

    def _next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def snapshot(self) -> dict:
        return {
            "v": WIRE_VERSION,
            "seq": self._next_seq(),
            "session_id": self.session_id,
            "map_id": self.map_id,
            "model_id": self.model_id,
            "height": self.map.height,
            "width": self.map.width,
            "grid": self.sim.cells(),
            "clock": self.sim.t,
            "score": self.sim.score,
            "spawn": list(self.map.spawn),
            "m": self.params.manifest["m"],
            "time_limit": self.sim.config.time_limit,
            "expiry_time": self.sim.config.expiry_time,
            "victims": [
                {"id": v.id, "row": v.cell[0], "col": v.cell[1], "color": v.color,
                 "status": self.sim.victim_status[v.id]}
                for v in self.map.victims
            ],
        }

    def _error(self, message: str) -> dict:
        return {"v": WIRE_VERSION, "seq": self._next_seq(), "ok": False, "error": message}

    def _done(self) -> bool:
        if self.sim.mission_over:
            return True
        return all(s != "waiting" for s in self.sim.victim_status.values())

    def apply(self, msg: dict) -> dict:
        """Apply one client action and build the reply message."""
        action = msg.get("action") or {}
        kind = action.get("kind")
        if kind == "start":
            self._reset()
            snap = self.snapshot()
            snap["ok"] = True
            return snap
        if kind == "end":
            path = self.close()
            return {"v": WIRE_VERSION, "seq": self._next_seq(), "ok": True,
                    "done": True, "score": self.sim.score, "clock": self.sim.t,
                    "log": str(path)}
        try:
            if kind == "move":
                direction = action.get("dir")
                if direction not in DIR_DELTA:
                    return self._error(f"unknown direction {direction!r}")
                out = self.sim.step_move(direction)
                self.window.push(self.sim.agent)
            elif kind == "triage":
                out = self.sim.step_triage()
            else:
                return self._error(f"unknown action kind {kind!r}")
        except SimError as exc:
            return self._error(str(exc))

        self.events += out
        self.graph = fold_events(self.graph, out)

        grid = self.sim.cells()
        delta = [{"row": r, "col": c, "code": grid[r][c]}
                 for r in range(self.map.height) for c in range(self.map.width)
                 if grid[r][c] != self._grid[r][c]]
        self._grid = grid

        reply = {
            "v": WIRE_VERSION,
            "seq": self._next_seq(),
            "ok": True,
            "clock": self.sim.t,
            "score": self.sim.score,
            "delta": delta,
            "events": [{"kind": e.kind, "t": e.t, "payload": e.payload} for e in out],
            "window_fill": self.window.fill,
            "predictions": None,
            "p_yellow": None,
            "done": self._done(),
        }
        if self.window.full and self.sim.current_area is not None:
            candidates = enumerate_goals(self.map, self.sim.current_area, self.sim.victim_status)
            if len(candidates) >= 2:
                frame = build_frame(self.map, self.graph, self.window, self.sim.current_area,
                                    self.sim.victim_status, t=self.sim.t)
                data = frames_to_dataset([frame], self.params.manifest["variant"],
                                         self.params.manifest["area_order"])
                pred, _ = neural.forward(self.params, data.hr, data.lr, data.mask, mode="infer")
                reply["predictions"] = [
                    {"slot": c.slot, "kind": c.kind, "ref_id": c.ref_id,
                     "cell": list(c.cell), "prob": float(pred.goal_probs[0][c.slot])}
                    for c in candidates
                ]
                reply["p_yellow"] = float(pred.p_yellow[0])
        return reply

    def close(self) -> Path:
        """Persist the trajectory log in corpus format; idempotent."""
        if self.closed_path is not None:
            return self.closed_path
        self.session_dir.mkdir(parents=True, exist_ok=True)
        meta = SimEvent("meta", 0.0, {
            "trial_id": self.session_id, "map_id": self.map_id,
            "difficulty": self.map_id, "policy": "human",
            "model_id": self.model_id, "noise_eps": 0.0, "seed": 0,
        })
        path = self.session_dir / f"session_{self.session_id}.ndjson"
        write_log([meta] + self.events, path)
        self.closed_path = path
        return path


def create_app(maps_dir: str | None = None, models_dir: str | None = None,
               session_dir: str | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="sarpredict live service")
    sessions: dict[str, LiveSession] = {}
    map_cache: dict[str, GridMap] = {}
    sess_dir = Path(session_dir or "sessions")

    def map_paths() -> dict[str, Path]:
        out = {name: Path(str(bundled_map_path(name))) for name in bundled_map_names()}
        if maps_dir:
            for p in sorted(Path(maps_dir).glob("*.map")):
                out[p.stem] = p
        return out

    def model_paths() -> dict[str, Path]:
        out = {}
        if models_dir:
            for p in sorted(Path(models_dir).glob("*.bin")):
                out[p.stem] = p
        return out

    def get_map(map_id: str) -> GridMap:
        if map_id not in map_cache:
            paths = map_paths()
            if map_id not in paths:
                raise HTTPException(404, f"unknown map {map_id!r}")
            map_cache[map_id] = load_map(str(paths[map_id]))
        return map_cache[map_id]

    @app.get("/maps")
    def list_maps():
        out = []
        for map_id in sorted(map_paths()):
            gmap = get_map(map_id)
            yellow, green = gmap.census()
            out.append({"id": map_id, "height": gmap.height, "width": gmap.width,
                        "areas": len(gmap.areas), "victims": len(gmap.victims),
                        "yellow": yellow, "green": green})
        return {"v": WIRE_VERSION, "maps": out}

    @app.get("/models")
    def list_models():
        out = []
        for model_id, path in model_paths().items():
            manifest = neural.load_model(path).manifest
            out.append({"id": model_id, "variant": manifest["variant"], "m": manifest["m"],
                        "map_id": manifest.get("map_id", ""), "n_areas": manifest["n_areas"]})
        return {"v": WIRE_VERSION, "models": out}

    @app.get("/schema")
    def get_schema():
        return JSONResponse(wire_schema())

    @app.post("/session")
    async def open_session(body: dict):
        map_id = body.get("map_id")
        model_id = body.get("model_id")
        gmap = get_map(map_id)
        models = model_paths()
        if model_id not in models:
            raise HTTPException(404, f"unknown model {model_id!r}")
        params = neural.load_model(models[model_id])
        if params.manifest["n_areas"] != len(gmap.areas):
            raise HTTPException(409, f"model {model_id!r} expects {params.manifest['n_areas']} "
                                     f"areas; map {map_id!r} has {len(gmap.areas)}")
        session_id = secrets.token_hex(8)
        session = LiveSession(session_id, map_id, gmap, model_id, params, sess_dir)
        sessions[session_id] = session
        return {"v": WIRE_VERSION, "session_id": session_id, "snapshot": session.snapshot()}

    @app.post("/session/{session_id}/close")
    async def close_session(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, "unknown session")
        async with session.lock:
            path = session.close()
        return {"v": WIRE_VERSION, "session_id": session_id, "log": str(path)}

    @app.websocket("/ws/session/{session_id}")
    async def session_socket(websocket: WebSocket, session_id: str):
        session = sessions.get(session_id)
        if session is None:
            await websocket.close(code=4404)
            return
        if session.connected:
            await websocket.close(code=4409)  # one live connection per session
            return
        await websocket.accept()
        session.connected = True
        try:
            while True:
                msg = await websocket.receive_json()
                async with session.lock:
                    reply = session.apply(msg)
                await websocket.send_json(reply)
                if (msg.get("action") or {}).get("kind") == "end":
                    await websocket.close()
                    break
        except WebSocketDisconnect:
            pass
        finally:
            session.connected = False

    ui = Path(ui_dir) if ui_dir else Path("frontend") / "dist"
    if ui.is_dir():
        app.mount("/", StaticFiles(directory=str(ui), html=True), name="ui")
    return app
