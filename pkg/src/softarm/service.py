"""Live interaction service: closed-loop session behind a WebSocket.

One control-loop thread owns the session (plant, task, models) and ticks at
the configured rate; per tick it replans online from encoder estimates,
applies the chosen controller, steps the plant, and fans a JSON frame out to
every subscriber. Inbound commands are queued and applied atomically between
ticks, so no frame ever reflects a half-applied task edit. Slow subscribers
lose oldest frames first; the control tick never blocks on the network.

Wire protocol (version 1, JSON text frames over one duplex WebSocket):
  out: {"type": "hello", ...}   once per connection
       {"type": "frame", ...}   every tick
       {"type": "ack" | "error", ...}  per command
  in:  {"type": "set_target" | "move_target" | "set_obstacle" |
        "move_obstacle" | "set_threshold" | "add_obstacle" | "pause" |
        "resume" | "set_controller" | "load_preset", ...}
Ground-truth fields in frames are display-only: the control path never
reads them, which tests prove by replay equality.
"""

# no `from __future__ import annotations` here: FastAPI resolves endpoint
# annotations at decoration time against the function's globals, and the
# fastapi imports are deliberately local to create_app

import asyncio
import json
import math
import threading
import time
from dataclasses import dataclass, replace

import numpy as np

from .control import ACTION_SLEW_LIMIT, ControlHistory, cc_control, nn_control, _slew_limit
from .geometry import ArmGeometry, ModuleAction, module_transform
from .planner import Obstacle, PositionTarget, plan_step
from .plant import DisturbanceParams, initial_plant_state, plant_step
from .presets import PRESETS
from .bundles import ModelBundle

PROTOCOL_VERSION = 1
BACKBONE_POINTS = 8
SUBSCRIBER_QUEUE = 32


def _backbone_polyline(arcs, geom: ArmGeometry) -> list:
    """Sampled backbone points per module for display (world frame)."""
    from .geometry import RigidTransform

    frame = RigidTransform(rotation=np.eye(3), translation=np.zeros(3))
    out = []
    for arc in arcs:
        points = []
        for k in range(1, BACKBONE_POINTS + 1):
            partial = replace(arc, bend_angle=arc.bend_angle * k / BACKBONE_POINTS)
            sub = module_transform(
                partial,
                replace(geom, module_length=geom.module_length * k / BACKBONE_POINTS),
            )
            p = frame.rotation @ sub.translation + frame.translation
            points.append([float(v) for v in p])
        frame = frame.compose(module_transform(arc, geom))
        out.append(points)
    return out


class Session:
    """Owns the live closed loop; one mutator thread, message-passing edges."""

    def __init__(
        self,
        geom: ArmGeometry,
        disturbance: DisturbanceParams,
        c2s: ModelBundle,
        c2a: ModelBundle | None,
        preset: str = "online-follow",
        tick_hz: float = 10.0,
        plan_iterations: int = 10,
    ):
        self.geom = geom
        self.disturbance = disturbance
        self.c2s = c2s
        self.c2a = c2a
        self.tick_hz = tick_hz
        self.plan_iterations = plan_iterations
        self.task = PRESETS[preset].build_task(geom)
        self.preset_name = preset
        self.controller = "nn" if c2a is not None else "cc"
        self.paused = False

        self._planner_weights = c2s.tensor_weights()
        self._state = initial_plant_state(geom, disturbance)
        self._history = ControlHistory(module_count=geom.module_count)
        self._encoder = np.tile(np.array([0.0, 0.0, 1.0]), (geom.module_count, 1))
        self._planned = self._encoder.copy()
        self._losses = {"position": 0.0, "orientation": 0.0, "obstacle": 0.0, "smoothness": 0.0}
        self._true_state = None
        self._applied_m = np.zeros((geom.module_count, 3))
        self._tick = 0

        self._commands: list[tuple] = []
        self._subscribers: list = []  # (loop, asyncio.Queue)
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._running = False

    # -- lifecycle --
    def start(self):
        if self._thread is not None:
            return
        self._running = True
        self._thread = threading.Thread(target=self._run, name="softarm-session", daemon=True)
        self._thread.start()

    def stop(self):
        self._running = False
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    # -- subscriber management (called from the event loop) --
    def subscribe(self, loop) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=SUBSCRIBER_QUEUE)
        with self._lock:
            self._subscribers.append((loop, queue))
        return queue

    def unsubscribe(self, queue: asyncio.Queue):
        with self._lock:
            self._subscribers = [(l, q) for (l, q) in self._subscribers if q is not queue]

    def submit(self, command: dict, reply_queue: asyncio.Queue, loop) -> None:
        with self._lock:
            self._commands.append((command, reply_queue, loop))

    def hello(self) -> dict:
        from dataclasses import asdict

        return {
            "type": "hello",
            "version": PROTOCOL_VERSION,
            "tick_hz": self.tick_hz,
            "geometry": asdict(self.geom),
            "preset": self.preset_name,
            "controller": self.controller,
        }

    # -- command application (loop thread, between ticks) --
    def _apply_command(self, command: dict) -> dict:
        kind = command.get("type")
        try:
            if kind == "set_target":
                pos = _vec3(command["position"])
                self.task = replace(
                    self.task,
                    position_targets=(
                        PositionTarget(self.geom.module_count - 1, 1.0, pos),
                    ),
                )
            elif kind == "move_target":
                delta = _vec3(command["delta"])
                current = self.task.position_targets[0].at(0)
                self.task = replace(
                    self.task,
                    position_targets=(
                        PositionTarget(self.geom.module_count - 1, 1.0, current + delta),
                    ),
                )
            elif kind == "set_obstacle":
                index = int(command["index"])
                center = _vec3(command["center"])
                obstacles = list(self.task.obstacles)
                if index == len(obstacles):
                    obstacles.append(
                        Obstacle(center, float(command.get("r", 0.1)), 1.0,
                                 (self.geom.module_count - 1,))
                    )
                else:
                    obstacles[index] = replace(obstacles[index], center=center)
                self.task = replace(self.task, obstacles=tuple(obstacles))
            elif kind == "move_obstacle":
                index = int(command["index"])
                delta = _vec3(command["delta"])
                obstacles = list(self.task.obstacles)
                obstacles[index] = replace(
                    obstacles[index], center=obstacles[index].center + delta
                )
                self.task = replace(self.task, obstacles=tuple(obstacles))
            elif kind == "set_threshold":
                index = int(command["index"])
                r = float(command["r"])
                if not (math.isfinite(r) and r > 0):
                    raise ValueError("threshold must be positive")
                obstacles = list(self.task.obstacles)
                obstacles[index] = replace(obstacles[index], threshold=r)
                self.task = replace(self.task, obstacles=tuple(obstacles))
            elif kind == "add_obstacle":
                center = _vec3(command["center"])
                r = float(command.get("r", 0.1))
                if not (math.isfinite(r) and r > 0):
                    raise ValueError("threshold must be positive")
                self.task = replace(
                    self.task,
                    obstacles=self.task.obstacles
                    + (Obstacle(center, r, 1.0, (self.geom.module_count - 1,)),),
                )
            elif kind == "pause":
                self.paused = True
            elif kind == "resume":
                self.paused = False
            elif kind == "set_controller":
                choice = command["controller"]
                if choice not in ("nn", "cc"):
                    raise ValueError(f"unknown controller '{choice}'")
                if choice == "nn" and self.c2a is None:
                    raise ValueError("no trained controller loaded")
                self.controller = choice
            elif kind == "load_preset":
                name = command["name"]
                if name not in PRESETS:
                    raise ValueError(f"unknown preset '{name}'")
                self.task = PRESETS[name].build_task(self.geom)
                self.preset_name = name
            else:
                raise ValueError(f"unknown command type '{kind}'")
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            return {"type": "error", "command": kind, "reason": str(exc), "tick": self._tick}
        return {"type": "ack", "command": kind, "tick": self._tick}

    # -- one control tick (loop thread) --
    def _tick_once(self):
        with self._lock:
            pending = self._commands
            self._commands = []
        replies = [(self._apply_command(cmd), queue, loop) for cmd, queue, loop in pending]

        degraded = False
        self._history.push_config(self._encoder)
        if not self.paused:
            result = plan_step(
                self._encoder,
                self.task,
                self.c2s,
                step=0,
                iterations=self.plan_iterations,
                weights=self._planner_weights,
            )
            degraded = result.degraded
            if degraded:
                target = self._encoder
                requested = self._applied_m
            else:
                target = result.configs
                self._losses = result.breakdown
                if self.controller == "nn" and self.c2a is not None:
                    requested = nn_control(self.c2a, target, self._history, self.geom)
                else:
                    requested = cc_control(target, self.geom)
            self._applied_m = _slew_limit(self._applied_m, requested, ACTION_SLEW_LIMIT)
            self._planned = target
        losses = self._losses

        actions = [ModuleAction.from_array(row) for row in self._applied_m]
        self._state, robot, self._encoder = plant_step(
            self._state, actions, self.disturbance, self.geom
        )
        self._history.push_action(self._applied_m / self.geom.max_cable_displacement)
        self._true_state = robot
        self._tick += 1

        frame = self._build_frame(robot, losses, degraded)
        with self._lock:
            subscribers = list(self._subscribers)
        for reply, queue, loop in replies:
            loop.call_soon_threadsafe(_offer, queue, reply)
        for loop, queue in subscribers:
            loop.call_soon_threadsafe(_offer, queue, frame)

    def _build_frame(self, robot, losses, degraded) -> dict:
        task = self.task
        target = task.position_targets[0].at(0) if task.position_targets else None
        tip = robot.positions[-1]
        obstacles = []
        for ob in task.obstacles:
            obstacles.append(
                {
                    "center": [float(v) for v in ob.center],
                    "r": float(ob.threshold),
                    "d": float(np.linalg.norm(ob.center - tip)),
                }
            )
        total = float(sum(losses.values()))
        return {
            "type": "frame",
            "version": PROTOCOL_VERSION,
            "tick": self._tick,
            "positions": robot.positions.tolist(),
            "orientations": robot.orientations.tolist(),
            "backbone": _backbone_polyline(self._state.realized_arcs(), self.geom),
            "truth_display_only": True,
            "encoder_configs": self._encoder.tolist(),
            "planned_configs": np.asarray(self._planned).tolist(),
            "applied_actions": (self._applied_m / self.geom.max_cable_displacement).tolist(),
            "target": None if target is None else [float(v) for v in target],
            "obstacles": obstacles,
            "losses": {**{k: float(v) for k, v in losses.items()}, "total": total},
            "controller": self.controller,
            "paused": self.paused,
            "degraded": bool(degraded),
        }

    def _run(self):
        period = 1.0 / self.tick_hz if self.tick_hz > 0 else 0.0
        while self._running:
            started = time.perf_counter()
            self._tick_once()
            if period > 0:
                remaining = period - (time.perf_counter() - started)
                if remaining > 0:
                    time.sleep(remaining)


def _vec3(values) -> np.ndarray:
    vec = np.asarray([float(v) for v in values], dtype=float)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise ValueError("expected three finite numbers")
    return vec


def _offer(queue: asyncio.Queue, item) -> None:
    """Drop-oldest enqueue; runs inside the subscriber's event loop."""
    while queue.full():
        try:
            queue.get_nowait()
        except asyncio.QueueEmpty:
            break
    queue.put_nowait(item)


def create_app(session: Session):
    """FastAPI app exposing the duplex channel at /ws."""
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    @asynccontextmanager
    async def lifespan(app):
        session.start()
        try:
            yield
        finally:
            session.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.get("/health")
    async def health():
        return {"status": "ok", "tick": session._tick}

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        loop = asyncio.get_running_loop()
        queue = session.subscribe(loop)
        await ws.send_text(json.dumps(session.hello()))

        async def pump_outbound():
            while True:
                item = await queue.get()
                await ws.send_text(json.dumps(item))

        sender = asyncio.create_task(pump_outbound())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    command = json.loads(raw)
                    if not isinstance(command, dict):
                        raise ValueError("command must be a JSON object")
                except (json.JSONDecodeError, ValueError) as exc:
                    loop.call_soon(
                        _offer, queue,
                        {"type": "error", "command": None, "reason": f"bad command: {exc}"},
                    )
                    continue
                session.submit(command, queue, loop)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            session.unsubscribe(queue)

    _mount_ui(app)
    return app


def _mount_ui(app) -> None:
    """Serve the browser client when its build output is present."""
    from pathlib import Path

    for candidate in (
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
        Path.cwd() / "frontend" / "dist",
    ):
        if candidate.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=str(candidate), html=True), name="ui")
            return


def serve(geom, c2s, c2a, preset, host, port, tick_hz, seed) -> int:
    import uvicorn

    session = Session(
        geom=geom,
        disturbance=DisturbanceParams(seed=seed),
        c2s=c2s,
        c2a=c2a,
        preset=preset,
        tick_hz=tick_hz,
    )
    app = create_app(session)
    print(f"serving interaction session on ws://{host}:{port}/ws (preset {preset})")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0
