"""Configuration-to-action control and the closed-loop runner.

Two interchangeable controllers track planned configurations from encoder
estimates only: an analytic constant-curvature inverse and the learned
biLSTM controller fed with recent history. The closed-loop runner wires
planner -> controller -> plant -> encoders at the simulated tick rate and
logs everything; ground-truth state enters the log for evaluation but is
unreachable from the control path, which the replay helper proves.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .bundles import ModelBundle, nn_c2a_forward
from .datasets import HEADER_PREFIX  # same one-line-header record family
from .errors import DatasetFormatError
from .geometry import (
    ArmGeometry,
    ModuleAction,
    arc_to_action,
    config_to_arc,
    ModuleConfiguration,
)
from .networks import C2A_ACTION_HISTORY, C2A_CONFIG_HISTORY, C2A_FEATURES, module_label
from .planner import PlanStepResult, TaskSpec, plan_step
from .plant import DisturbanceParams, PlantState, initial_plant_state, plant_step

ACTION_SLEW_LIMIT = 0.01  # meters per tick per cable
LOG_PREFIX = "softarm-trajectory v1 "


@dataclass
class ControlHistory:
    """Ring buffers of recent encoder configurations and applied actions."""

    module_count: int = 3
    configs: deque = field(default_factory=deque)  # newest first: C_t..C_{t-3}
    actions: deque = field(default_factory=deque)  # newest first: A_{t-1}..A_{t-5}
    ticks_seen: int = 0

    def __post_init__(self):
        straight = np.tile(np.array([0.0, 0.0, 1.0]), (self.module_count, 1))
        while len(self.configs) < C2A_CONFIG_HISTORY:
            self.configs.append(straight.copy())
        while len(self.actions) < C2A_ACTION_HISTORY:
            self.actions.append(np.zeros((self.module_count, 3)))

    def push_config(self, encoder_configs: np.ndarray) -> None:
        self.configs.appendleft(np.array(encoder_configs, dtype=float))
        while len(self.configs) > C2A_CONFIG_HISTORY:
            self.configs.pop()

    def push_action(self, normalized_actions: np.ndarray) -> None:
        self.actions.appendleft(np.array(normalized_actions, dtype=float))
        while len(self.actions) > C2A_ACTION_HISTORY:
            self.actions.pop()
        self.ticks_seen += 1

    @property
    def warmed_up(self) -> bool:
        return self.ticks_seen >= C2A_ACTION_HISTORY


def controller_features(
    targets: np.ndarray, history: ControlHistory
) -> np.ndarray:
    """Assemble the (modules, 31) controller input matrix."""
    m = history.module_count
    feats = np.zeros((m, C2A_FEATURES))
    feats[:, 0:3] = targets
    for k, cfg in enumerate(history.configs):
        feats[:, 3 + 3 * k : 6 + 3 * k] = cfg
    base = 3 + 3 * C2A_CONFIG_HISTORY
    for k, act in enumerate(history.actions):
        feats[:, base + 3 * k : base + 3 * (k + 1)] = act
    feats[:, -1] = [module_label(i + 1, m) for i in range(m)]
    return feats


def cc_control(targets: np.ndarray, geom: ArmGeometry) -> np.ndarray:
    """Constant-curvature inverse: exact on the undisturbed plant.

    Targets beyond the actuation range keep their bending azimuth and
    saturate the bend angle so the largest cable lands on its bound.
    """
    out = np.zeros((len(targets), 3))
    for m, row in enumerate(np.asarray(targets, dtype=float)):
        arc = config_to_arc(ModuleConfiguration(*row))
        phi, theta = arc.bend_angle, arc.neutral_direction
        amplitudes = np.array(
            [
                -math.sin(theta),
                math.sin(2.0 * math.pi / 3.0 - theta),
                math.sin(theta - math.pi / 3.0),
            ]
        )
        peak = np.abs(amplitudes).max() * geom.cable_radius
        if peak > 0.0 and phi * peak > geom.max_cable_displacement:
            phi = geom.max_cable_displacement / peak
        action = arc_to_action(type(arc)(phi, theta), geom)
        out[m] = action.as_array()
    return out


def nn_control(
    bundle: ModelBundle,
    targets: np.ndarray,
    history: ControlHistory,
    geom: ArmGeometry,
) -> np.ndarray:
    """Learned controller; falls back to CC while history warms up."""
    if not history.warmed_up:
        return cc_control(targets, geom)
    feats = controller_features(targets, history)
    normalized = nn_c2a_forward(bundle, feats)
    return normalized * geom.max_cable_displacement


@dataclass
class TrajectoryLog:
    ticks: np.ndarray  # (T,)
    target_configs: np.ndarray  # (T, modules, 3)
    encoder_configs: np.ndarray  # (T, modules, 3) estimate used at decision time
    true_states: np.ndarray  # (T, modules, 6) resulting ground truth (display only)
    applied_actions: np.ndarray  # (T, modules, 3) normalized
    losses: np.ndarray  # (T, 5) position/orientation/obstacle/smoothness/total
    degraded: np.ndarray  # (T,) bool
    wall_ms: np.ndarray  # (T,)
    meta: dict

    def __len__(self):
        return len(self.ticks)


def _slew_limit(previous: np.ndarray, requested: np.ndarray, limit: float) -> np.ndarray:
    """Uniformly scale the action change: keeps the zero-sum exactly."""
    delta = requested - previous
    peak = np.abs(delta).max()
    if peak <= limit or peak == 0.0:
        return requested
    return previous + delta * (limit / peak)


def run_closed_loop(
    task: TaskSpec,
    controller: str,
    geom: ArmGeometry,
    disturbance: DisturbanceParams,
    ticks: int,
    c2s: ModelBundle | None = None,
    c2a: ModelBundle | None = None,
    offline_plan: np.ndarray | None = None,
    offline_breakdowns: list | None = None,
    slew_limit: float = ACTION_SLEW_LIMIT,
    meta: dict | None = None,
) -> TrajectoryLog:
    """Run the loop for ``ticks`` simulated 10 Hz steps.

    Online mode (offline_plan is None) replans from the current encoder
    estimate every tick through the forward model; offline mode tracks the
    precomputed waypoint configurations. Ground truth is logged after each
    plant step and feeds nothing.
    """
    if controller not in ("nn", "cc"):
        raise ValueError(f"unknown controller '{controller}'")
    if controller == "nn" and c2a is None:
        raise ValueError("nn controller needs a trained c2a bundle")
    if offline_plan is None and c2s is None:
        raise ValueError("online mode needs a trained c2s bundle")

    m = geom.module_count
    state: PlantState = initial_plant_state(geom, disturbance)
    history = ControlHistory(module_count=m)
    encoder = np.tile(np.array([0.0, 0.0, 1.0]), (m, 1))
    applied_m = np.zeros((m, 3))  # meters
    planner_weights = c2s.tensor_weights() if c2s is not None else None

    log = TrajectoryLog(
        ticks=np.arange(ticks, dtype=np.int64),
        target_configs=np.zeros((ticks, m, 3)),
        encoder_configs=np.zeros((ticks, m, 3)),
        true_states=np.zeros((ticks, m, 6)),
        applied_actions=np.zeros((ticks, m, 3)),
        losses=np.zeros((ticks, 5)),
        degraded=np.zeros(ticks, dtype=bool),
        wall_ms=np.zeros(ticks),
        meta=meta or {},
    )

    for t in range(ticks):
        start = time.perf_counter()
        history.push_config(encoder)

        degraded = False
        if offline_plan is not None:
            target = offline_plan[min(t, len(offline_plan) - 1)]
            if offline_breakdowns is not None:
                bd = offline_breakdowns[min(t, len(offline_breakdowns) - 1)]
                losses = _loss_row(bd)
            else:
                losses = np.zeros(5)
        else:
            result: PlanStepResult = plan_step(
                encoder, task, c2s, step=t, weights=planner_weights
            )
            degraded = result.degraded
            target = result.configs
            losses = _loss_row(result.breakdown) if not degraded else np.full(5, np.nan)

        if degraded:
            requested = applied_m  # planner refused to move: hold last action
            target = encoder
        elif controller == "nn":
            requested = nn_control(c2a, target, history, geom)
        else:
            requested = cc_control(target, geom)

        applied_m = _slew_limit(applied_m, requested, slew_limit)
        normalized = applied_m / geom.max_cable_displacement
        actions = [ModuleAction.from_array(row) for row in applied_m]
        state, robot, encoder = plant_step(state, actions, disturbance, geom)
        history.push_action(normalized)

        log.target_configs[t] = target
        log.encoder_configs[t] = history.configs[0]
        log.true_states[t, :, :3] = robot.positions
        log.true_states[t, :, 3:] = robot.orientations
        log.applied_actions[t] = normalized
        log.losses[t] = losses
        log.degraded[t] = degraded
        log.wall_ms[t] = (time.perf_counter() - start) * 1000.0
    return log


def _loss_row(breakdown: dict) -> np.ndarray:
    row = np.array(
        [
            breakdown.get("position", 0.0),
            breakdown.get("orientation", 0.0),
            breakdown.get("obstacle", 0.0),
            breakdown.get("smoothness", 0.0),
            0.0,
        ]
    )
    row[4] = row[:4].sum()
    return row


def replay_actions(
    log: TrajectoryLog,
    task: TaskSpec,
    controller: str,
    geom: ArmGeometry,
    c2s: ModelBundle | None = None,
    c2a: ModelBundle | None = None,
    offline_plan: np.ndarray | None = None,
    slew_limit: float = ACTION_SLEW_LIMIT,
) -> np.ndarray:
    """Recompute applied actions from the logged encoder stream alone.

    Touches neither the plant nor the logged ground truth: equality with the
    logged actions proves the control path is a function of encoder data,
    planner state, and seeds only.
    """
    m = geom.module_count
    history = ControlHistory(module_count=m)
    applied_m = np.zeros((m, 3))
    planner_weights = c2s.tensor_weights() if c2s is not None else None
    out = np.zeros_like(log.applied_actions)
    for t in range(len(log)):
        encoder = log.encoder_configs[t]
        history.push_config(encoder)
        if offline_plan is not None:
            target = offline_plan[min(t, len(offline_plan) - 1)]
            degraded = False
        else:
            result = plan_step(encoder, task, c2s, step=t, weights=planner_weights)
            degraded = result.degraded
            target = result.configs
        if degraded:
            requested = applied_m
        elif controller == "nn":
            requested = nn_control(c2a, target, history, geom)
        else:
            requested = cc_control(target, geom)
        applied_m = _slew_limit(applied_m, requested, slew_limit)
        normalized = applied_m / geom.max_cable_displacement
        history.push_action(normalized)
        out[t] = normalized
    return out


# ---------------------------------------------------------------------------
# metrics


def _polar_deg(vec: np.ndarray) -> float:
    return math.degrees(math.acos(float(np.clip(vec[2] / np.linalg.norm(vec), -1, 1))))


def _azimuth_error_deg(a: np.ndarray, b: np.ndarray) -> float | None:
    pa, pb = a[:2], b[:2]
    na, nb = np.linalg.norm(pa), np.linalg.norm(pb)
    if na < 1e-6 or nb < 1e-6:
        return None
    cosang = float(np.clip(pa @ pb / (na * nb), -1.0, 1.0))
    return math.degrees(math.acos(cosang))


def metrics(log: TrajectoryLog, task: TaskSpec) -> dict:
    """Mean and std tracking errors in the style of the task tables:
    position error [m] per targeted module, orientation error split into
    bend-from-z and in-plane azimuth [deg]."""
    summary: dict = {"position": {}, "orientation_z": {}, "orientation_x": {}, "ticks": len(log)}
    for tgt in task.position_targets:
        if tgt.weight == 0.0:
            continue
        errors = [
            float(np.linalg.norm(log.true_states[t, tgt.module, :3] - tgt.at(t)))
            for t in range(len(log))
        ]
        summary["position"][tgt.module] = (float(np.mean(errors)), float(np.std(errors)))
    for tgt in task.orientation_targets:
        if tgt.weight == 0.0:
            continue
        z_err, x_err = [], []
        for t in range(len(log)):
            real = log.true_states[t, tgt.module, 3:]
            want = tgt.at(t)
            z_err.append(abs(_polar_deg(real) - _polar_deg(want)))
            x = _azimuth_error_deg(real, want)
            if x is not None:
                x_err.append(x)
        summary["orientation_z"][tgt.module] = (float(np.mean(z_err)), float(np.std(z_err)))
        if x_err:
            summary["orientation_x"][tgt.module] = (float(np.mean(x_err)), float(np.std(x_err)))
    return summary


# ---------------------------------------------------------------------------
# persistence (same header + record-lines family as datasets)


def trajectory_write(log: TrajectoryLog, path) -> None:
    m = log.target_configs.shape[1]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(LOG_PREFIX + json.dumps(log.meta, sort_keys=True) + "\n")
        for t in range(len(log)):
            fields = [str(int(log.ticks[t]))]
            for block in (
                log.target_configs[t].reshape(-1),
                log.encoder_configs[t].reshape(-1),
                log.true_states[t].reshape(-1),
                log.applied_actions[t].reshape(-1),
                log.losses[t],
            ):
                fields.append(" ".join(repr(float(v)) for v in block))
            fields.append(str(int(log.degraded[t])))
            fields.append(repr(float(log.wall_ms[t])))
            fh.write(" ".join(fields) + "\n")


def trajectory_read(path) -> TrajectoryLog:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read trajectory {path}: {exc}") from exc
    if not lines or not lines[0].startswith(LOG_PREFIX):
        raise DatasetFormatError(f"{path}: missing trajectory header")
    meta = json.loads(lines[0][len(LOG_PREFIX):])
    modules = meta.get("module_count", 3)
    n = len(lines) - 1
    width = 1 + 9 * modules + 6 * modules + 5 + 2
    log = TrajectoryLog(
        ticks=np.zeros(n, dtype=np.int64),
        target_configs=np.zeros((n, modules, 3)),
        encoder_configs=np.zeros((n, modules, 3)),
        true_states=np.zeros((n, modules, 6)),
        applied_actions=np.zeros((n, modules, 3)),
        losses=np.zeros((n, 5)),
        degraded=np.zeros(n, dtype=bool),
        wall_ms=np.zeros(n),
        meta=meta,
    )
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != width:
            raise DatasetFormatError(f"{path}:{i}: expected {width} fields, found {len(parts)}")
        try:
            t = i - 2
            log.ticks[t] = int(parts[0])
            row = np.array([float(p) for p in parts[1:-2]])
            k = 3 * modules
            log.target_configs[t] = row[:k].reshape(modules, 3)
            log.encoder_configs[t] = row[k : 2 * k].reshape(modules, 3)
            log.true_states[t] = row[2 * k : 2 * k + 6 * modules].reshape(modules, 6)
            log.applied_actions[t] = row[2 * k + 6 * modules : 3 * k + 6 * modules].reshape(
                modules, 3
            )
            log.losses[t] = row[3 * k + 6 * modules :]
            log.degraded[t] = bool(int(parts[-2]))
            log.wall_ms[t] = float(parts[-1])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{i}: bad number: {exc}") from exc
    return log
