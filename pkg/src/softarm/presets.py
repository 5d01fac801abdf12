"""Named experiment presets: the position, orientation, constraint,
obstacle, and online task families, scaled to the simulated 0.6 m arm.

Position circles are generated from uniform-bend poses of the ideal
constant-curvature arm, so every waypoint is physically reachable by
construction; orientation targets reuse the bend azimuth of the circle.
Obstacle layouts are placed relative to the straight-line tip path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import TrajectoryLog, run_closed_loop
from .geometry import ArcParams, ArmGeometry, forward_state_from_arcs
from .planner import (
    Obstacle,
    OrientationTarget,
    PositionTarget,
    TaskSpec,
    plan_offline,
    planned_trajectory,
)
from .plant import DisturbanceParams

RAMP_TICKS = 60
SWEEP_TICKS = 240


def uniform_bend_pose(phi_each: float, azimuth: float, geom: ArmGeometry):
    """Tip position/orientation when every module bends phi toward azimuth."""
    theta = azimuth + math.pi / 2.0
    arcs = [ArcParams(phi_each, theta)] * geom.module_count
    state = forward_state_from_arcs(arcs, geom)
    return state.positions[-1], state.orientations[-1]


def circle_waypoints(phi_each: float, geom: ArmGeometry,
                     ramp: int = RAMP_TICKS, sweep: int = SWEEP_TICKS):
    """Bend out along +x, then sweep the bend azimuth through a full turn.

    Returns per-tick tip positions (T, 3) and bend azimuths (T,).
    """
    positions = []
    azimuths = []
    for t in range(ramp):
        phi = phi_each * (t + 1) / ramp
        positions.append(uniform_bend_pose(phi, 0.0, geom)[0])
        azimuths.append(0.0)
    for t in range(sweep):
        azi = 2.0 * math.pi * (t + 1) / sweep
        positions.append(uniform_bend_pose(phi_each, azi, geom)[0])
        azimuths.append(azi)
    return np.stack(positions), np.array(azimuths)


def _orientation_path(polar_deg: float, azimuths: np.ndarray, offset_deg: float = 0.0):
    polar = math.radians(polar_deg)
    azi = azimuths + math.radians(offset_deg)
    return np.stack(
        [
            np.sin(polar) * np.cos(azi),
            np.sin(polar) * np.sin(azi),
            np.full_like(azi, math.cos(polar)),
        ],
        axis=1,
    )


def position_circle_task(geom: ArmGeometry, phi_each: float = 0.4) -> TaskSpec:
    path, _ = circle_waypoints(phi_each, geom)
    tip = geom.module_count - 1
    return TaskSpec(
        position_targets=(PositionTarget(tip, 1.0, path),),
        smoothness_weight=0.5,
        steps=len(path),
    )


def orientation_task(geom: ArmGeometry, polar_deg: float, offset_deg: float = 0.0) -> TaskSpec:
    """Follow the circle while holding the end bend angle; the paper's
    orientation family (0 means keep the end upward)."""
    phi_each = math.radians(polar_deg) / geom.module_count if polar_deg > 0 else 0.3
    path, azimuths = circle_waypoints(phi_each, geom)
    tip = geom.module_count - 1
    if polar_deg > 0:
        orient = _orientation_path(polar_deg, azimuths, offset_deg)
    else:
        orient = np.tile(np.array([0.0, 0.0, 1.0]), (len(path), 1))
    return TaskSpec(
        position_targets=(PositionTarget(tip, 1.0, path),),
        orientation_targets=(OrientationTarget(tip, 2.0, orient),),
        smoothness_weight=0.5,
        steps=len(path),
    )


def constraint_task(geom: ArmGeometry, which: str) -> TaskSpec:
    """Keep one module end static while the arm keeps moving.

    base: the base module end stays put while the tip follows the circle.
    middle/end: the named module end position stays put while its
    orientation sweeps a cone.
    """
    tip = geom.module_count - 1
    if which == "base":
        path, _ = circle_waypoints(0.35, geom)
        base_rest = forward_state_from_arcs(
            [ArcParams(0.0, 0.0)] * geom.module_count, geom
        ).positions[0]
        return TaskSpec(
            position_targets=(
                PositionTarget(tip, 1.0, path),
                PositionTarget(0, 1.0, base_rest),
            ),
            smoothness_weight=0.5,
            steps=len(path),
        )
    module = 1 if which == "middle" else tip
    phi_hold = 0.3
    ramp = RAMP_TICKS
    sweep = SWEEP_TICKS
    hold_state = forward_state_from_arcs(
        [ArcParams(phi_hold, math.pi / 2.0)] * geom.module_count, geom
    )
    hold_pos = hold_state.positions[module]
    # ramp follows the bend-out, then the position pin holds while the
    # module orientation sweeps a cone around +z
    ramp_path = []
    for t in range(ramp):
        phi = phi_hold * (t + 1) / ramp
        state = forward_state_from_arcs(
            [ArcParams(phi, math.pi / 2.0)] * geom.module_count, geom
        )
        ramp_path.append(state.positions[module])
    pin_path = np.concatenate([np.stack(ramp_path), np.tile(hold_pos, (sweep, 1))])

    polar_deg = math.degrees(phi_hold * (module + 1))
    azimuths = np.concatenate(
        [np.zeros(ramp), 2.0 * math.pi * (np.arange(sweep) + 1) / sweep]
    )
    orient = _orientation_path(polar_deg, azimuths)
    return TaskSpec(
        position_targets=(PositionTarget(module, 1.0, pin_path),),
        orientation_targets=(OrientationTarget(module, 2.0, orient),),
        smoothness_weight=0.5,
        steps=len(pin_path),
    )


def _reach_endpoints(geom: ArmGeometry):
    """Straight-pose tip and the bent goal pose the obstacle family uses.

    The goal sits slightly off the obstacle axis (as in the physical
    experiments, where nothing is perfectly aligned); a goal exactly behind
    an obstacle has no side the gradient could prefer.
    """
    tip = geom.module_count - 1
    bent, _ = uniform_bend_pose(0.5, 0.0, geom)
    goal = bent + np.array([0.0, 0.04, 0.0])
    start = forward_state_from_arcs(
        [ArcParams(0.0, 0.0)] * geom.module_count, geom
    ).positions[tip]
    return start, bent, goal


def obstacle_task(geom: ArmGeometry, obstacle_count: int, steps: int = 360) -> TaskSpec:
    """Reach a fixed tip target around 0, 1, or 2 obstacles.

    The first obstacle clips the straight tip path from below; the second
    sits on the detour trajectory the one-obstacle plan takes, mirroring
    how the second sponge bar was placed in the physical runs. The
    smoothness weight stays low so the detour creep is not damped out.
    """
    tip = geom.module_count - 1
    start, bent, goal = _reach_endpoints(geom)
    along = lambda f, dy: start + f * (bent - start) + np.array([0.0, dy, 0.0])
    obstacles = []
    if obstacle_count >= 1:
        obstacles.append(Obstacle(along(0.45, -0.07), 0.10, 1.0, (tip,)))
    if obstacle_count >= 2:
        obstacles.append(Obstacle(along(0.60, 0.09), 0.08, 1.0, (tip,)))
    return TaskSpec(
        position_targets=(PositionTarget(tip, 1.0, goal),),
        obstacles=tuple(obstacles),
        smoothness_weight=0.1,
        steps=steps,
    )


def risk_corridor_task(geom: ArmGeometry, left_r: float, right_r: float,
                       steps: int = 420) -> TaskSpec:
    """Two obstacles flank the straight path to the target; large radii
    close the corridor, lowering one lets the arm swing around that side."""
    tip = geom.module_count - 1
    start, bent, _ = _reach_endpoints(geom)
    goal = bent  # centered: blocked means blocked on both sides
    mid = start + 0.5 * (bent - start)
    left = Obstacle(mid + np.array([0.0, 0.075, 0.0]), left_r, 1.0, (tip,))
    right = Obstacle(mid + np.array([0.0, -0.105, 0.0]), right_r, 1.0, (tip,))
    return TaskSpec(
        position_targets=(PositionTarget(tip, 1.0, goal),),
        obstacles=(left, right),
        smoothness_weight=0.1,
        steps=steps,
    )


def online_task(geom: ArmGeometry, with_obstacle: bool) -> TaskSpec:
    """Single mutable target for live steering; the smoothness weight is
    low enough that target pulls clear its movement deadband (the online
    loss weights are free parameters of the live task family)."""
    tip = geom.module_count - 1
    goal, _ = uniform_bend_pose(0.35, 0.0, geom)
    obstacles = ()
    if with_obstacle:
        obstacles = (Obstacle(np.array([0.5, 0.5, 0.5]), 0.12, 1.0, (tip,)),)
    return TaskSpec(
        position_targets=(PositionTarget(tip, 1.0, goal),),
        obstacles=obstacles,
        smoothness_weight=0.05,
        steps=1,
    )


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    build_task: "callable"
    controller: str = "nn"
    ticks: int = RAMP_TICKS + SWEEP_TICKS
    online: bool = False
    seeds: tuple = (0,)


PRESETS: dict[str, ExperimentPreset] = {}


def _register(preset: ExperimentPreset):
    PRESETS[preset.name] = preset


_register(ExperimentPreset("position-circle", position_circle_task))
for deg in (40, 50, 60):
    _register(
        ExperimentPreset(
            f"orient-{deg}",
            (lambda d: (lambda geom: orientation_task(geom, d)))(deg),
        )
    )
_register(ExperimentPreset("orient-0", lambda geom: orientation_task(geom, 0)))
_register(ExperimentPreset("orient-50a20", lambda geom: orientation_task(geom, 50, 20.0)))
_register(ExperimentPreset("orient-50c20", lambda geom: orientation_task(geom, 50, -20.0)))
for which in ("base", "middle", "end"):
    _register(
        ExperimentPreset(
            f"constraint-{which}",
            (lambda w: (lambda geom: constraint_task(geom, w)))(which),
        )
    )
_register(ExperimentPreset("obstacle-0", lambda geom: obstacle_task(geom, 0), ticks=360))
_register(ExperimentPreset("obstacle-1", lambda geom: obstacle_task(geom, 1), ticks=360))
_register(ExperimentPreset("obstacle-2", lambda geom: obstacle_task(geom, 2), ticks=360))
_register(
    ExperimentPreset(
        "risk-levels", lambda geom: risk_corridor_task(geom, 0.13, 0.13), ticks=420
    )
)
_register(
    ExperimentPreset(
        "risk-levels-low", lambda geom: risk_corridor_task(geom, 0.13, 0.05), ticks=420
    )
)
_register(
    ExperimentPreset("online-follow", lambda geom: online_task(geom, False),
                     ticks=300, online=True)
)
_register(
    ExperimentPreset("online-avoid", lambda geom: online_task(geom, True),
                     ticks=300, online=True)
)


def execute_preset(
    name: str,
    controller: str | None,
    geom: ArmGeometry,
    disturbance: DisturbanceParams,
    c2s,
    c2a,
    ticks: int | None = None,
) -> tuple[TrajectoryLog, TaskSpec]:
    """Plan (offline presets) and run one preset end to end."""
    preset = PRESETS[name]
    task = preset.build_task(geom)
    controller = controller or preset.controller
    ticks = ticks or preset.ticks
    meta = {
        "preset": name,
        "controller": controller,
        "module_count": geom.module_count,
        "seed": disturbance.seed,
        "online": preset.online,
    }
    if preset.online:
        log = run_closed_loop(
            task, controller, geom, disturbance, ticks, c2s=c2s, c2a=c2a, meta=meta
        )
        return log, task
    start = np.tile(np.array([0.0, 0.0, 1.0]), (geom.module_count, 1))
    results = plan_offline(task, c2s, start)
    plan = planned_trajectory(results)
    breakdowns = [r.breakdown for r in results]
    log = run_closed_loop(
        task,
        controller,
        geom,
        disturbance,
        ticks,
        c2s=c2s,
        c2a=c2a,
        offline_plan=plan,
        offline_breakdowns=breakdowns,
        meta=meta,
    )
    return log, task
