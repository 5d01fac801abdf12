"""Ground-truth simulated arm standing in for the physical robot.

The plant separates what the encoders can see from what the structure does:

* commanded cable displacements reach the cables through a first-order
  motor response, and the encoders read the *cable* state, so they are
  blind to everything below;
* the structure follows the cable-implied arc with its own first-order
  hysteresis lag, sags toward -z proportionally to the horizontal lever
  arm of each module, and picks up Gaussian noise on (phi, theta*phi).

Per-module estimation error therefore grows along the chain (droop depends
on how far out a module's base already sits), mirroring the error ordering
observed on the physical arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    ArcParams,
    ArmGeometry,
    ModuleAction,
    RigidTransform,
    RobotState,
    arc_to_config,
    forward_state_from_arcs,
    module_transform,
)

PHI_LIMIT = 1.6  # realized bend clamp [rad]
_DOWN = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class DisturbanceParams:
    """Gains of the disturbance terms plus the motor response.

    gravity_droop_gain: rad of sag per meter of horizontal lever arm
    hysteresis_rate: per-tick pull of the structure arc toward the cable arc
    config_noise_std: rad, Gaussian noise on (phi, theta*phi)
    motor_rate: per-tick pull of actual cables toward commanded cables
    bend_friction: per-module under-response of the structure to its cables
        (cable friction through the housing runs; the m-th module settles at
        1 - (1 - hysteresis_rate) * bend_friction * m of the cable-implied
        bend, so it vanishes in the hysteresis-free limit)
    """

    gravity_droop_gain: float = 0.08
    hysteresis_rate: float = 0.7
    config_noise_std: float = 0.01
    motor_rate: float = 0.5
    bend_friction: float = 0.24
    seed: int = 0

    def __post_init__(self):
        if self.gravity_droop_gain < 0 or self.config_noise_std < 0:
            raise ValueError("disturbance gains must be >= 0")
        if not 0.0 < self.hysteresis_rate <= 1.0:
            raise ValueError("hysteresis_rate must be in (0, 1]")
        if not 0.0 < self.motor_rate <= 1.0:
            raise ValueError("motor_rate must be in (0, 1]")
        if self.bend_friction < 0:
            raise ValueError("bend_friction must be >= 0")

    def bend_response(self, module_index: int) -> float:
        """Fraction of the cable-implied bend the structure settles at."""
        kappa = 1.0 - (1.0 - self.hysteresis_rate) * self.bend_friction * (module_index + 1)
        return max(kappa, 0.1)

    @staticmethod
    def disturbance_free(seed: int = 0) -> "DisturbanceParams":
        return DisturbanceParams(
            gravity_droop_gain=0.0, hysteresis_rate=1.0, config_noise_std=0.0,
            motor_rate=1.0, seed=seed,
        )


@dataclass
class PlantState:
    """Owned by a single stepper; snapshots may be read concurrently."""

    commanded_actions: np.ndarray  # (modules, 3) meters
    cable_displacements: np.ndarray  # (modules, 3) meters, after motor response
    structure_bends: np.ndarray  # (modules, 2) hysteresis lag state
    realized_bends: np.ndarray  # (modules, 2) ground truth after disturbance
    tick: int
    rng: np.random.Generator = field(repr=False)

    def realized_arcs(self) -> list[ArcParams]:
        out = []
        for w in self.realized_bends:
            phi = float(np.hypot(w[0], w[1]))
            theta = float(math.atan2(w[1], w[0])) if phi > 0.0 else 0.0
            out.append(ArcParams(bend_angle=phi, neutral_direction=theta))
        return out


def initial_plant_state(geom: ArmGeometry, params: DisturbanceParams) -> PlantState:
    n = geom.module_count
    return PlantState(
        commanded_actions=np.zeros((n, 3)),
        cable_displacements=np.zeros((n, 3)),
        structure_bends=np.zeros((n, 2)),
        realized_bends=np.zeros((n, 2)),
        tick=0,
        rng=np.random.default_rng(params.seed),
    )


def _cable_bend_vector(cables: np.ndarray, geom: ArmGeometry) -> np.ndarray:
    """(phi cos theta, phi sin theta) implied by one module's cable triple."""
    u = (cables[1] - cables[2]) / math.sqrt(3.0)
    phi = math.hypot(cables[0], u) / geom.cable_radius
    if phi == 0.0:
        return np.zeros(2)
    theta = math.atan2(-cables[0], u)
    return np.array([phi * math.cos(theta), phi * math.sin(theta)])


def _bend_to_arc(w: np.ndarray) -> ArcParams:
    phi = float(np.hypot(w[0], w[1]))
    theta = float(math.atan2(w[1], w[0])) if phi > 0.0 else 0.0
    return ArcParams(bend_angle=phi, neutral_direction=theta)


def _config_bend_vector(o_local: np.ndarray) -> np.ndarray:
    h = math.hypot(o_local[0], o_local[1])
    if h == 0.0:
        return np.zeros(2)
    phi = math.atan2(h, o_local[2])
    # theta = atan2(oy, ox) + pi/2; bend vector needs (cos theta, sin theta)
    ct = -o_local[1] / h
    st = o_local[0] / h
    return np.array([phi * ct, phi * st])


def _rotate_toward_down(o_world: np.ndarray, delta: float) -> np.ndarray:
    """Tilt a unit vector by delta toward -z, capped at reaching -z."""
    cos_gap = float(np.clip(o_world @ _DOWN, -1.0, 1.0))
    gap = math.acos(cos_gap)
    delta = min(delta, gap)
    axis = np.cross(o_world, _DOWN)
    norm = np.linalg.norm(axis)
    if delta <= 0.0 or norm < 1e-12:
        return o_world
    axis = axis / norm
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    rot = np.eye(3) + math.sin(delta) * k + (1.0 - math.cos(delta)) * (k @ k)
    return rot @ o_world


def plant_step(
    state: PlantState,
    actions: list[ModuleAction],
    params: DisturbanceParams,
    geom: ArmGeometry,
) -> tuple[PlantState, RobotState, np.ndarray]:
    """Advance one tick; returns (new state, true state, encoder configs).

    Encoder configs are computed from the cable state only and never touch
    the disturbed structure; the true state never reads the encoder path.
    """
    if len(actions) != geom.module_count:
        raise ValueError(f"expected {geom.module_count} module actions")
    for action in actions:
        action.validate(geom)

    commanded = np.stack([a.as_array() for a in actions])
    cables = state.cable_displacements + params.motor_rate * (
        commanded - state.cable_displacements
    )

    # encoder path: cables -> arc -> configuration
    encoder_bends = np.stack([_cable_bend_vector(c, geom) for c in cables])
    encoder_configs = np.stack(
        [arc_to_config(_bend_to_arc(w)).as_array() for w in encoder_bends]
    )

    # structure path: hysteresis lag, then friction under-response, then
    # gravity droop, then noise
    structure = state.structure_bends + params.hysteresis_rate * (
        encoder_bends - state.structure_bends
    )
    new_bends = np.zeros((geom.module_count, 2))
    frame = RigidTransform(rotation=np.eye(3), translation=np.zeros(3))
    for m in range(geom.module_count):
        w = structure[m] * params.bend_response(m)
        arc = _bend_to_arc(w)
        if params.gravity_droop_gain > 0.0:
            step = module_transform(arc, geom)
            reach = frame.rotation @ step.translation
            lever = math.hypot(frame.translation[0], frame.translation[1]) + math.hypot(
                reach[0], reach[1]
            )
            delta = params.gravity_droop_gain * lever
            o_world = frame.rotation @ arc_to_config(arc).as_array()
            o_world = _rotate_toward_down(o_world, delta)
            w = _config_bend_vector(frame.rotation.T @ o_world)
        if params.config_noise_std > 0.0:
            radial, tangential = state.rng.normal(0.0, params.config_noise_std, size=2)
            phi = float(np.hypot(w[0], w[1]))
            if phi > 0.0:
                e_r = w / phi
            else:
                e_r = np.array([1.0, 0.0])
            e_t = np.array([-e_r[1], e_r[0]])
            w = w + radial * e_r + tangential * e_t
        phi = float(np.hypot(w[0], w[1]))
        if phi > PHI_LIMIT:
            w = w * (PHI_LIMIT / phi)
        new_bends[m] = w
        frame = frame.compose(module_transform(_bend_to_arc(w), geom))

    new_state = PlantState(
        commanded_actions=commanded,
        cable_displacements=cables,
        structure_bends=structure,
        realized_bends=new_bends,
        tick=state.tick + 1,
        rng=state.rng,
    )
    true_state = forward_state_from_arcs(new_state.realized_arcs(), geom)
    return new_state, true_state, encoder_configs


# ---------------------------------------------------------------------------
# motor babbling


@dataclass(frozen=True)
class BabbleSchedule:
    """Phased random-walk actuation: shared, partially shared, independent."""

    total_samples: int = 9000
    step_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.total_samples < 3:
            raise ValueError("need at least 3 samples for the three phases")
        if self.step_std <= 0:
            raise ValueError("step_std must be positive")

    @property
    def phase_bounds(self) -> tuple[int, int]:
        return self.total_samples // 3, 2 * self.total_samples // 3


def _walk(rng: np.random.Generator, steps: int, start: np.ndarray, std: float) -> np.ndarray:
    """Zero-sum random walk in [-1, 1]^3, range kept by uniform rescaling."""
    out = np.zeros((steps, 3))
    v = start.copy()
    for t in range(steps):
        v = v + rng.normal(0.0, std, size=3)
        v = v - v.mean()  # project onto the zero-sum plane
        peak = np.abs(v).max()
        if peak > 1.0:
            v = v / peak  # rescale: preserves the zero sum exactly
        out[t] = v
    return out


def make_babble_schedule(spec: BabbleSchedule) -> np.ndarray:
    """Normalized per-tick per-module actions, shape (total, modules, 3).

    Phase 1: all modules share one walk. Phase 2: the end module splits off.
    Phase 3: all three walk independently. Walks continue from their value
    at the split, so no module's cables jump.
    """
    t1, t2 = spec.phase_bounds
    total = spec.total_samples
    rng_i, rng_iii, rng_ii = np.random.default_rng(spec.seed).spawn(3)

    walk_i = _walk(rng_i, total, np.zeros(3), spec.step_std)
    walk_iii = _walk(rng_iii, total - t1, walk_i[t1 - 1], spec.step_std)
    walk_ii = _walk(rng_ii, total - t2, walk_i[t2 - 1], spec.step_std)

    actions = np.zeros((total, 3, 3))
    actions[:, 0] = walk_i
    actions[:t2, 1] = walk_i[:t2]
    actions[t2:, 1] = walk_ii
    actions[:t1, 2] = walk_i[:t1]
    actions[t1:, 2] = walk_iii
    return actions
