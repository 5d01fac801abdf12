"""Piecewise-constant-curvature geometry for a cable-driven modular arm.

Each module is an inextensible bendable segment actuated by three cables at
120 degree spacing. ``phi`` is the bend angle between the module base and end
planes, ``theta`` the azimuth of the neutral bending surface measured from
the first cable. A module configuration is the unit orientation vector of
the module end expressed in that module's own base frame; a robot state
collects positions and orientations of every module end in the robot base
frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ActionError, ActuationRangeError

ZERO_SUM_TOL = 1e-9
_SMALL_PHI = 1e-6


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class ArmGeometry:
    """Physical constants of the arm.

    module_length: arc length of one module [m]
    cable_radius: distance from the module axis to each cable [m]
    module_count: number of serially connected modules
    max_cable_displacement: |a_i| bound; maps to normalized magnitude 1 [m]
    """

    module_length: float = 0.2
    cable_radius: float = 0.02
    module_count: int = 3
    max_cable_displacement: float = 0.03

    def __post_init__(self):
        if self.module_length <= 0 or self.cable_radius <= 0 or self.max_cable_displacement <= 0:
            raise ValueError("arm lengths must be strictly positive")
        if self.module_count < 1:
            raise ValueError("module_count must be >= 1")

    @property
    def phi_max(self) -> float:
        """Largest bend angle reachable with in-range zero-sum cables."""
        return 2.0 * self.max_cable_displacement / (math.sqrt(3.0) * self.cable_radius)


@dataclass(frozen=True)
class ModuleAction:
    """Cable displacements of one module [m], positive = lengthening."""

    a1: float
    a2: float
    a3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3], dtype=float)

    @staticmethod
    def from_array(a) -> "ModuleAction":
        a1, a2, a3 = (float(v) for v in a)
        return ModuleAction(a1, a2, a3)

    def validate(self, geom: ArmGeometry) -> None:
        s = self.a1 + self.a2 + self.a3
        if abs(s) > ZERO_SUM_TOL:
            raise ActionError(f"cable displacements must sum to zero, got {s:.3e} m")
        bound = geom.max_cable_displacement + 1e-12
        for name, v in (("a1", self.a1), ("a2", self.a2), ("a3", self.a3)):
            if abs(v) > bound:
                raise ActuationRangeError(
                    f"{name}={v:.6f} m exceeds max cable displacement "
                    f"{geom.max_cable_displacement:.6f} m"
                )


@dataclass(frozen=True)
class ArcParams:
    """Constant-curvature arc of one module: bend angle and bending azimuth."""

    bend_angle: float
    neutral_direction: float


@dataclass(frozen=True)
class ModuleConfiguration:
    """Unit end-orientation vector of a module relative to its own base."""

    ox: float
    oy: float
    oz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.ox, self.oy, self.oz], dtype=float)

    @staticmethod
    def from_array(o) -> "ModuleConfiguration":
        ox, oy, oz = (float(v) for v in o)
        return ModuleConfiguration(ox, oy, oz)

    def validate(self) -> None:
        n = math.sqrt(self.ox**2 + self.oy**2 + self.oz**2)
        if abs(n - 1.0) > ZERO_SUM_TOL:
            raise ValueError(f"configuration must be unit length, |o| = {n:.12f}")


@dataclass(frozen=True)
class RigidTransform:
    """Frame of a module tip relative to the module base."""

    rotation: np.ndarray
    translation: np.ndarray

    def validate(self) -> None:
        r = self.rotation
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(
            rotation=self.rotation @ other.rotation,
            translation=self.rotation @ other.translation + self.translation,
        )


@dataclass(frozen=True)
class RobotState:
    """Positions [m] and unit orientations of every module end, base frame."""

    positions: np.ndarray  # (module_count, 3)
    orientations: np.ndarray  # (module_count, 3)

    def as_flat(self) -> np.ndarray:
        """Per module [px, py, pz, ox, oy, oz], concatenated base to tip."""
        return np.concatenate([self.positions, self.orientations], axis=1).reshape(-1)

    @staticmethod
    def from_flat(flat: np.ndarray, module_count: int) -> "RobotState":
        rows = np.asarray(flat, dtype=float).reshape(module_count, 6)
        return RobotState(positions=rows[:, :3].copy(), orientations=rows[:, 3:].copy())


# ---------------------------------------------------------------------------
# cable <-> arc <-> configuration conversions


def estimate_arc(action: ModuleAction, geom: ArmGeometry) -> ArcParams:
    """Arc parameters implied by cable displacements (the encoder model).

    phi = sqrt(a1^2 + (a2 - a3)^2 / 3) / r_p
    theta = atan2(-a1, (a2 - a3) / sqrt(3)), with theta = 0 at zero action.
    """
    s = action.a1 + action.a2 + action.a3
    if abs(s) > ZERO_SUM_TOL:
        raise ActionError(f"cable displacements must sum to zero, got {s:.3e} m")
    u = (action.a2 - action.a3) / math.sqrt(3.0)
    phi = math.hypot(action.a1, u) / geom.cable_radius
    theta = math.atan2(-action.a1, u) if phi > 0.0 else 0.0
    return ArcParams(bend_angle=phi, neutral_direction=theta)


def arc_to_config(arc: ArcParams) -> ModuleConfiguration:
    """End orientation of a module bent along a constant-curvature arc."""
    psi = arc.neutral_direction - math.pi / 2.0
    sp = math.sin(arc.bend_angle)
    return ModuleConfiguration(
        ox=sp * math.cos(psi),
        oy=sp * math.sin(psi),
        oz=math.cos(arc.bend_angle),
    )


def config_to_arc(config: ModuleConfiguration) -> ArcParams:
    """Arc parameters reproducing a desired end orientation.

    phi is recovered as atan2(hypot(ox, oy), oz). The algebraically
    equivalent closed form phi = atan2(oy / sin(theta - pi/2), oz) is
    singular whenever the bend lies on the sin(theta - pi/2) = 0 axis,
    so the hypot form is used; both agree wherever both are defined.
    """
    h = math.hypot(config.ox, config.oy)
    if h == 0.0:
        return ArcParams(bend_angle=0.0 if config.oz > 0.0 else math.pi, neutral_direction=0.0)
    theta = wrap_angle(math.atan2(config.oy, config.ox) + math.pi / 2.0)
    phi = math.atan2(h, config.oz)
    return ArcParams(bend_angle=phi, neutral_direction=theta)


def arc_to_action(arc: ArcParams, geom: ArmGeometry) -> ModuleAction:
    """Cable displacements realizing an arc; inverse of estimate_arc.

    a1 = -phi r_p sin(theta)
    a2 =  phi r_p sin(2 pi / 3 - theta)
    a3 =  phi r_p sin(theta - pi / 3)
    The three terms cancel algebraically, so outputs sum to zero.
    """
    k = arc.bend_angle * geom.cable_radius
    t = arc.neutral_direction
    action = ModuleAction(
        a1=-k * math.sin(t),
        a2=k * math.sin(2.0 * math.pi / 3.0 - t),
        a3=k * math.sin(t - math.pi / 3.0),
    )
    bound = geom.max_cable_displacement + 1e-12
    for name, v in (("a1", action.a1), ("a2", action.a2), ("a3", action.a3)):
        if abs(v) > bound:
            raise ActuationRangeError(
                f"arc (phi={arc.bend_angle:.4f}) needs {name}={v:.6f} m, beyond "
                f"max cable displacement {geom.max_cable_displacement:.6f} m"
            )
    return action


# ---------------------------------------------------------------------------
# forward kinematics


def module_transform(arc: ArcParams, geom: ArmGeometry) -> RigidTransform:
    """Tip frame of one module bent along a constant-curvature arc.

    The tip sits on a circle of radius l0 / phi in the bending plane at
    azimuth psi = theta - pi/2; the rotation tilts +z onto the end
    orientation about the in-plane normal (no axial twist).
    """
    phi = arc.bend_angle
    psi = arc.neutral_direction - math.pi / 2.0
    l0 = geom.module_length
    if phi < _SMALL_PHI:
        # 2nd-order series of (l0/phi)(1-cos phi) and (l0/phi) sin phi
        planar = l0 * (phi / 2.0 - phi**3 / 24.0)
        height = l0 * (1.0 - phi**2 / 6.0)
    else:
        rho = l0 / phi
        planar = rho * (1.0 - math.cos(phi))
        height = rho * math.sin(phi)
    translation = np.array([planar * math.cos(psi), planar * math.sin(psi), height])

    # Rodrigues rotation about axis (-sin psi, cos psi, 0) by angle phi
    axis = np.array([-math.sin(psi), math.cos(psi), 0.0])
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    rotation = np.eye(3) + math.sin(phi) * k + (1.0 - math.cos(phi)) * (k @ k)
    return RigidTransform(rotation=rotation, translation=translation)


def forward_state_from_arcs(arcs: list[ArcParams], geom: ArmGeometry) -> RobotState:
    """Compose module arcs base to tip into module-end positions/orientations."""
    if len(arcs) != geom.module_count:
        raise ValueError(f"expected {geom.module_count} arcs, got {len(arcs)}")
    frame = RigidTransform(rotation=np.eye(3), translation=np.zeros(3))
    positions = np.zeros((geom.module_count, 3))
    orientations = np.zeros((geom.module_count, 3))
    for m, arc in enumerate(arcs):
        frame = frame.compose(module_transform(arc, geom))
        positions[m] = frame.translation
        orientations[m] = frame.rotation @ np.array([0.0, 0.0, 1.0])
    return RobotState(positions=positions, orientations=orientations)


def forward_state(configs: list[ModuleConfiguration], geom: ArmGeometry) -> RobotState:
    """Robot state of the ideal constant-curvature arm at given configurations."""
    return forward_state_from_arcs([config_to_arc(c) for c in configs], geom)
