"""Planning and control stack for a simulated cable-driven modular soft arm."""

from .geometry import (
    ArcParams,
    ArmGeometry,
    ModuleAction,
    ModuleConfiguration,
    RigidTransform,
    RobotState,
    arc_to_action,
    arc_to_config,
    config_to_arc,
    estimate_arc,
    forward_state,
    forward_state_from_arcs,
    module_transform,
)

__all__ = [
    "ArcParams",
    "ArmGeometry",
    "ModuleAction",
    "ModuleConfiguration",
    "RigidTransform",
    "RobotState",
    "arc_to_action",
    "arc_to_config",
    "config_to_arc",
    "estimate_arc",
    "forward_state",
    "forward_state_from_arcs",
    "module_transform",
]
