"""Constant-curvature geometry tour: cables -> arc -> orientation -> state.

Run:  python3 demos/01_kinematics.py [--plot out.png]
"""

import argparse
import math

import numpy as np

from softarm.geometry import (
    ArcParams,
    ArmGeometry,
    ModuleAction,
    arc_to_action,
    arc_to_config,
    config_to_arc,
    estimate_arc,
    forward_state,
    forward_state_from_arcs,
)

geom = ArmGeometry()
print(f"arm: {geom.module_count} modules x {geom.module_length} m, "
      f"cable radius {geom.cable_radius} m, max displacement {geom.max_cable_displacement} m")
print(f"max bend per module: {geom.phi_max:.3f} rad\n")

# pulling cable 1 in by 2 cm while paying out 1 cm on each of the others
action = ModuleAction(-0.02, 0.01, 0.01)
arc = estimate_arc(action, geom)
print(f"action {action} ->")
print(f"  bend angle phi = {arc.bend_angle:.4f} rad, "
      f"neutral direction theta = {math.degrees(arc.neutral_direction):.1f} deg")

config = arc_to_config(arc)
print(f"  end orientation = ({config.ox:.4f}, {config.oy:.4f}, {config.oz:.4f})")

# the loop closes: orientation -> arc -> cables reproduces the input
back = arc_to_action(config_to_arc(config), geom)
print(f"  round trip back to cables: ({back.a1:.6f}, {back.a2:.6f}, {back.a3:.6f})\n")

# three-module states: straight, C-shape, S-shape
straight = forward_state([arc_to_config(ArcParams(0.0, 0.0))] * 3, geom)
c_shape = forward_state_from_arcs([ArcParams(0.8, math.pi / 2)] * 3, geom)
s_shape = forward_state_from_arcs(
    [ArcParams(1.0, math.pi / 2), ArcParams(0.0, 0.0), ArcParams(1.0, -math.pi / 2)], geom
)
for name, state in (("straight", straight), ("C-shape", c_shape), ("S-shape", s_shape)):
    tip = state.positions[-1]
    o = state.orientations[-1]
    print(f"{name:9s} tip at ({tip[0]:+.3f}, {tip[1]:+.3f}, {tip[2]:+.3f}) m, "
          f"pointing ({o[0]:+.2f}, {o[1]:+.2f}, {o[2]:+.2f})")

parser = argparse.ArgumentParser()
parser.add_argument("--plot")
args = parser.parse_args()
if args.plot:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from softarm.service import _backbone_polyline

    fig, ax = plt.subplots(figsize=(5, 5))
    shapes = {
        "straight": [ArcParams(0.0, 0.0)] * 3,
        "C-shape": [ArcParams(0.8, math.pi / 2)] * 3,
        "S-shape": [ArcParams(1.0, math.pi / 2), ArcParams(0.0, 0.0), ArcParams(1.0, -math.pi / 2)],
    }
    for name, arcs in shapes.items():
        pts = np.array([[0.0, 0.0, 0.0]] + [p for mod in _backbone_polyline(arcs, geom) for p in mod])
        ax.plot(pts[:, 0], pts[:, 2], marker=".", label=name)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("z [m]")
    ax.set_aspect("equal")
    ax.legend()
    ax.set_title("constant-curvature arm shapes (x-z view)")
    fig.savefig(args.plot, dpi=120, bbox_inches="tight")
    print(f"\nwrote {args.plot}")
