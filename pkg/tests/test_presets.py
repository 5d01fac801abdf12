import math

import numpy as np
import pytest

from softarm.geometry import ArcParams, ArmGeometry, forward_state_from_arcs
from softarm.presets import (
    PRESETS,
    circle_waypoints,
    orientation_task,
    position_circle_task,
    uniform_bend_pose,
)

GEOM = ArmGeometry()


class TestGeometryHelpers:
    def test_uniform_bend_matches_fk(self):
        pos, orient = uniform_bend_pose(0.4, 0.0, GEOM)
        state = forward_state_from_arcs([ArcParams(0.4, math.pi / 2)] * 3, GEOM)
        assert np.allclose(pos, state.positions[2])
        assert np.allclose(orient, state.orientations[2])

    def test_circle_is_closed_and_reachable(self):
        path, azimuths = circle_waypoints(0.4, GEOM)
        assert len(path) == 300
        # sweep endpoints meet: the last waypoint returns to the ramp end
        assert np.allclose(path[59], path[-1], atol=1e-12)
        radii = np.hypot(path[60:, 0], path[60:, 1])
        assert np.allclose(radii, radii[0], atol=1e-9)  # constant circle radius
        assert np.allclose(path[60:, 2], path[60, 2], atol=1e-9)  # constant height

    def test_ramp_starts_at_rest_tip(self):
        path, _ = circle_waypoints(0.4, GEOM)
        rest = forward_state_from_arcs([ArcParams(0.0, 0.0)] * 3, GEOM).positions[2]
        assert np.linalg.norm(path[0] - rest) < 0.01  # first waypoint near rest


class TestTaskFamilies:
    def test_all_presets_build_valid_tasks(self):
        for name, preset in PRESETS.items():
            task = preset.build_task(GEOM)
            for tgt in task.orientation_targets:
                path = np.atleast_2d(tgt.path)
                assert np.allclose(np.linalg.norm(path, axis=1), 1.0, atol=1e-9), name

    def test_orientation_task_angles(self):
        task = orientation_task(GEOM, 50)
        orient = task.orientation_targets[0].path
        polar = np.degrees(np.arccos(orient[:, 2]))
        assert np.allclose(polar, 50.0, atol=1e-9)
        upward = orientation_task(GEOM, 0)
        assert np.allclose(upward.orientation_targets[0].path, [0.0, 0.0, 1.0])

    def test_orientation_offset_rotates_azimuth(self):
        base = orientation_task(GEOM, 50).orientation_targets[0].path
        offset = orientation_task(GEOM, 50, 20.0).orientation_targets[0].path
        t = 200  # inside the sweep
        a0 = math.atan2(base[t, 1], base[t, 0])
        a1 = math.atan2(offset[t, 1], offset[t, 0])
        assert (a1 - a0) % (2 * math.pi) == pytest.approx(math.radians(20.0), abs=1e-9)

    def test_paper_weights_on_position_and_orientation(self):
        pos = position_circle_task(GEOM)
        assert pos.position_targets[0].weight == 1.0
        assert pos.smoothness_weight == 0.5
        orient = orientation_task(GEOM, 50)
        assert orient.orientation_targets[0].weight == 2.0
        assert orient.smoothness_weight == 0.5
        for name in ("obstacle-1", "obstacle-2", "risk-levels"):
            task = PRESETS[name].build_task(GEOM)
            assert all(ob.weight == 1.0 for ob in task.obstacles)

    def test_constraint_tasks_pin_the_right_module(self):
        base = PRESETS["constraint-base"].build_task(GEOM)
        assert {t.module for t in base.position_targets} == {0, 2}
        middle = PRESETS["constraint-middle"].build_task(GEOM)
        assert middle.position_targets[0].module == 1
        assert middle.orientation_targets[0].module == 1
        end = PRESETS["constraint-end"].build_task(GEOM)
        assert end.position_targets[0].module == 2

    def test_obstacles_block_the_straight_path(self):
        task = PRESETS["obstacle-1"].build_task(GEOM)
        rest = forward_state_from_arcs([ArcParams(0.0, 0.0)] * 3, GEOM).positions[2]
        goal = task.position_targets[0].at(0)
        ob = task.obstacles[0]
        # distance from the obstacle center to the straight start->goal segment
        seg = goal - rest
        t = np.clip(np.dot(ob.center - rest, seg) / np.dot(seg, seg), 0, 1)
        closest = rest + t * seg
        assert np.linalg.norm(ob.center - closest) < ob.threshold
