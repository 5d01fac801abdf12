"""Behavioral checks that need the full trained bundles (shared fixtures).

These are working-point properties of the trained stack, separate from the
criteria-level acceptance suite.
"""

import math

import numpy as np
import pytest

from softarm.bundles import nn_c2a_forward, nn_c2s_forward
from softarm.control import ControlHistory, nn_control
from softarm.geometry import ArcParams, ModuleAction, ModuleConfiguration, arc_to_config
from softarm.plant import DisturbanceParams, initial_plant_state, plant_step
from softarm.training import c2a_windows

pytestmark = pytest.mark.slow


class TestForwardModel:
    def test_prediction_deterministic(self, trained_models):
        c2s, _, _ = trained_models
        configs = [ModuleConfiguration(0.2, 0.1, math.sqrt(1 - 0.05))] * 3
        a = nn_c2s_forward(c2s, configs)
        b = nn_c2s_forward(c2s, configs)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.orientations, b.orientations)

    def test_straight_pose_predicted_sanely(self, trained_models):
        # at rest every disturbance term vanishes, so the model should put
        # the tip near the upright position
        c2s, _, _ = trained_models
        straight = [ModuleConfiguration(0.0, 0.0, 1.0)] * 3
        pred = nn_c2s_forward(c2s, straight)
        assert np.linalg.norm(pred.positions[2] - [0.0, 0.0, 0.6]) < 0.03


class TestController:
    def test_no_op_bias_on_held_out_windows(self, trained_models, babble_dataset):
        """Target = current configuration -> weaker commands than the babble
        average (the controller does not invent motion)."""
        _, c2a, _ = trained_models
        feats, targets = c2a_windows(babble_dataset, slice(8100, 9000))
        rng = np.random.default_rng(0)
        idx = rng.choice(len(feats), 200, replace=False)
        hold = feats[idx].copy()
        hold[:, :, 0:3] = hold[:, :, 3:6]  # target := current configuration
        preds = np.stack([nn_c2a_forward(c2a, row) for row in hold])
        dataset_mean = float(np.abs(babble_dataset.actions).mean())
        assert float(np.abs(preds).mean()) < dataset_mean

    def test_single_step_tracking_on_clean_plant(self, trained_models):
        """Constant reachable target on the disturbance-free plant: encoder
        configuration settles within 5 degrees."""
        _, c2a, _ = trained_models
        from softarm.geometry import ArmGeometry

        geom = ArmGeometry()
        params = DisturbanceParams.disturbance_free()
        target = np.stack([arc_to_config(ArcParams(0.5, 0.8)).as_array()] * 3)
        state = initial_plant_state(geom, params)
        history = ControlHistory(module_count=3)
        encoder = np.tile([0.0, 0.0, 1.0], (3, 1))
        for _ in range(60):
            history.push_config(encoder)
            actions_m = nn_control(c2a, target, history, geom)
            state, _, encoder = plant_step(
                state, [ModuleAction.from_array(a) for a in actions_m], params, geom
            )
            history.push_action(actions_m / geom.max_cable_displacement)
        worst = 0.0
        for m in range(3):
            dot = float(np.clip(encoder[m] @ target[m], -1, 1))
            worst = max(worst, math.degrees(math.acos(dot)))
        assert worst <= 5.0
