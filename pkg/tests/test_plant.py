import numpy as np
import pytest

from softarm.datasets import (
    Dataset,
    collect_dataset,
    dataset_read,
    dataset_write,
    estimation_errors_deg,
    record_at,
)
from softarm.errors import ActionError, DatasetFormatError
from softarm.geometry import ArmGeometry, ModuleAction, arc_to_config, forward_state_from_arcs
from softarm.plant import (
    BabbleSchedule,
    DisturbanceParams,
    initial_plant_state,
    make_babble_schedule,
    plant_step,
)

GEOM = ArmGeometry()
STRAIGHT = [ModuleAction(0.0, 0.0, 0.0)] * 3


def small_dataset(seed=0, n=1200, params=None):
    return collect_dataset(
        BabbleSchedule(total_samples=n, seed=seed),
        params or DisturbanceParams(seed=seed),
        GEOM,
    )


class TestPlantStep:
    def test_rest_is_straight(self):
        state = initial_plant_state(GEOM, DisturbanceParams.disturbance_free())
        state, robot, enc = plant_step(state, STRAIGHT, DisturbanceParams.disturbance_free(), GEOM)
        assert np.allclose(robot.positions, [[0, 0, 0.2], [0, 0, 0.4], [0, 0, 0.6]])
        assert np.allclose(enc, [[0, 0, 1]] * 3)

    def test_disturbance_free_limit(self):
        """hysteresis_rate=1, droop=0, noise=0: encoder equals truth exactly."""
        params = DisturbanceParams(
            gravity_droop_gain=0.0, hysteresis_rate=1.0, config_noise_std=0.0, seed=1
        )
        rng = np.random.default_rng(2)
        state = initial_plant_state(GEOM, params)
        for _ in range(20):
            raw = rng.normal(0, 0.1, size=(3, 3))
            raw -= raw.mean(axis=1, keepdims=True)
            acts = [ModuleAction.from_array(r * GEOM.max_cable_displacement) for r in raw]
            state, robot, enc = plant_step(state, acts, params, GEOM)
            true_cfg = np.stack(
                [arc_to_config(a).as_array() for a in state.realized_arcs()]
            )
            assert np.allclose(enc, true_cfg, atol=1e-12)

    def test_all_gains_zero_matches_pure_pcc(self):
        params = DisturbanceParams.disturbance_free()
        state = initial_plant_state(GEOM, params)
        act = [
            ModuleAction(-0.02, 0.01, 0.01),
            ModuleAction(0.0, 0.0, 0.0),
            ModuleAction(0.01, -0.02, 0.01),
        ]
        state, robot, enc = plant_step(state, act, params, GEOM)
        from softarm.geometry import estimate_arc

        ideal = forward_state_from_arcs([estimate_arc(a, GEOM) for a in act], GEOM)
        assert np.allclose(robot.positions, ideal.positions, atol=1e-12)
        assert np.allclose(robot.orientations, ideal.orientations, atol=1e-12)

    def test_rejected_action_leaves_state_unchanged(self):
        params = DisturbanceParams(seed=3)
        state = initial_plant_state(GEOM, params)
        before = state.realized_bends.copy()
        bad = [ModuleAction(0.01, 0.01, 0.01)] + STRAIGHT[:2]
        with pytest.raises(ActionError):
            plant_step(state, bad, params, GEOM)
        assert np.array_equal(state.realized_bends, before)
        assert state.tick == 0

    def test_droop_pulls_down(self):
        params = DisturbanceParams(
            gravity_droop_gain=0.5, hysteresis_rate=1.0, config_noise_std=0.0, seed=0
        )
        state = initial_plant_state(GEOM, params)
        bend = [ModuleAction(-0.02, 0.01, 0.01)] * 3  # bend toward +x
        for _ in range(30):
            state, robot, enc = plant_step(state, bend, params, GEOM)
        ideal = initial_plant_state(GEOM, DisturbanceParams.disturbance_free())
        for _ in range(30):
            ideal, ideal_robot, _ = plant_step(
                ideal, bend, DisturbanceParams.disturbance_free(), GEOM
            )
        # sagging arm: tip strictly lower than the undisturbed arm
        assert robot.positions[2, 2] < ideal_robot.positions[2, 2] - 0.01

    def test_realized_bend_clamp(self):
        params = DisturbanceParams(
            gravity_droop_gain=5.0, hysteresis_rate=1.0, config_noise_std=0.0, seed=0
        )
        state = initial_plant_state(GEOM, params)
        bend = [ModuleAction(-0.025, 0.0125, 0.0125)] * 3
        for _ in range(50):
            state, _, _ = plant_step(state, bend, params, GEOM)
        for arc in state.realized_arcs():
            assert arc.bend_angle <= 1.6 + 1e-12


class TestBabbleSchedule:
    def test_phase_sharing(self):
        spec = BabbleSchedule(total_samples=900, seed=5)
        acts = make_babble_schedule(spec)
        t1, t2 = spec.phase_bounds
        assert np.array_equal(acts[:t1, 0], acts[:t1, 2])
        assert np.array_equal(acts[:t2, 0], acts[:t2, 1])
        assert not np.array_equal(acts[t1:t2, 0], acts[t1:t2, 2])
        assert not np.array_equal(acts[t2:, 0], acts[t2:, 1])
        assert not np.array_equal(acts[t2:, 1], acts[t2:, 2])

    def test_zero_sum_and_range(self):
        acts = make_babble_schedule(BabbleSchedule(total_samples=600, seed=6))
        assert np.abs(acts.sum(axis=2)).max() <= 1e-12
        assert np.abs(acts).max() <= 1.0

    def test_no_jump_at_phase_switch(self):
        spec = BabbleSchedule(total_samples=900, seed=7)
        acts = make_babble_schedule(spec)
        t1, t2 = spec.phase_bounds
        step = np.abs(acts[t1, 2] - acts[t1 - 1, 2]).max()
        assert step < 0.5  # a fresh walk would jump O(1)

    def test_determinism(self):
        a = make_babble_schedule(BabbleSchedule(total_samples=300, seed=8))
        b = make_babble_schedule(BabbleSchedule(total_samples=300, seed=8))
        assert np.array_equal(a, b)


class TestCollectDataset:
    def test_shapes_and_ranges(self):
        ds = small_dataset(seed=0, n=600)
        assert len(ds) == 600
        assert np.abs(ds.actions).max() <= 1.0
        norms = np.linalg.norm(ds.encoder_configs, axis=2)
        assert np.allclose(norms, 1.0, atol=1e-9)
        norms = np.linalg.norm(ds.true_configs, axis=2)
        assert np.allclose(norms, 1.0, atol=1e-9)

    def test_determinism(self):
        a = small_dataset(seed=9, n=400)
        b = small_dataset(seed=9, n=400)
        assert np.array_equal(a.true_states, b.true_states)
        assert np.array_equal(a.encoder_configs, b.encoder_configs)

    def test_error_ordering_over_seeds(self):
        """Estimation error grows along the module chain, 5 seeds."""
        for seed in range(5):
            errs = estimation_errors_deg(small_dataset(seed=seed, n=800))
            assert errs[0] < errs[1] < errs[2]

    def test_calibration_band(self):
        errs = estimation_errors_deg(small_dataset(seed=0, n=2000))
        assert np.all(errs >= 4.0) and np.all(errs <= 16.0)

    def test_workspace_extent(self):
        ds = small_dataset(seed=1, n=3000)
        tip = ds.true_states[:, 2, :3]
        # paper works a 0.6 m arm spanning about 0.99/0.99/0.49 m
        assert 0.6 <= np.ptp(tip[:, 0]) <= 1.2
        assert 0.6 <= np.ptp(tip[:, 1]) <= 1.2
        assert 0.3 <= np.ptp(tip[:, 2]) <= 0.9


class TestDatasetIO:
    def test_round_trip_bit_identical(self, tmp_path):
        ds = small_dataset(seed=2, n=120)
        p1 = tmp_path / "a.dat"
        p2 = tmp_path / "b.dat"
        dataset_write(ds, p1)
        back = dataset_read(p1)
        dataset_write(back, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert np.array_equal(back.true_states, ds.true_states)
        assert np.array_equal(back.actions, ds.actions)
        assert np.array_equal(back.encoder_configs, ds.encoder_configs)
        assert np.array_equal(back.true_configs, ds.true_configs)

    def test_record_access(self):
        ds = small_dataset(seed=2, n=50)
        rec = record_at(ds, 7)
        assert rec.tick == 7
        assert rec.actions.shape == (3, 3)

    def test_parse_error_carries_line_number(self, tmp_path):
        ds = small_dataset(seed=2, n=10)
        path = tmp_path / "d.dat"
        dataset_write(ds, path)
        lines = path.read_text().splitlines()
        lines[5] = lines[5] + " 0.1"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError, match=":6"):
            dataset_read(path)

    def test_bad_number(self, tmp_path):
        ds = small_dataset(seed=2, n=10)
        path = tmp_path / "d.dat"
        dataset_write(ds, path)
        lines = path.read_text().splitlines()
        parts = lines[3].split()
        parts[4] = "zap"
        lines[3] = " ".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError, match=":4"):
            dataset_read(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "d.dat"
        path.write_text("1 2 3\n")
        with pytest.raises(DatasetFormatError, match="header"):
            dataset_read(path)
