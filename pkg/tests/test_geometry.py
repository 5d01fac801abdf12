import math

import numpy as np
import pytest

from softarm.errors import ActionError, ActuationRangeError
from softarm.geometry import (
    ArcParams,
    ArmGeometry,
    ModuleAction,
    ModuleConfiguration,
    arc_to_action,
    arc_to_config,
    config_to_arc,
    estimate_arc,
    forward_state,
    module_transform,
    wrap_angle,
)

GEOM = ArmGeometry()


def integrate_arc(phi, theta, l0, segments=10_000):
    """Independent FK oracle: midpoint integration of the arc tangent."""
    psi = theta - math.pi / 2.0
    s = (np.arange(segments) + 0.5) / segments
    ang = phi * s
    tangent = np.stack(
        [np.sin(ang) * math.cos(psi), np.sin(ang) * math.sin(psi), np.cos(ang)], axis=1
    )
    return tangent.sum(axis=0) * (l0 / segments)


def random_arcs(n, seed, phi_lo=1e-3, phi_hi=1.5):
    rng = np.random.default_rng(seed)
    phis = rng.uniform(phi_lo, phi_hi, size=n)
    thetas = rng.uniform(-math.pi, math.pi, size=n)
    return [ArcParams(float(p), float(t)) for p, t in zip(phis, thetas)]


class TestEstimateArc:
    def test_straight(self):
        arc = estimate_arc(ModuleAction(0.0, 0.0, 0.0), GEOM)
        assert arc.bend_angle == 0.0
        assert arc.neutral_direction == 0.0

    def test_closed_form_example(self):
        arc = estimate_arc(ModuleAction(-0.02, 0.01, 0.01), GEOM)
        assert arc.bend_angle == pytest.approx(1.0, abs=1e-12)
        assert arc.neutral_direction == pytest.approx(math.pi / 2.0, abs=1e-12)

    def test_matches_direct_evaluation(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a1 = rng.uniform(-0.02, 0.02)
            a2 = rng.uniform(-0.02, 0.02)
            a3 = -a1 - a2
            arc = estimate_arc(ModuleAction(a1, a2, a3), GEOM)
            phi_ref = math.sqrt(a1**2 + (a2 - a3) ** 2 / 3.0) / GEOM.cable_radius
            assert arc.bend_angle == pytest.approx(phi_ref, abs=1e-12)

    def test_zero_sum_contract(self):
        with pytest.raises(ActionError):
            estimate_arc(ModuleAction(0.01, 0.01, 0.01), GEOM)

    def test_roundtrip_through_action(self):
        arc = estimate_arc(ModuleAction(0.01, -0.02, 0.01), GEOM)
        back = arc_to_action(arc, GEOM)
        assert back.a1 == pytest.approx(0.01, abs=1e-9)
        assert back.a2 == pytest.approx(-0.02, abs=1e-9)
        assert back.a3 == pytest.approx(0.01, abs=1e-9)


class TestArcConfig:
    def test_straight_points_up(self):
        for theta in (0.0, 1.0, -2.5):
            c = arc_to_config(ArcParams(0.0, theta))
            assert np.allclose(c.as_array(), [0.0, 0.0, 1.0])

    def test_right_angle(self):
        c = arc_to_config(ArcParams(math.pi / 2.0, math.pi / 2.0))
        assert np.allclose(c.as_array(), [1.0, 0.0, 0.0], atol=1e-15)

    def test_direct_evaluation(self):
        c = arc_to_config(ArcParams(1.0, 0.0))
        assert c.ox == pytest.approx(math.sin(1.0) * math.cos(-math.pi / 2.0), abs=1e-12)
        assert c.oy == pytest.approx(-0.8414709848078965, abs=1e-12)
        assert c.oz == pytest.approx(0.5403023058681398, abs=1e-12)

    def test_unit_length(self):
        for arc in random_arcs(100, seed=11, phi_hi=math.pi - 1e-3):
            c = arc_to_config(arc)
            assert np.linalg.norm(c.as_array()) == pytest.approx(1.0, abs=1e-12)

    def test_inverse_tie_break(self):
        arc = config_to_arc(ModuleConfiguration(0.0, 0.0, 1.0))
        assert arc.bend_angle == 0.0
        assert arc.neutral_direction == 0.0

    def test_inverse_right_angle(self):
        arc = config_to_arc(ModuleConfiguration(1.0, 0.0, 0.0))
        assert arc.bend_angle == pytest.approx(math.pi / 2.0, abs=1e-12)
        assert arc.neutral_direction == pytest.approx(math.pi / 2.0, abs=1e-12)

    def test_config_roundtrip_1000(self):
        """Round trip B: arc_to_config o config_to_arc = id for oz > 0.05."""
        rng = np.random.default_rng(7)
        count = 0
        while count < 1000:
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            if v[2] <= 0.05:
                continue
            count += 1
            back = arc_to_config(config_to_arc(ModuleConfiguration(*v)))
            assert np.allclose(back.as_array(), v, atol=1e-9)

    def test_matches_paper_closed_form_where_defined(self):
        # theta_d = atan2(oy, ox) + pi/2 ; phi_d = atan2(oy / sin(theta_d - pi/2), oz)
        for arc in random_arcs(300, seed=13):
            c = arc_to_config(arc)
            theta_d = math.atan2(c.oy, c.ox) + math.pi / 2.0
            denom = math.sin(theta_d - math.pi / 2.0)
            if abs(denom) < 1e-3:
                continue
            phi_d = math.atan2(c.oy / denom, c.oz)
            got = config_to_arc(c)
            assert got.bend_angle == pytest.approx(phi_d, abs=1e-9)


class TestArcToAction:
    def test_straight(self):
        a = arc_to_action(ArcParams(0.0, 0.3), GEOM)
        assert np.allclose(a.as_array(), 0.0)

    def test_inverse_of_estimate_example(self):
        a = arc_to_action(ArcParams(1.0, math.pi / 2.0), GEOM)
        assert a.a1 == pytest.approx(-0.02, abs=1e-12)
        assert a.a2 == pytest.approx(0.01, abs=1e-12)
        assert a.a3 == pytest.approx(0.01, abs=1e-12)

    def test_action_roundtrip_1000(self):
        """Round trip A: estimate_arc o arc_to_action = id on phi in (0, 1.5]."""
        for arc in random_arcs(1000, seed=5):
            action = arc_to_action(arc, GEOM)
            back = estimate_arc(action, GEOM)
            assert back.bend_angle == pytest.approx(arc.bend_angle, abs=1e-9)
            assert wrap_angle(back.neutral_direction - arc.neutral_direction) == pytest.approx(
                0.0, abs=1e-9
            )

    def test_zero_sum_preserved(self):
        for arc in random_arcs(500, seed=9):
            a = arc_to_action(arc, GEOM)
            assert abs(a.a1 + a.a2 + a.a3) <= 1e-12

    def test_out_of_range(self):
        with pytest.raises(ActuationRangeError):
            arc_to_action(ArcParams(2.2, 0.5), GEOM)


class TestModuleTransform:
    def test_straight_limit(self):
        t = module_transform(ArcParams(0.0, 0.0), GEOM)
        assert np.allclose(t.translation, [0.0, 0.0, 0.2])
        assert np.allclose(t.rotation, np.eye(3))

    def test_translation_example(self):
        t = module_transform(ArcParams(1.0, math.pi / 2.0), GEOM)
        ref = integrate_arc(1.0, math.pi / 2.0, 0.2)
        assert np.allclose(t.translation, ref, atol=1e-7)
        assert t.translation[0] == pytest.approx(0.09194, abs=1e-5)
        assert t.translation[1] == pytest.approx(0.0, abs=1e-12)
        assert t.translation[2] == pytest.approx(0.16829, abs=1e-5)

    def test_integration_oracle_grid(self):
        for phi in np.linspace(0.0, 1.5, 16):
            for theta in np.linspace(-math.pi, math.pi, 8, endpoint=False):
                t = module_transform(ArcParams(float(phi), float(theta)), GEOM)
                ref = integrate_arc(float(phi), float(theta), GEOM.module_length)
                assert np.allclose(t.translation, ref, atol=1e-7)

    def test_continuity_at_zero(self):
        # series branch (just below cutover) must agree with the exact branch
        # evaluated at the same tiny angle far beyond the test tolerance
        phi = 9.999e-7
        series = module_transform(ArcParams(phi, 1.2), GEOM).translation
        rho = GEOM.module_length / phi
        psi = 1.2 - math.pi / 2.0
        exact = np.array(
            [
                rho * (1 - math.cos(phi)) * math.cos(psi),
                rho * (1 - math.cos(phi)) * math.sin(psi),
                rho * math.sin(phi),
            ]
        )
        # the naive form cancels catastrophically here (~1e-11 error); the
        # series must sit on top of it well inside the 1e-7 FK tolerance
        assert np.allclose(series, exact, atol=1e-9)

    def test_rotation_consistency(self):
        for arc in random_arcs(200, seed=21):
            t = module_transform(arc, GEOM)
            t.validate()
            image = t.rotation @ np.array([0.0, 0.0, 1.0])
            assert np.allclose(image, arc_to_config(arc).as_array(), atol=1e-9)


class TestForwardState:
    def test_all_straight(self):
        straight = ModuleConfiguration(0.0, 0.0, 1.0)
        state = forward_state([straight] * 3, GEOM)
        assert np.allclose(state.positions, [[0, 0, 0.2], [0, 0, 0.4], [0, 0, 0.6]])
        assert np.allclose(state.orientations, [[0, 0, 1]] * 3)

    @staticmethod
    def _homogeneous_oracle(arcs, geom):
        """Independent 4x4 homogeneous-matrix composition."""
        T = np.eye(4)
        out = []
        for arc in arcs:
            phi, psi = arc.bend_angle, arc.neutral_direction - math.pi / 2.0
            if phi < 1e-12:
                trans = np.array([0.0, 0.0, geom.module_length])
                rot = np.eye(3)
            else:
                rho = geom.module_length / phi
                trans = np.array(
                    [rho * (1 - math.cos(phi)) * math.cos(psi),
                     rho * (1 - math.cos(phi)) * math.sin(psi),
                     rho * math.sin(phi)]
                )
                # rotate by -psi about z, tilt by phi about y, rotate back
                cz, sz = math.cos(psi), math.sin(psi)
                rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
                cy, sy = math.cos(phi), math.sin(phi)
                ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
                rot = rz @ ry @ rz.T
            step = np.eye(4)
            step[:3, :3] = rot
            step[:3, 3] = trans
            T = T @ step
            out.append((T[:3, 3].copy(), (T[:3, :3] @ np.array([0.0, 0.0, 1.0])).copy()))
        return out

    def test_matches_homogeneous_oracle(self):
        arcs = [
            ArcParams(math.pi / 2.0, math.pi / 2.0),  # bend in +x plane
            ArcParams(0.0, 0.0),
            ArcParams(0.0, 0.0),
        ]
        configs = [arc_to_config(a) for a in arcs]
        state = forward_state(configs, GEOM)
        oracle = self._homogeneous_oracle(arcs, GEOM)
        for m in range(3):
            assert np.allclose(state.positions[m], oracle[m][0], atol=1e-9)
            assert np.allclose(state.orientations[m], oracle[m][1], atol=1e-9)

    def test_random_against_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            arcs = [
                ArcParams(float(rng.uniform(0, 1.5)), float(rng.uniform(-math.pi, math.pi)))
                for _ in range(3)
            ]
            state = forward_state([arc_to_config(a) for a in arcs], GEOM)
            oracle = self._homogeneous_oracle(arcs, GEOM)
            for m in range(3):
                assert np.allclose(state.positions[m], oracle[m][0], atol=1e-9)
                assert np.allclose(state.orientations[m], oracle[m][1], atol=1e-9)

    def test_s_shape_straightens_tip(self):
        arcs = [
            ArcParams(1.0, math.pi / 2.0),   # module I bends toward +x
            ArcParams(0.0, 0.0),
            ArcParams(1.0, -math.pi / 2.0),  # module III bends back toward -x
        ]
        state = forward_state([arc_to_config(a) for a in arcs], GEOM)
        z = np.array([0.0, 0.0, 1.0])
        angle_i = math.acos(np.clip(state.orientations[0] @ z, -1, 1))
        angle_iii = math.acos(np.clip(state.orientations[2] @ z, -1, 1))
        assert angle_iii < angle_i
        assert angle_iii == pytest.approx(0.0, abs=1e-9)


class TestInvariantsAndValidation:
    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            ArmGeometry(module_length=-1.0)
        with pytest.raises(ValueError):
            ArmGeometry(module_count=0)

    def test_phi_max(self):
        # extreme in-range zero-sum action (0, A, -A) realizes phi_max
        g = ArmGeometry()
        arc = estimate_arc(ModuleAction(0.0, g.max_cable_displacement, -g.max_cable_displacement), g)
        assert arc.bend_angle == pytest.approx(g.phi_max, abs=1e-12)

    def test_action_validate(self):
        ModuleAction(0.01, -0.02, 0.01).validate(GEOM)
        with pytest.raises(ActionError):
            ModuleAction(0.01, 0.01, 0.01).validate(GEOM)
        with pytest.raises(ActuationRangeError):
            ModuleAction(0.05, -0.025, -0.025).validate(GEOM)

    def test_config_validate(self):
        ModuleConfiguration(0.0, 0.0, 1.0).validate()
        with pytest.raises(ValueError):
            ModuleConfiguration(0.5, 0.5, 0.5).validate()

    def test_wrap_angle(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
