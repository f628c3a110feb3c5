import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blimpsim.continuum import (DELTA_MAX, EPS_Q, CableLengths,
                                ContinuumGeometry, DeflectionParams,
                                arc_integration_oracle, cable_to_q,
                                mass_position_components, q_to_arc,
                                q_to_mass_position)

GEOM = ContinuumGeometry(backbone_length=0.2, cable_offset=0.02,
                         base_offset=0.05)

deltas = st.floats(min_value=-DELTA_MAX, max_value=DELTA_MAX)


class TestCableToQ:
    def test_equal_cables_straight(self):
        q = cable_to_q(CableLengths(0.20, 0.20, 0.20))
        assert q.dx == 0.0 and q.dy == 0.0

    def test_hand_case_dx(self):
        q = cable_to_q(CableLengths(0.17, 0.215, 0.215))
        assert q.dx == pytest.approx(0.030, abs=1e-15)
        assert q.dy == pytest.approx(0.0, abs=1e-15)

    def test_hand_case_dy(self):
        q = cable_to_q(CableLengths(0.20, 0.19, 0.21))
        assert q.dx == pytest.approx(0.0, abs=1e-15)
        assert q.dy == pytest.approx(math.sqrt(3.0) / 3.0 * 0.02, abs=1e-15)

    @given(l1=st.floats(0.1, 0.3), d2=st.floats(-0.02, 0.02),
           d3=st.floats(-0.02, 0.02), c=st.floats(0.0, 0.1))
    def test_common_increment_invariance(self, l1, d2, d3, c):
        base = cable_to_q(CableLengths(l1, l1 + d2, l1 + d3))
        shifted = cable_to_q(CableLengths(l1 + c, l1 + d2 + c, l1 + d3 + c))
        assert base.dx == pytest.approx(shifted.dx, abs=1e-12)
        assert base.dy == pytest.approx(shifted.dy, abs=1e-12)

    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(ValueError):
            CableLengths(0.0, 0.2, 0.2)
        with pytest.raises(ValueError):
            CableLengths(0.2, -0.1, 0.2)
        with pytest.raises(ValueError):
            CableLengths(0.2, math.nan, 0.2)


class TestMassPosition:
    def test_straight_arm_limit(self):
        r = q_to_mass_position(DeflectionParams(0.0, 0.0), GEOM)
        assert np.allclose(r, [0.0, 0.0, 0.25], atol=1e-15)

    def test_hand_case_unit_arc(self):
        # dx = d makes the arc angle exactly 1 rad.
        r = q_to_mass_position(DeflectionParams(0.02, 0.0), GEOM)
        c = GEOM.backbone_length * GEOM.cable_offset / 0.02
        assert r[0] == pytest.approx(c * (1.0 - math.cos(1.0)), rel=1e-12)
        assert r[1] == 0.0
        assert r[2] == pytest.approx(0.05 + c * math.sin(1.0), rel=1e-12)

    @given(dx=deltas, dy=deltas)
    def test_component_swap_symmetry(self, dx, dy):
        geom = ContinuumGeometry(0.22, 0.0406, 0.05)
        a = q_to_mass_position(DeflectionParams(dx, dy), geom)
        b = q_to_mass_position(DeflectionParams(dy, dx), geom)
        assert a[0] == pytest.approx(b[1], abs=1e-15)
        assert a[1] == pytest.approx(b[0], abs=1e-15)
        assert a[2] == pytest.approx(b[2], abs=1e-15)

    def test_rejects_arc_beyond_quarter_turn(self):
        with pytest.raises(ValueError, match="arc angle"):
            q_to_mass_position(DeflectionParams(0.045, 0.0), GEOM)

    def test_singularity_continuity(self):
        # Direct evaluation just above the series threshold agrees with the
        # series branch to well below 1e-8 m.
        L, d, h = GEOM.backbone_length, GEOM.cable_offset, GEOM.base_offset
        for delta in (EPS_Q, EPS_Q / 10.0):
            direct = np.array([
                delta * (L * d / delta ** 2) * (1 - math.cos(delta / d)),
                0.0,
                h + (L * d / delta ** 2) * delta * math.sin(delta / d),
            ])
            series = np.array(mass_position_components(delta, 0.0, L, d, h))
            assert np.max(np.abs(direct - series)) < 1e-8

    def test_z_component_range(self):
        geom = ContinuumGeometry(0.22, 0.0406, 0.05)
        grid = np.linspace(-DELTA_MAX, DELTA_MAX, 21)
        top = geom.base_offset + geom.backbone_length
        best = -np.inf
        for dx in grid:
            for dy in grid:
                z = q_to_mass_position(DeflectionParams(dx, dy), geom)[2]
                assert geom.base_offset < z <= top + 1e-15
                best = max(best, z)
        assert best == pytest.approx(top)
        assert q_to_mass_position(DeflectionParams(0, 0), geom)[2] == top


class TestArcOracle:
    def test_grid_matches_arc_integration(self):
        geom = ContinuumGeometry(0.22, 0.0406, 0.05)
        grid = np.linspace(-DELTA_MAX, DELTA_MAX, 21)
        worst = 0.0
        for dx in grid:
            for dy in grid:
                q = DeflectionParams(dx, dy)
                ana = q_to_mass_position(q, geom)
                num = arc_integration_oracle(q, geom, segments=1000)
                worst = max(worst, float(np.max(np.abs(ana - num))))
        assert worst <= 1e-6

    @given(dx=deltas, dy=deltas)
    @settings(max_examples=30)
    def test_random_matches_arc_integration(self, dx, dy):
        geom = ContinuumGeometry(0.22, 0.0406, 0.05)
        q = DeflectionParams(dx, dy)
        ana = q_to_mass_position(q, geom)
        num = arc_integration_oracle(q, geom, segments=1000)
        assert np.max(np.abs(ana - num)) <= 1e-6


class TestArcParameters:
    def test_unit_arc_along_x(self):
        assert q_to_arc(DeflectionParams(0.02, 0.0), GEOM) == (0.0, pytest.approx(1.0))

    def test_unit_arc_along_y(self):
        direction, angle = q_to_arc(DeflectionParams(0.0, 0.02), GEOM)
        assert direction == pytest.approx(math.pi / 2.0)
        assert angle == pytest.approx(1.0)

    def test_straight_arm_tie_break(self):
        assert q_to_arc(DeflectionParams(0.0, 0.0), GEOM) == (0.0, 0.0)


class TestGeometryValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ContinuumGeometry(-0.1, 0.02, 0.05)
        with pytest.raises(ValueError):
            ContinuumGeometry(0.2, 0.0, 0.05)
        with pytest.raises(ValueError):
            ContinuumGeometry(0.2, 0.02, -0.01)
