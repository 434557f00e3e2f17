import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import abphase as ab


def line(*knots):
    return ab.Worldline(list(knots))


class TestPosition:
    def test_linear_interpolation(self):
        wl = line([0, 0, 0, 0], [1, 0, 0, 1])
        assert np.allclose(wl.position(0.5), [0.5, 0, 0])

    def test_endpoints_exact(self):
        wl = line([0.3, -0.7, 2.0, 0], [1, 0, 0, 1])
        assert np.all(wl.position(0.0) == [0.3, -0.7, 2.0])

    def test_knot_position_exact(self):
        wl = line([0, 0, 0, 0], [1, 0, 0, 1], [1, 1, 0, 2])
        assert np.all(wl.position(1.0) == [1, 0, 0])

    def test_out_of_range_rejected(self):
        wl = line([0, 0, 0, 0], [1, 0, 0, 1])
        with pytest.raises(ab.OutOfRangeTimeError):
            wl.position(1.5)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 1.99), st.floats(1e-6, 1e-2))
    def test_continuity(self, t, eps):
        wl = line([0, 0, 0, 0], [1, 2, 0, 1], [3, 2, -1, 2])
        v_max = 3.0
        if t + eps > 2.0:
            return
        step = np.linalg.norm(wl.position(t + eps) - wl.position(t))
        assert step <= v_max * eps + 1e-12


class TestVelocity:
    def test_constant_segment_velocity(self):
        wl = line([0, 0, 0, 0], [1, 0, 0, 2])
        assert np.allclose(wl.velocity(1.0), [0.5, 0, 0])

    def test_dwell_segment_is_at_rest(self):
        wl = line([1, 1, 0, 0], [1, 1, 0, 3], [2, 1, 0, 4])
        assert np.all(wl.velocity(1.5) == 0.0)

    def test_knot_uses_right_hand_segment(self):
        wl = line([0, 0, 0, 0], [1, 0, 0, 1], [1, 1, 0, 2])
        assert np.allclose(wl.velocity(1.0), [0, 1, 0])

    def test_validation(self):
        with pytest.raises(ValueError):
            line([0, 0, 0, 0])
        with pytest.raises(ValueError):
            line([0, 0, 0, 1], [1, 0, 0, 1])
        with pytest.raises(ValueError):
            line([0, 0, 0, 0], [np.inf, 0, 0, 1])


class TestDwellWindow:
    cage = ab.ShieldedCage(center=(0.0, 0.0, 0.0), radius=1.0)

    def test_enter_and_leave(self):
        # crosses |x| = 1 at t = 2 (speed 1) and t = 5 (speed 1/2)
        wl = line([-3, 0, 0, 0], [0, 0, 0, 3], [3, 0, 0, 9])
        window = wl.dwell_window(self.cage)
        assert window == pytest.approx((2.0, 5.0), abs=1e-12)

    def test_never_inside(self):
        wl = line([-3, 2, 0, 0], [3, 2, 0, 6])
        assert wl.dwell_window(self.cage) is None

    def test_grazing_gives_degenerate_interval(self):
        # tangent to the unit sphere at (0, 1, 0), touched at t = 1
        wl = line([-1, 1, 0, 0], [1, 1, 0, 2])
        window = wl.dwell_window(self.cage)
        assert window is not None
        assert window[0] == pytest.approx(1.0, abs=1e-9)
        assert window[1] - window[0] <= 1e-9

    def test_longest_interval_wins(self):
        wl = line([-3, 0, 0, 0], [0, 0, 0, 1], [-3, 0, 0, 2],
                  [0, 0, 0, 5], [0, 0, 0, 9], [3, 0, 0, 10])
        window = wl.dwell_window(self.cage)
        assert window[1] > 5.0  # the long second visit, not the first dip

    def test_potential_cage_uses_inner_radius(self):
        cage = ab.PotentialCage((0.0, 0.0, 0.0), 0.5, 2.0,
                                ab.PiecewiseProfile([[0.0, 0.0], [1.0, 0.0]]))
        wl = line([-3, 0, 0, 0], [0, 0, 0, 3], [3, 0, 0, 6])
        window = wl.dwell_window(cage)
        assert window == pytest.approx((2.5, 3.5), abs=1e-12)


class TestInterferometer:
    def test_endpoint_identity_enforced(self):
        a = line([0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 0, 2])
        b_good = line([0, 0, 0, 0], [0, -1, 0, 1], [1, 0, 0, 2])
        b_bad = line([0, 0, 0, 0], [0, -1, 0, 1], [1, 1e-9, 0, 2])
        ab.Interferometer(a, b_good)
        with pytest.raises(ValueError):
            ab.Interferometer(a, b_bad)

    def test_time_span_must_match(self):
        a = line([0, 0, 0, 0], [1, 0, 0, 2])
        b = line([0, 0, 0, 0], [1, 0, 0, 3])
        with pytest.raises(ValueError):
            ab.Interferometer(a, b)

    def test_closed_loop_and_knot_times(self):
        a = line([0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 0, 2])
        b = line([0, 0, 0, 0], [0, -1, 0, 1.5], [1, 0, 0, 2])
        interf = ab.Interferometer(a, b)
        loop = interf.closed_spatial_loop()
        assert np.all(loop[0] == loop[-1])
        assert len(loop) == 5
        assert np.allclose(interf.knot_times(), [0.0, 1.0, 1.5, 2.0])

    def test_preset_interferometers_satisfy_identity(self):
        for name in ab.preset_names():
            scn = ab.scenario_from_tree(ab.preset_tree(name))
            interf = scn.interferometer
            assert np.all(interf.path_a.start == interf.path_b.start)
            assert np.all(interf.path_a.end == interf.path_b.end)
