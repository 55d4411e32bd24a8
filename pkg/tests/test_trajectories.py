import numpy as np
import pytest

from dide import HistorySegment, Trajectory


class TestEval:
    def test_linear_midpoint(self):
        tr = Trajectory(0.0, 0.5, [[1.0], [3.0]])
        assert tr.eval(0.25)[0] == 2.0

    def test_nodes_bit_exact(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal((40, 3))
        tr = Trajectory(-1.0, 0.05, samples)
        got = tr.eval(tr.times)
        assert np.array_equal(got, samples)

    def test_constant(self):
        tr = Trajectory.constant(0.0, 0.1, 11, [2.0, -1.0])
        for t in (0.0, 0.37, 1.0):
            assert np.array_equal(tr.eval(t), [2.0, -1.0])

    def test_out_of_range(self):
        tr = Trajectory(0.0, 0.1, [[0.0], [1.0]])
        with pytest.raises(ValueError, match="outside"):
            tr.eval(0.2)
        with pytest.raises(ValueError):
            tr.eval(-0.01)
        # endpoint tolerance of step * 1e-9
        tr.eval(0.1 + 0.1 * 1e-10)

    def test_scalar_vs_array_shapes(self):
        tr = Trajectory(0.0, 1.0, [[1.0, 2.0], [3.0, 4.0]])
        assert tr.eval(0.5).shape == (2,)
        assert tr.eval([0.0, 1.0]).shape == (2, 2)


class TestAppend:
    def test_append_extends_cover(self):
        tr = Trajectory(0.0, 0.5, [[1.0]])
        tr.append([2.0])
        tr.append([3.0])
        assert tr.end == 1.0
        assert tr.eval(0.75)[0] == 2.5

    def test_append_never_changes_earlier_values(self):
        rng = np.random.default_rng(4)
        tr = Trajectory(0.0, 0.1, rng.standard_normal((5, 2)))
        probe = np.linspace(0.0, 0.4, 17)
        before = tr.eval(probe).copy()
        for _ in range(30):
            tr.append(rng.standard_normal(2))
        assert np.array_equal(tr.eval(probe), before)

    def test_dimension_checked(self):
        tr = Trajectory(0.0, 0.1, [[1.0, 2.0]])
        with pytest.raises(ValueError):
            tr.append([1.0])


class TestLpNorm:
    def test_constant_one(self):
        tr = Trajectory.constant(0.0, 0.1, 11, [1.0])
        assert tr.lp_norm(2.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_identity_function(self):
        # trapezoid is exact on the piecewise-linear integrand |t|^1
        tr = Trajectory.from_function(0.0, 0.01, 101, lambda t: [t])
        assert tr.lp_norm(1.0, 0.0, 1.0) == pytest.approx(0.5, abs=1e-14)

    def test_zero(self):
        tr = Trajectory.constant(0.0, 0.1, 11, [0.0])
        assert tr.lp_norm(3.0, 0.0, 1.0) == 0.0

    def test_subinterval_and_offgrid_bounds(self):
        tr = Trajectory.constant(0.0, 0.1, 11, [1.0])
        assert tr.lp_norm(1.0, 0.25, 0.75) == pytest.approx(0.5, abs=1e-12)

    def test_p_below_one_rejected(self):
        tr = Trajectory.constant(0.0, 0.1, 2, [1.0])
        with pytest.raises(ValueError):
            tr.lp_norm(0.5, 0.0, 0.1)


class TestHistory:
    def test_initial_window_is_phi(self):
        rng = np.random.default_rng(5)
        phi = rng.standard_normal((11, 2))
        tr = Trajectory(-1.0, 0.1, phi)
        seg = tr.history(0.0, 1.0)
        thetas = -1.0 + 0.1 * np.arange(11)
        assert np.array_equal(seg(thetas), phi)

    def test_right_endpoint_matches_eval(self):
        tr = Trajectory.from_function(-1.0, 0.1, 31, lambda t: [np.sin(t)])
        seg = tr.history(1.3, 1.0)
        assert np.array_equal(seg(0.0), tr.eval(1.3))

    def test_shift_identity_on_grid(self):
        tr = Trajectory.from_function(-1.0, 0.1, 31, lambda t: [np.cos(2 * t)])
        h = 0.1
        t = 1.0
        for theta in (-0.5, -0.2, -1.0 + h):
            a = tr.history(t, 1.0)(theta - h)
            b = tr.history(t - h, 1.0)(theta)
            assert np.array_equal(a, b)

    def test_insufficient_history_rejected(self):
        tr = Trajectory(0.0, 0.1, np.zeros((11, 1)))
        with pytest.raises(ValueError):
            tr.history(0.5, 1.0)

    def test_jump_aware_window(self):
        # phi = 1 on [-1, 0] but x(0) = 5: times < 0 read phi, times >= 0 read x
        phi = Trajectory.constant(-1.0, 0.25, 5, [1.0])
        x = Trajectory(-1.0, 0.25, [[1.0]] * 4 + [[5.0], [6.0]])
        seg = HistorySegment(x, 0.25, 1.0, pre=phi)
        assert seg(-0.25 - 0.25)[0] == 1.0  # tau = -0.25 < 0 -> phi
        assert seg(-0.25)[0] == 5.0  # tau = 0 -> x0
        assert seg(0.0)[0] == 6.0
        # without pre, the same window blends across the jump
        plain = HistorySegment(x, 0.25, 1.0)
        assert plain(-0.375)[0] == pytest.approx(3.0)  # midpoint of 1 and 5
        assert seg(-0.375)[0] == 1.0

    def test_cell_edges(self):
        tr = Trajectory(-2.0, 0.25, np.zeros((17, 1)))
        seg = tr.history(0.5, 1.0)
        edges = seg.cell_edges()
        assert edges[0] == -1.0 and edges[-1] == 0.0
        assert np.allclose(np.diff(edges), 0.25)
