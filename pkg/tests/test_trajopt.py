import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blimpsim.trajopt import (ResidualProblem, VectorLayout, fd_step_sizes,
                              jacobian, solve, weighted_residual)


class TestVectorLayout:
    def test_slices_and_pack(self):
        layout = VectorLayout((("state", 3), ("wind", 2)))
        assert layout.size == 5
        assert layout.slice_of("wind") == slice(3, 5)
        z = layout.pack(state=[1, 2, 3], wind=[4, 5])
        assert np.array_equal(z, [1, 2, 3, 4, 5])

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            VectorLayout((("a", 2), ("a", 1)))

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            VectorLayout((("a", 2),)).slice_of("b")


class TestWeightedResidual:
    def test_unit_weights(self):
        z = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(weighted_residual(z, 1.0), z)

    def test_scalar_case(self):
        out = weighted_residual(np.array([1.0]), np.array([4.0]))
        assert np.array_equal(out, [2.0])
        assert out @ out == pytest.approx(4.0)

    def test_zero_weight_rows_dropped(self):
        z = np.array([1.0, 2.0, 3.0, 4.0])
        w = np.array([1.0, 0.0, 4.0, 0.0])
        out = weighted_residual(z, w)
        assert out.shape == (2,)
        assert out @ out == pytest.approx(z @ (w * z))

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            weighted_residual(np.ones(2), np.array([1.0, -1.0]))


def make_problem(fn, x0, lower=-np.inf, upper=np.inf):
    return ResidualProblem(residual=fn, x0=np.asarray(x0, dtype=float),
                           lower=lower, upper=upper)


class TestJacobian:
    def test_linear_residual(self, rng):
        A = rng.normal(size=(6, 4))
        problem = make_problem(lambda x: A @ x + 1.0, np.zeros(4))
        J = jacobian(problem, rng.normal(size=4))
        assert np.max(np.abs(J - A)) < 1e-5

    def test_quadratic_residual_analytic(self):
        problem = make_problem(lambda x: np.array([x[0] ** 2, x[0] * x[1]]),
                               np.zeros(2))
        p = np.array([1.5, -2.0])
        J = jacobian(problem, p)
        analytic = np.array([[2 * p[0], 0.0], [p[1], p[0]]])
        assert np.max(np.abs(J - analytic) / (1 + np.abs(analytic))) < 1e-4

    def test_zero_residual(self):
        problem = make_problem(lambda x: np.zeros(3), np.zeros(2))
        assert np.array_equal(jacobian(problem, np.ones(2)), np.zeros((3, 2)))

    def test_step_sizes(self):
        h = fd_step_sizes(np.array([0.0, 10.0]))
        assert h[0] == pytest.approx(1e-6)
        assert h[1] == pytest.approx(1.1e-5)

    def test_central_difference_contract(self, rng):
        # Forward differences stay within 1e-4 relative of central ones on a
        # smooth nonlinear residual.
        A = rng.normal(size=(5, 3))

        def fn(x):
            return np.tanh(A @ x) + 0.1 * (A @ x) ** 2

        problem = make_problem(fn, np.zeros(3))
        p = rng.normal(size=3) * 0.5
        J = jacobian(problem, p)
        h = fd_step_sizes(p)
        Jc = np.empty_like(J)
        for i in range(3):
            dp = np.zeros(3)
            dp[i] = h[i]
            Jc[:, i] = (fn(p + dp) - fn(p - dp)) / (2 * h[i])
        denom = 1.0 + np.abs(Jc)
        assert np.max(np.abs(J - Jc) / denom) < 1e-4

    def test_nonfinite_column_zeroed(self):
        def fn(x):
            if x[1] > 0.5:
                return np.array([np.nan, np.nan])
            return np.array([x[0], x[1]])

        problem = make_problem(fn, np.zeros(2))
        J = jacobian(problem, np.array([0.0, 0.5]))
        assert np.allclose(J[:, 0], [1.0, 0.0], atol=1e-6)
        assert np.array_equal(J[:, 1], [0.0, 0.0])


class TestSolve:
    def test_linear_least_squares_matches_normal_equations(self, rng):
        A = rng.normal(size=(30, 8))
        b = rng.normal(size=30)
        problem = make_problem(lambda x: A @ x - b, np.zeros(8))
        report = solve(problem, max_iters=20, tol=1e-14)
        exact = np.linalg.solve(A.T @ A, A.T @ b)
        assert np.max(np.abs(report.x - exact)) < 1e-8
        assert report.converged

    def test_active_bound(self):
        problem = make_problem(lambda x: np.array([x[0] - 2.0]),
                               np.array([0.0]), upper=np.array([1.0]))
        report = solve(problem)
        assert report.x[0] == pytest.approx(1.0, abs=1e-12)

    def test_start_at_optimum(self):
        problem = make_problem(lambda x: np.array([x[0] - 2.0, x[1] + 1.0]),
                               np.array([2.0, -1.0]))
        report = solve(problem, tol=1e-12)
        assert report.converged
        assert report.iterations <= 1
        assert np.allclose(report.x, [2.0, -1.0])

    def test_monotone_cost(self, rng):
        A = rng.normal(size=(12, 5))

        def fn(x):
            return np.concatenate([A @ x - 1.0, 0.3 * x ** 2])

        trace = []
        solve(make_problem(fn, rng.normal(size=5) * 3), max_iters=30,
              tol=1e-14, trace=trace)
        costs = [row[1] for row in trace]
        assert all(a >= b - 1e-12 for a, b in zip(costs, costs[1:]))

    @given(lo=st.floats(-2, 0), hi=st.floats(0.1, 2))
    @settings(max_examples=20, deadline=None)
    def test_feasibility(self, lo, hi):
        problem = make_problem(lambda x: x - 5.0, np.zeros(3),
                               lower=np.full(3, lo), upper=np.full(3, hi))
        report = solve(problem)
        assert np.all(report.x >= lo) and np.all(report.x <= hi)

    def test_determinism(self, rng):
        A = rng.normal(size=(10, 4))

        def fn(x):
            return np.concatenate([A @ x - 2.0, 0.1 * x ** 3])

        x0 = rng.normal(size=4)
        r1 = solve(make_problem(fn, x0), max_iters=25, tol=1e-12)
        r2 = solve(make_problem(fn, x0), max_iters=25, tol=1e-12)
        assert np.array_equal(r1.x, r2.x)
        assert r1.cost == r2.cost and r1.iterations == r2.iterations

    def test_convex_quadratic_fast_convergence(self, rng):
        # Well-conditioned tall problem; the damped iteration reaches the
        # analytic optimum within a handful of steps.
        A = rng.normal(size=(50, 20))
        A += np.vstack([np.eye(20), np.eye(20), np.zeros((10, 20))])
        b = rng.normal(size=50)
        problem = make_problem(lambda x: A @ x - b, np.zeros(20))
        report = solve(problem, max_iters=5, tol=1e-16)
        exact = np.linalg.solve(A.T @ A, A.T @ b)
        assert np.max(np.abs(report.x - exact)) < 1e-8
        assert report.iterations <= 5

    def test_nonfinite_initial_cost_rejected(self):
        problem = make_problem(lambda x: np.array([np.nan]), np.zeros(1))
        with pytest.raises(ValueError):
            solve(problem)

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            make_problem(lambda x: x, np.zeros(2), lower=np.ones(2),
                         upper=np.zeros(2))
