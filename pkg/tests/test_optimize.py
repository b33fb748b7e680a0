import numpy as np
import pytest

from oqsid.dynamics import propagate_lindblad, random_density_matrix, random_model
from oqsid.objectives import kraus_objective, pade_objective
from oqsid.optimize import (
    OptimizerConfig,
    basin_hopping,
    bfgs_minimize,
    finite_diff_gradient,
)


def quadratic(center):
    center = np.asarray(center, dtype=float)

    def evaluate(x):
        d = x - center
        return float(d @ d), 2 * d

    return evaluate


def rosenbrock(x):
    f = (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    g = np.array(
        [
            -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2),
            200 * (x[1] - x[0] ** 2),
        ]
    )
    return f, g


def double_well(x):
    f = (x[0] ** 2 - 1) ** 2 + 0.1 * x[0]
    g = np.array([4 * x[0] * (x[0] ** 2 - 1) + 0.1])
    return f, g


class TestConfig:
    def test_defaults_valid(self):
        cfg = OptimizerConfig()
        assert cfg.g_tol == 1e-6 and cfg.max_iter == 500 and cfg.hops == 30

    def test_rejects_bad_wolfe_constants(self):
        with pytest.raises(ValueError):
            OptimizerConfig(c1=0.5, c2=0.1)

    def test_rejects_bad_tolerances(self):
        with pytest.raises(ValueError):
            OptimizerConfig(g_tol=0.0)


class TestBfgs:
    def test_exact_quadratic(self):
        cfg = OptimizerConfig()
        result = bfgs_minimize(quadratic([3.0, -1.0, 2.0]), np.zeros(3), cfg)
        assert result.converged
        np.testing.assert_allclose(result.best_params, [3.0, -1.0, 2.0], atol=1e-8)
        assert result.total_evals <= 12  # a handful of evaluations for a pure quadratic

    def test_rosenbrock(self):
        result = bfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), OptimizerConfig())
        assert result.converged
        np.testing.assert_allclose(result.best_params, [1.0, 1.0], atol=1e-6)

    def test_never_worse_than_start(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            center = rng.standard_normal(4)
            x0 = rng.standard_normal(4)
            f0 = quadratic(center)(x0)[0]
            result = bfgs_minimize(quadratic(center), x0, OptimizerConfig(max_iter=2))
            assert result.best_value <= f0

    def test_pade_objective_end_to_end(self):
        rng = np.random.default_rng(1)
        model = random_model(2, 1, rng)
        series = propagate_lindblad(model, random_density_matrix(2, rng), 0.1, 20)
        obj = pade_objective(series, ell=1)
        x0 = 0.1 * rng.standard_normal(obj.layout.size)
        result = bfgs_minimize(obj, x0, OptimizerConfig(g_tol=1e-6, max_iter=500))
        assert result.converged
        assert result.best_grad_norm <= 1e-6

    def test_abort_on_nonfinite_start(self):
        def bad(x):
            return float("nan"), np.zeros_like(x)

        result = bfgs_minimize(bad, np.zeros(2), OptimizerConfig())
        assert not result.converged

    def test_converged_implies_gradient_below_tol(self):
        result = bfgs_minimize(rosenbrock, np.array([0.5, 0.5]), OptimizerConfig(g_tol=1e-7))
        assert result.converged
        assert result.best_grad_norm <= 1e-7


class TestBasinHopping:
    def test_finds_global_minimum_of_double_well(self):
        # dense 1-D grid oracle for the global minimizer
        grid = np.linspace(-2.5, 2.5, 200001)
        values = (grid**2 - 1) ** 2 + 0.1 * grid
        x_star = grid[np.argmin(values)]
        assert x_star < 0  # global basin is on the negative side

        cfg = OptimizerConfig(hops=15, seed=3)
        result = basin_hopping(double_well, np.array([2.0]), cfg)
        assert result.converged
        assert result.best_params[0] == pytest.approx(x_star, abs=1e-3)
        assert result.best_value < double_well(np.array([1.0]))[0]

    def test_deterministic_given_seed(self):
        cfg = OptimizerConfig(hops=8, seed=11)
        r1 = basin_hopping(double_well, np.array([2.0]), cfg)
        r2 = basin_hopping(double_well, np.array([2.0]), cfg)
        np.testing.assert_array_equal(r1.best_params, r2.best_params)
        assert r1.best_value == r2.best_value
        assert r1.total_evals == r2.total_evals

    def test_zero_hops_degenerates_to_bfgs(self):
        cfg = OptimizerConfig(hops=0, seed=0)
        bh = basin_hopping(quadratic([1.0, 2.0]), np.zeros(2), cfg)
        local = bfgs_minimize(quadratic([1.0, 2.0]), np.zeros(2), cfg)
        np.testing.assert_array_equal(bh.best_params, local.best_params)
        assert bh.local_runs == 1
        assert bh.total_evals == local.total_evals

    def test_monotone_global_best(self):
        # the tracked best value never exceeds any accepted local value;
        # proxy check: best <= first local run's value
        cfg = OptimizerConfig(hops=6, seed=5)
        first = bfgs_minimize(double_well, np.array([2.0]), cfg)
        result = basin_hopping(double_well, np.array([2.0]), cfg)
        assert result.best_value <= first.best_value
        assert result.local_runs == 7

    def test_survives_aborting_objective(self):
        calls = {"n": 0}

        def flaky(x):
            calls["n"] += 1
            if np.any(np.abs(x) > 2.5):
                return float("nan"), np.zeros_like(x)
            return float(x @ x), 2 * x

        cfg = OptimizerConfig(hops=10, step_size=2.0, seed=7)
        result = basin_hopping(flaky, np.array([2.0]), cfg)
        assert result.converged
        np.testing.assert_allclose(result.best_params, [0.0], atol=1e-6)


class TestFiniteDiff:
    def test_quadratic_gradient(self):
        f = lambda x: float(np.sum(x**2))
        grad = finite_diff_gradient(f, np.array([1.0, 2.0]), 1e-6)
        np.testing.assert_allclose(grad, [2.0, 4.0], atol=1e-8)

    def test_constant_function(self):
        grad = finite_diff_gradient(lambda x: 3.14, np.zeros(4), 1e-6)
        np.testing.assert_array_equal(grad, np.zeros(4))

    def test_matches_kraus_analytic_gradient(self):
        rng = np.random.default_rng(2)
        model = random_model(2, 1, rng)
        series = propagate_lindblad(model, random_density_matrix(2, rng), 0.1, 6)
        obj = kraus_objective(series, ell=2, mu=10.0)
        v = 0.3 * rng.standard_normal(obj.layout.size)
        fd = finite_diff_gradient(obj, v, 1e-6 * (1 + np.abs(v)))
        _, grad = obj.evaluate(v)
        assert np.max(np.abs(grad - fd) / (1 + np.abs(fd))) <= 1e-6
