import numpy as np
import pytest

from oqsid.dynamics import (
    KrausSet,
    LindbladModel,
    TimeSeries,
    dephasing_model,
    lindbladian_apply,
    propagate_kraus,
    propagate_lindblad,
    random_density_matrix,
    random_model,
)
from oqsid.linalg import frobenius_norm, matrix_exp
from oqsid.objectives import (
    ObjectiveFunction,
    ParameterLayout,
    cumulative_integral,
    integral_objective,
    kraus_objective,
    kraus_single_step_objective,
    pade_objective,
)
from oqsid.optimize import finite_diff_gradient


def make_series(seed=0, n=2, jumps=1, dt=0.1, steps=10):
    rng = np.random.default_rng(seed)
    model = random_model(n, jumps, rng)
    rho0 = random_density_matrix(n, rng)
    return model, propagate_lindblad(model, rho0, dt, steps)


def fd_check(objective, points=30, seed=0, scale=0.5, rtol=1e-6):
    """Relative agreement of the analytic gradient with central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        v = scale * rng.standard_normal(objective.layout.size)
        _, grad = objective.evaluate(v)
        fd = finite_diff_gradient(objective, v, 1e-6 * (1 + np.abs(v)))
        rel = np.max(np.abs(grad - fd) / (1 + np.abs(fd)))
        worst = max(worst, rel)
    assert worst <= rtol, f"gradient mismatch: {worst:.3e}"


class TestParameterLayout:
    @pytest.mark.parametrize("kind,n,ell", [("kraus", 2, 3), ("kraus", 3, 2), ("lindblad", 2, 1), ("lindblad", 3, 2)])
    def test_round_trip_from_vector(self, kind, n, ell):
        layout = ParameterLayout(kind=kind, n=n, ell=ell)
        rng = np.random.default_rng(42)
        v = rng.standard_normal(layout.size)
        np.testing.assert_array_equal(layout.encode(layout.decode(v)), v)

    def test_round_trip_from_model(self):
        rng = np.random.default_rng(1)
        model = random_model(2, 2, rng)
        layout = ParameterLayout(kind="lindblad", n=2, ell=2)
        decoded = layout.decode(layout.encode(model))
        np.testing.assert_array_equal(decoded.h, model.h)
        for a, b in zip(decoded.jumps, model.jumps):
            np.testing.assert_array_equal(a, b)

    def test_sizes(self):
        assert ParameterLayout(kind="kraus", n=2, ell=4).size == 32
        assert ParameterLayout(kind="lindblad", n=2, ell=1).size == 12

    def test_decoded_h_is_hermitian(self):
        layout = ParameterLayout(kind="lindblad", n=3, ell=1)
        v = np.random.default_rng(2).standard_normal(layout.size)
        model = layout.decode(v)
        assert isinstance(model, LindbladModel)

    def test_rejects_bad_kind(self):
        with pytest.raises(ValueError):
            ParameterLayout(kind="other", n=2, ell=1)


class TestKrausObjective:
    def test_zero_at_generating_model(self):
        p = 0.2
        damping = KrausSet(
            ops=(
                np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex),
                np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex),
            )
        )
        rho0 = random_density_matrix(2, np.random.default_rng(0))
        series = propagate_kraus(damping, rho0, 8)
        obj = kraus_objective(series, ell=2, mu=10.0)
        value, _ = obj.evaluate(obj.layout.encode(damping))
        assert value <= 1e-20

    def test_identity_on_constant_series(self):
        rho = random_density_matrix(2, np.random.default_rng(1))
        series = TimeSeries(dt=1.0, states=np.stack([rho] * 5))
        obj = kraus_objective(series, ell=1, mu=10.0)
        identity = KrausSet(ops=(np.eye(2, dtype=complex),))
        value, _ = obj.evaluate(obj.layout.encode(identity))
        assert value == pytest.approx(0.0, abs=1e-28)

    def test_gradient_matches_finite_differences(self):
        _, series = make_series(seed=3, steps=10)
        fd_check(kraus_objective(series, ell=4, mu=10.0), points=30, seed=11)

    def test_single_step_matches_full(self):
        _, series = make_series(seed=4, steps=1)
        full = kraus_objective(series, ell=2, mu=7.0)
        single = kraus_single_step_objective(series.states[0], series.states[1], ell=2, mu=7.0)
        rng = np.random.default_rng(5)
        for _ in range(10):
            v = rng.standard_normal(full.layout.size)
            vf, gf = full.evaluate(v)
            vs, gs = single.evaluate(v)
            assert vf == pytest.approx(vs, rel=1e-14)
            np.testing.assert_allclose(gf, gs, rtol=1e-13, atol=1e-16)

    def test_single_step_gradient(self):
        _, series = make_series(seed=6, steps=1)
        fd_check(
            kraus_single_step_objective(series.states[0], series.states[1], ell=2, mu=10.0),
            points=20,
            seed=12,
        )

    def test_unitary_mixing_gauge_invariance(self):
        # E_k -> sum_m U_km E_m leaves both data and penalty terms unchanged
        _, series = make_series(seed=7, steps=6)
        ell = 2
        obj = kraus_objective(series, ell=ell, mu=10.0)
        rng = np.random.default_rng(13)
        layout = obj.layout
        for _ in range(10):
            v = rng.standard_normal(layout.size)
            ops = layout.decode_raw(v)
            g = rng.standard_normal((ell, ell)) + 1j * rng.standard_normal((ell, ell))
            u, _ = np.linalg.qr(g)
            mixed = [sum(u[k, m] * ops[m] for m in range(ell)) for k in range(ell)]
            v_mixed = np.concatenate(
                [np.concatenate([e.real.ravel(), e.imag.ravel()]) for e in mixed]
            )
            assert obj.evaluate(v)[0] == pytest.approx(obj.evaluate(v_mixed)[0], abs=1e-10)

    def test_rejects_bad_arguments(self):
        _, series = make_series(seed=8, steps=3)
        with pytest.raises(ValueError):
            kraus_objective(series, ell=0)
        with pytest.raises(ValueError):
            kraus_objective(series, ell=1, mu=0.0)

    def test_descriptor(self):
        _, series = make_series(seed=9, steps=4)
        obj = kraus_objective(series, ell=3, mu=2.0)
        assert obj.descriptor["method"] == "kraus"
        assert obj.descriptor["num_transitions"] == 4
        assert obj.descriptor["penalty_weight"] == 2.0


class TestPadeObjective:
    def test_zero_model_on_constant_series(self):
        rho = random_density_matrix(2, np.random.default_rng(0))
        series = TimeSeries(dt=0.1, states=np.stack([rho] * 6))
        obj = pade_objective(series, ell=1)
        value, _ = obj.evaluate(np.zeros(obj.layout.size))
        assert value == pytest.approx(0.0, abs=1e-28)

    def test_gradient_matches_finite_differences(self):
        _, series = make_series(seed=10, steps=10)
        fd_check(pade_objective(series, ell=1), points=30, seed=14)

    def test_residual_order_dt_cubed(self):
        # per-step residual at the true model scales as dt^3: halving dt
        # shrinks each squared term by ~2^6 = 64
        model, _ = make_series(seed=15)
        rho0 = random_density_matrix(2, np.random.default_rng(16))

        def max_sq_term(dt):
            series = propagate_lindblad(model, rho0, dt, 20)
            terms = []
            for i in range(1, 21):
                sigma = (series.states[i] + series.states[i - 1]) / 2
                resid = (
                    series.states[i]
                    - series.states[i - 1]
                    - dt * lindbladian_apply(model, sigma)
                )
                terms.append(frobenius_norm(resid) ** 2)
            return max(terms)

        ratio = max_sq_term(0.1) / max_sq_term(0.05)
        assert 0.75 * 64 <= ratio <= 1.25 * 64

    def test_value_at_true_model_small(self):
        model, series = make_series(seed=17, dt=0.05, steps=20)
        obj = pade_objective(series, ell=1)
        at_true = obj.evaluate(obj.layout.encode(model))[0]
        at_zero = obj.evaluate(np.zeros(obj.layout.size))[0]
        assert at_true < 1e-7
        assert at_true < 1e-4 * at_zero

    def test_scale_covariance_of_dissipator(self):
        # scaling all jump parameters by s scales the dissipator by s^2
        rng = np.random.default_rng(18)
        model = random_model(2, 1, rng)
        rho = random_density_matrix(2, rng)
        h0 = np.zeros((2, 2), dtype=complex)
        for s in (0.5, 2.0, 3.0):
            scaled = LindbladModel(h=h0, jumps=tuple(s * a for a in model.jumps))
            base = LindbladModel(h=h0, jumps=model.jumps)
            np.testing.assert_allclose(
                lindbladian_apply(scaled, rho),
                s**2 * lindbladian_apply(base, rho),
                atol=1e-13,
            )


class TestCumulativeIntegral:
    def _poly_series(self, coeffs, dt=0.1, steps=12):
        """Entrywise polynomial trajectory sum_k coeffs[k] t^k (test fixture)."""
        times = dt * np.arange(steps + 1)
        states = np.zeros((steps + 1, 2, 2), dtype=complex)
        for k, c in enumerate(coeffs):
            states += c[None, :, :] * (times**k)[:, None, None]
        return TimeSeries(dt=dt, states=states)

    def test_constant_exact_both_rules(self):
        rho = random_density_matrix(2, np.random.default_rng(0))
        series = self._poly_series([rho], steps=9)
        for rule in ("trapezoid", "simpson"):
            s = cumulative_integral(series, rule)
            for i in range(1, 10):
                np.testing.assert_allclose(s[i - 1], i * 0.1 * rho, atol=1e-14)

    def test_linear_exact_trapezoid(self):
        rng = np.random.default_rng(1)
        c0 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        c1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        series = self._poly_series([c0, c1])
        s = cumulative_integral(series, "trapezoid")
        for i in range(1, 13):
            t = 0.1 * i
            np.testing.assert_allclose(s[i - 1], c0 * t + c1 * t**2 / 2, atol=1e-14)

    def test_quadratic_exact_simpson_even(self):
        # symbolic antiderivative oracle: integral of sum c_k t^k
        rng = np.random.default_rng(2)
        coeffs = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3)]
        series = self._poly_series(coeffs)
        s = cumulative_integral(series, "simpson")
        for i in range(2, 13, 2):
            t = 0.1 * i
            exact = coeffs[0] * t + coeffs[1] * t**2 / 2 + coeffs[2] * t**3 / 3
            np.testing.assert_allclose(s[i - 1], exact, atol=1e-13)

    def test_simpson_needs_two_transitions(self):
        rho = random_density_matrix(2, np.random.default_rng(3))
        series = TimeSeries(dt=0.1, states=np.stack([rho] * 2))
        with pytest.raises(ValueError):
            cumulative_integral(series, "simpson")

    def test_unknown_rule(self):
        _, series = make_series(seed=4, steps=4)
        with pytest.raises(ValueError):
            cumulative_integral(series, "midpoint")

    def test_quadrature_order_against_exact_integral(self):
        # exact integral of the propagated trajectory via the augmented
        # superoperator exponential exp([[L, I], [0, 0]] t)
        from oqsid.dynamics import lindbladian_superoperator
        from oqsid.linalg import vectorize

        model, _ = make_series(seed=19)
        rho0 = random_density_matrix(2, np.random.default_rng(20))
        lmat = lindbladian_superoperator(model)
        d = lmat.shape[0]

        def exact_integral(t):
            aug = np.zeros((2 * d, 2 * d), dtype=complex)
            aug[:d, :d] = lmat
            aug[:d, d:] = np.eye(d)
            block = matrix_exp(t * aug)[:d, d:]
            return (block @ vectorize(rho0)).reshape((2, 2), order="F")

        def error(rule, dt, steps):
            series = propagate_lindblad(model, rho0, dt, steps)
            s = cumulative_integral(series, rule)
            return frobenius_norm(s[-1] - exact_integral(dt * steps))

        # fixed final time 1.6, halving dt
        r_trap = error("trapezoid", 0.2, 8) / error("trapezoid", 0.1, 16)
        r_simp = error("simpson", 0.2, 8) / error("simpson", 0.1, 16)
        assert 0.75 * 4 <= r_trap <= 1.25 * 4
        assert 0.75 * 16 <= r_simp <= 1.25 * 16


class TestIntegralObjective:
    def test_zero_model_on_constant_series(self):
        rho = random_density_matrix(2, np.random.default_rng(0))
        series = TimeSeries(dt=0.1, states=np.stack([rho] * 7))
        for rule in ("trapezoid", "simpson"):
            obj = integral_objective(series, ell=1, rule=rule)
            value, _ = obj.evaluate(np.zeros(obj.layout.size))
            assert value == pytest.approx(0.0, abs=1e-28)

    def test_gradient_matches_finite_differences(self):
        _, series = make_series(seed=21, steps=10)
        fd_check(integral_objective(series, ell=1, rule="trapezoid"), points=30, seed=22)
        fd_check(integral_objective(series, ell=1, rule="simpson"), points=30, seed=23)

    def test_simpson_beats_trapezoid_at_true_model(self):
        gamma = 0.3
        model = dephasing_model(gamma)
        rho0 = np.array([[0.6, 0.25 + 0.1j], [0.25 - 0.1j, 0.4]])
        series = propagate_lindblad(model, rho0, 0.05, 20)
        v = ParameterLayout(kind="lindblad", n=2, ell=1).encode(model)
        simpson = integral_objective(series, ell=1, rule="simpson").evaluate(v)[0]
        trapezoid = integral_objective(series, ell=1, rule="trapezoid").evaluate(v)[0]
        assert simpson < trapezoid

    def test_objective_nonnegative(self):
        _, series = make_series(seed=24, steps=8)
        obj = integral_objective(series, ell=1, rule="simpson")
        rng = np.random.default_rng(25)
        for _ in range(20):
            v = rng.standard_normal(obj.layout.size)
            assert obj.evaluate(v)[0] >= 0.0

    def test_objective_function_helpers(self):
        _, series = make_series(seed=26, steps=5)
        obj = pade_objective(series, ell=1)
        v = np.random.default_rng(27).standard_normal(obj.layout.size)
        value, grad = obj.evaluate(v)
        assert obj.value(v) == value
        np.testing.assert_array_equal(obj.gradient(v), grad)
        assert isinstance(obj, ObjectiveFunction)
