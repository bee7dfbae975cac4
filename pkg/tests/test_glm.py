import numpy as np
import pytest

from rankagg.bregman import GENERALIZED_I, KL, SQUARED_EUCLIDEAN
from rankagg.errors import NaturalParamOverflowError
from rankagg.glm import (
    GlmOptions,
    Regularization,
    fit_glm,
    objective_gradient,
    objective_value,
)

NO_INTERCEPT = GlmOptions(intercept=False)


class TestGaussianFits:
    def test_identity_design_recovers_target(self):
        fit = fit_glm(SQUARED_EUCLIDEAN, np.eye(3), [1.0, 2.0, 3.0], opts=NO_INTERCEPT)
        np.testing.assert_allclose(fit.weights, [1.0, 2.0, 3.0], atol=1e-8)
        assert fit.objective == pytest.approx(0.0, abs=1e-12)
        assert fit.converged

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(40, 5))
        z = rng.normal(size=40)
        fit = fit_glm(SQUARED_EUCLIDEAN, M, z, opts=NO_INTERCEPT)
        expected = np.linalg.solve(M.T @ M, M.T @ z)
        np.testing.assert_allclose(fit.weights, expected, atol=1e-8)

    def test_ridge_matches_closed_form(self):
        rng = np.random.default_rng(1)
        M = rng.normal(size=(30, 4))
        z = rng.normal(size=30)
        lam = 0.7
        fit = fit_glm(SQUARED_EUCLIDEAN, M, z, Regularization.ridge(lam), NO_INTERCEPT)
        expected = np.linalg.solve(M.T @ M + lam * np.eye(4), M.T @ z)
        np.testing.assert_allclose(fit.weights, expected, atol=1e-8)

    def test_intercept_absorbs_translation(self):
        rng = np.random.default_rng(2)
        M = rng.normal(size=(50, 3))
        w = rng.normal(size=3)
        z = M @ w + 10.0
        fit = fit_glm(SQUARED_EUCLIDEAN, M, z)
        np.testing.assert_allclose(fit.weights, w, atol=1e-7)
        assert fit.intercept == pytest.approx(10.0, abs=1e-7)


class TestExponentialFits:
    def test_gi_recovers_planted_model(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(60, 4)) * 0.5
        w0 = rng.normal(size=4) * 0.5
        target = np.exp(M @ w0)
        fit = fit_glm(GENERALIZED_I, M, target, opts=NO_INTERCEPT)
        assert fit.objective < 1e-8
        np.testing.assert_allclose(fit.weights, w0, atol=1e-4)

    def test_kl_fits_simplex_target(self):
        rng = np.random.default_rng(4)
        M = rng.normal(size=(12, 3)) * 0.3
        raw = rng.uniform(0.2, 1.0, size=12)
        target = raw / raw.sum()
        fit = fit_glm(KL, M, target)
        assert fit.converged
        assert fit.objective >= 0.0

    def test_overflow_reported_with_iterate(self):
        # optimum beyond exp(cap): the fit climbs into the cap and must fail loud
        design = np.ones((1, 1))
        with pytest.raises(NaturalParamOverflowError) as info:
            fit_glm(GENERALIZED_I, design, [np.exp(55.0)], opts=NO_INTERCEPT)
        assert info.value.offending is not None


class TestSolverProperties:
    def test_objective_trace_nonincreasing(self):
        rng = np.random.default_rng(5)
        for spec in (SQUARED_EUCLIDEAN, GENERALIZED_I):
            M = rng.normal(size=(25, 4)) * 0.4
            target = np.exp(M @ rng.normal(size=4) * 0.5) if spec is GENERALIZED_I else rng.normal(size=25)
            fit = fit_glm(spec, M, target)
            trace = np.asarray(fit.objective_trace)
            assert np.all(np.diff(trace) <= 1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        h = 1e-6
        for spec in (SQUARED_EUCLIDEAN, GENERALIZED_I, KL):
            for _ in range(20):
                M = rng.normal(size=(10, 3)) * 0.4
                w = rng.normal(size=3) * 0.3
                if spec is KL:
                    raw = rng.uniform(0.2, 1.0, size=10)
                    target = raw / raw.sum()
                elif spec is GENERALIZED_I:
                    target = rng.uniform(0.2, 3.0, size=10)
                else:
                    target = rng.normal(size=10)
                grad = objective_gradient(spec, M, target, w)
                for k in range(3):
                    up, dn = w.copy(), w.copy()
                    up[k] += h
                    dn[k] -= h
                    fd = (
                        objective_value(spec, M, target, up)
                        - objective_value(spec, M, target, dn)
                    ) / (2 * h)
                    scale = max(1.0, abs(fd))
                    assert abs(grad[k] - fd) / scale < 1e-5

    def test_final_objective_independent_of_start(self):
        # separately convex in the weights: all starts land on the same value
        rng = np.random.default_rng(7)
        M = rng.normal(size=(30, 4)) * 0.5
        target = np.exp(M @ rng.normal(size=4) * 0.4) + rng.uniform(0.1, 0.3, size=30)
        finals = []
        for _ in range(10):
            w0 = rng.normal(size=4) * 0.3
            fit = fit_glm(
                GENERALIZED_I,
                M,
                target,
                opts=GlmOptions(init_weights=w0, tol=1e-12, max_iter=500),
            )
            finals.append(fit.objective)
        assert max(finals) - min(finals) < 1e-6

    def test_non_finite_design_rejected(self):
        with pytest.raises(ValueError):
            fit_glm(SQUARED_EUCLIDEAN, [[np.nan]], [1.0])


class TestLasso:
    def test_zeroes_noise_columns(self):
        rng = np.random.default_rng(8)
        n = 80
        signal = rng.normal(size=n)
        noise = rng.normal(size=(n, 4))
        M = np.column_stack([signal, noise])
        target = 3.0 * signal
        fit = fit_glm(
            SQUARED_EUCLIDEAN,
            M,
            target,
            Regularization.lasso(5.0),
            GlmOptions(intercept=False, max_iter=2000, tol=1e-14),
        )
        assert abs(fit.weights[0]) > 1.0
        assert np.all(np.abs(fit.weights[1:]) < 1e-6)

    def test_zero_strength_equals_none(self):
        rng = np.random.default_rng(9)
        M = rng.normal(size=(20, 3))
        z = rng.normal(size=20)
        a = fit_glm(SQUARED_EUCLIDEAN, M, z, Regularization.lasso(0.0),
                    GlmOptions(intercept=False, max_iter=5000, tol=1e-14))
        b = fit_glm(SQUARED_EUCLIDEAN, M, z, opts=NO_INTERCEPT)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-5)

    def test_negative_strength_rejected(self):
        with pytest.raises(ValueError):
            Regularization.lasso(-1.0)
