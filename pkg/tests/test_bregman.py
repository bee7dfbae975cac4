import numpy as np
import pytest

from rankagg.bregman import (
    GENERALIZED_I,
    KL,
    SQUARED_EUCLIDEAN,
    DivergenceSpec,
    Family,
    divergence,
    grad_phi,
    inv_grad_phi,
    phi,
)
from rankagg.errors import DomainError, NaturalParamOverflowError

ALL_SPECS = (SQUARED_EUCLIDEAN, KL, GENERALIZED_I)


def random_in_domain(spec, rng, n):
    if spec.family is Family.SQUARED_EUCLIDEAN:
        return rng.normal(size=n)
    if spec.family is Family.KL:
        raw = rng.uniform(0.05, 1.0, size=n)
        return raw / raw.sum()
    return rng.uniform(0.05, 5.0, size=n)


class TestPhi:
    def test_squared_euclidean(self):
        assert phi(SQUARED_EUCLIDEAN, [3.0, 4.0]) == pytest.approx(12.5)

    def test_kl_uniform(self):
        # direct evaluation of sum x log x on [0.5, 0.5]
        assert phi(KL, [0.5, 0.5]) == pytest.approx(-np.log(2.0), abs=1e-12)

    def test_generalized_i(self):
        assert phi(GENERALIZED_I, [1.0, 1.0]) == pytest.approx(-2.0)

    def test_domain_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            phi(GENERALIZED_I, [1.0, 0.0])
        with pytest.raises(DomainError):
            phi(KL, [0.5, -0.5])

    def test_kl_rejects_off_simplex(self):
        with pytest.raises(DomainError):
            phi(KL, [0.4, 0.4])


class TestLinks:
    def test_grad_identity(self):
        np.testing.assert_allclose(grad_phi(SQUARED_EUCLIDEAN, [2.0, -1.0]), [2.0, -1.0])

    def test_grad_gi_is_log(self):
        np.testing.assert_allclose(grad_phi(GENERALIZED_I, [1.0, np.e]), [0.0, 1.0])

    def test_grad_kl(self):
        np.testing.assert_allclose(grad_phi(KL, [1.0]), [1.0])

    def test_inv_identity(self):
        np.testing.assert_allclose(inv_grad_phi(SQUARED_EUCLIDEAN, [5.0]), [5.0])

    def test_inv_gi_exp(self):
        np.testing.assert_allclose(inv_grad_phi(GENERALIZED_I, [0.0]), [1.0])
        np.testing.assert_allclose(
            inv_grad_phi(GENERALIZED_I, [1.0, 2.0]), [np.e, np.e**2]
        )

    def test_cap_raises(self):
        with pytest.raises(NaturalParamOverflowError):
            inv_grad_phi(GENERALIZED_I, [51.0])
        # identity link never overflows
        np.testing.assert_allclose(inv_grad_phi(SQUARED_EUCLIDEAN, [1e6]), [1e6])

    def test_cap_configurable(self):
        spec = DivergenceSpec(Family.GENERALIZED_I, natural_param_cap=100.0)
        assert inv_grad_phi(spec, [60.0])[0] == pytest.approx(np.exp(60.0))

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(0)
        for spec in ALL_SPECS:
            for _ in range(200):
                x = random_in_domain(spec, rng, 6)
                back = inv_grad_phi(spec, grad_phi(spec, x))
                np.testing.assert_allclose(back, x, rtol=1e-12)


class TestDivergence:
    def test_identity_case(self):
        assert divergence(SQUARED_EUCLIDEAN, [1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_half_squared_distance(self):
        assert divergence(SQUARED_EUCLIDEAN, [3.0, 0.0], [1.0, 1.0]) == pytest.approx(2.5)

    def test_gi_closed_form(self):
        expected = 2.0 * np.log(2.0) - 1.0
        assert divergence(GENERALIZED_I, [2.0, 1.0], [1.0, 1.0]) == pytest.approx(expected)

    def test_nonnegativity_and_identity_of_indiscernibles(self):
        rng = np.random.default_rng(1)
        for spec in ALL_SPECS:
            for _ in range(10_000 // 3):
                y = random_in_domain(spec, rng, 5)
                x = random_in_domain(spec, rng, 5)
                d = divergence(spec, y, x)
                assert d >= 0.0
                if np.array_equal(y, x):
                    assert d <= 1e-10
            same = random_in_domain(spec, rng, 5)
            assert divergence(spec, same, same) <= 1e-10

    def test_matches_generic_definition(self):
        # closed form vs phi(y) - phi(x) - <grad phi(x), y - x>
        rng = np.random.default_rng(2)
        for spec in ALL_SPECS:
            for _ in range(300):
                y = random_in_domain(spec, rng, 5)
                x = random_in_domain(spec, rng, 5)
                generic = phi(spec, y) - phi(spec, x) - float(
                    grad_phi(spec, x) @ (y - x)
                )
                closed = divergence(spec, y, x)
                assert closed == pytest.approx(generic, rel=1e-9, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        # FD oracle evaluates the raw generator formulas so KL can be
        # perturbed off the simplex flat
        def raw_phi(spec, x):
            if spec.family is Family.SQUARED_EUCLIDEAN:
                return 0.5 * float(x @ x)
            if spec.family is Family.KL:
                return float(np.sum(x * np.log(x)))
            return float(np.sum(x * np.log(x) - x))

        rng = np.random.default_rng(3)
        h = 1e-6
        for spec in ALL_SPECS:
            for _ in range(50):
                x = random_in_domain(spec, rng, 4)
                grad = grad_phi(spec, x)
                for k in range(x.size):
                    up = x.copy()
                    dn = x.copy()
                    up[k] += h
                    dn[k] -= h
                    fd = (raw_phi(spec, up) - raw_phi(spec, dn)) / (2 * h)
                    assert grad[k] == pytest.approx(fd, rel=1e-6, abs=1e-8)


class TestSpec:
    def test_aliases(self):
        assert DivergenceSpec.from_name("gaussian").family is Family.SQUARED_EUCLIDEAN
        assert DivergenceSpec.from_name("poisson").family is Family.GENERALIZED_I
        assert DivergenceSpec.from_name("KL").family is Family.KL
        with pytest.raises(ValueError):
            DivergenceSpec.from_name("cauchy")

    def test_domains(self):
        assert SQUARED_EUCLIDEAN.domain == "all reals"
        assert KL.domain == "probability simplex"
        assert GENERALIZED_I.domain == "strictly positive orthant"
