import numpy as np
import pytest

from rankagg.errors import UndefinedMetricError
from rankagg.metrics import kendall_tau, mean_ndcg_at_k, midranks, ndcg_at_k, spearman_rho


def tau_brute(a, b):
    """Exhaustive pair counting, tie-corrected."""
    c = d = ta = tb = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            sa = np.sign(a[i] - a[j])
            sb = np.sign(b[i] - b[j])
            if sa != 0 and sb != 0:
                if sa == sb:
                    c += 1
                else:
                    d += 1
            elif sa == 0 and sb != 0:
                ta += 1
            elif sb == 0 and sa != 0:
                tb += 1
    return (c - d) / np.sqrt((c + d + ta) * (c + d + tb))


def rho_brute(a, b):
    """Pearson correlation of mid-ranks, computed directly."""
    ra = midranks(a)
    rb = midranks(b)
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    return float(ra @ rb / np.sqrt((ra @ ra) * (rb @ rb)))


class TestKendall:
    def test_identical(self):
        assert kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0

    def test_reversal(self):
        assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0

    def test_single_swap(self):
        assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2.0 / 3.0)

    def test_all_constant_undefined(self):
        with pytest.raises(UndefinedMetricError):
            kendall_tau([1.0, 1.0, 1.0], [1, 2, 3])

    def test_tie_consistent_refinement_scores_one(self):
        # tied predictions against a strict truth they refine consistently
        assert kendall_tau([1.0, 1.0, 2.0], [1.0, 1.0, 5.0]) == 1.0


class TestSpearman:
    def test_identical(self):
        assert spearman_rho([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_reversal(self):
        assert spearman_rho([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_paired_swaps(self):
        assert spearman_rho([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)

    def test_zero_variance_undefined(self):
        with pytest.raises(UndefinedMetricError):
            spearman_rho([2.0, 2.0], [1.0, 3.0])


class TestNdcg:
    def test_perfect_ranking(self):
        rel = np.array([3, 2, 1, 0])
        scores = np.array([9.0, 5.0, 2.0, 1.0])
        for k in range(1, 5):
            assert ndcg_at_k(scores, rel, k) == 1.0

    def test_worst_order_two_items(self):
        value = ndcg_at_k([0.0, 1.0], [2, 0], 2)
        expected = (3.0 / np.log2(3.0)) / 3.0
        assert value == pytest.approx(expected)
        assert value == pytest.approx(0.6309, abs=1e-4)

    def test_all_zero_relevance_returns_zero(self):
        assert ndcg_at_k([1.0, 2.0], [0, 0], 2) == 0.0

    def test_negative_relevance_rejected(self):
        with pytest.raises(ValueError):
            ndcg_at_k([1.0, 2.0], [1, -1], 2)

    def test_k_range_enforced(self):
        with pytest.raises(ValueError):
            ndcg_at_k([1.0, 2.0], [1, 0], 3)

    def test_not_symmetric(self):
        a = np.array([1.0, 2.0, 3.0])
        rel = np.array([2, 1, 0])
        assert ndcg_at_k(a, rel, 3) != ndcg_at_k(rel.astype(float), np.array([1, 2, 3]), 3)


class TestOracles:
    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 8))
            a = rng.integers(0, 4, size=n).astype(float)
            b = rng.normal(size=n)
            if np.all(a == a[0]):
                a[0] += 1.0
            assert kendall_tau(a, b) == pytest.approx(tau_brute(a, b), abs=1e-12)
            assert spearman_rho(a, b) == pytest.approx(rho_brute(a, b), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=9)
        b = rng.normal(size=9)
        assert kendall_tau(a, b) == pytest.approx(kendall_tau(b, a), abs=1e-15)
        assert spearman_rho(a, b) == pytest.approx(spearman_rho(b, a), abs=1e-15)

    def test_invariance_to_monotone_transform(self):
        rng = np.random.default_rng(2)
        scores = rng.normal(size=12)
        rel = rng.integers(0, 3, size=12)
        other = rng.normal(size=12)
        transformed = np.exp(2.0 * scores) + 5.0
        assert kendall_tau(scores, other) == pytest.approx(
            kendall_tau(transformed, other), abs=1e-15
        )
        assert spearman_rho(scores, other) == pytest.approx(
            spearman_rho(transformed, other), abs=1e-15
        )
        for k in (1, 5, 12):
            assert ndcg_at_k(scores, rel, k) == ndcg_at_k(transformed, rel, k)


class TestMeanNdcg:
    def test_skips_zero_ideal_queries(self):
        queries = [
            (np.array([1.0, 2.0]), np.array([0, 1])),
            (np.array([1.0, 2.0]), np.array([0, 0])),
        ]
        result = mean_ndcg_at_k(queries, 2)
        assert result.used == 1
        assert result.skipped == 1

    def test_all_skipped_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            mean_ndcg_at_k([(np.array([1.0, 2.0]), np.array([0, 0]))], 1)
