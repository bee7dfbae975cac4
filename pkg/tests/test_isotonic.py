import time
from itertools import permutations

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from rankagg.bregman import GENERALIZED_I, SQUARED_EUCLIDEAN, divergence
from rankagg.errors import DegenerateInputError
from rankagg.isotonic import Ordering, enforce_range_margin, pav_fit


def total_order(n):
    return Ordering.from_blocks([[i] for i in range(n)])


def l2_isotonic_oracle(values):
    """Max-min formula for least-squares isotonic regression (independent of PAV)."""
    n = len(values)
    fitted = np.empty(n)
    for i in range(n):
        best = -np.inf
        for j in range(i + 1):
            low = min(float(np.mean(values[j : k + 1])) for k in range(i, n))
            best = max(best, low)
        fitted[i] = best
    return fitted


def brute_force_objective(values, constraint):
    """Minimum 0.5 * ||z - values||^2 over every refinement of the constraint."""
    pools = [list(permutations(block)) for block in constraint.blocks]

    def expand(i, acc):
        if i == len(pools):
            yield list(acc)
            return
        for option in pools[i]:
            yield from expand(i + 1, acc + list(option))

    best = np.inf
    for refinement in expand(0, []):
        chain = values[np.asarray(refinement)]
        fitted = l2_isotonic_oracle(chain)
        best = min(best, 0.5 * float(np.sum((fitted - chain) ** 2)))
    return best


def random_partition(rng, n):
    perm = rng.permutation(n)
    n_cuts = int(rng.integers(0, n))
    cuts = sorted(rng.choice(range(1, n), size=min(n_cuts, n - 1), replace=False)) if n > 1 else []
    blocks, start = [], 0
    for cut in list(cuts) + [n]:
        blocks.append(perm[start:cut])
        start = cut
    return Ordering.from_blocks(blocks)


class TestOrdering:
    def test_from_scores_groups_exact_ties(self):
        order = Ordering.from_scores([2.0, 1.0, 2.0, 0.5])
        assert order.blocks == ((3,), (1,), (0, 2))

    def test_partition_validation(self):
        with pytest.raises(ValueError):
            Ordering(((0, 1), (1, 2)))
        with pytest.raises(ValueError):
            Ordering(((0,), (2,)))

    def test_rank_vector(self):
        order = Ordering(((1,), (0, 2)))
        np.testing.assert_array_equal(order.rank_vector(), [1.0, 0.0, 1.0])

    def test_coarsens(self):
        fine = total_order(3)
        coarse = Ordering(((0, 1), (2,)))
        assert coarse.coarsens(fine)
        assert not fine.coarsens(Ordering(((1,), (0,), (2,))))


class TestPavFit:
    def test_already_isotonic(self):
        sol = pav_fit(SQUARED_EUCLIDEAN, [1.0, 2.0, 3.0], total_order(3))
        np.testing.assert_allclose(sol.fitted, [1.0, 2.0, 3.0])
        assert sol.objective == pytest.approx(0.0, abs=1e-15)
        assert sol.induced_order.is_total

    def test_pools_violation(self):
        # brute-force projection of [3,1,2] onto the increasing cone is [2,2,2]
        sol = pav_fit(SQUARED_EUCLIDEAN, [3.0, 1.0, 2.0], total_order(3))
        np.testing.assert_allclose(sol.fitted, [2.0, 2.0, 2.0])
        assert sol.objective == pytest.approx(1.0)
        assert len(sol.induced_order.blocks) == 1

    def test_gi_pools_in_dual_space(self):
        # 1-D oracle: minimize GI(c||4) + GI(c||1) over c; the minimizer is
        # exp(mean(log 4, log 1)) = 2, certifying the dual-mean pooling rule
        oracle = minimize_scalar(
            lambda c: divergence(GENERALIZED_I, [c, c], [4.0, 1.0]),
            bounds=(0.1, 10.0),
            method="bounded",
        )
        assert oracle.x == pytest.approx(2.0, rel=1e-5)
        sol = pav_fit(GENERALIZED_I, [np.log(4.0), 0.0], total_order(2))
        np.testing.assert_allclose(sol.fitted, [2.0, 2.0], rtol=1e-12)
        assert sol.objective == pytest.approx(oracle.fun, rel=1e-6)

    def test_oracle_equivalence_small_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            theta = rng.normal(size=n)
            constraint = random_partition(rng, n)
            sol = pav_fit(SQUARED_EUCLIDEAN, theta, constraint)
            assert sol.objective == pytest.approx(
                brute_force_objective(theta, constraint), abs=1e-6
            )

    def test_pooled_blocks_are_stationary(self):
        rng = np.random.default_rng(8)
        for spec in (SQUARED_EUCLIDEAN, GENERALIZED_I):
            for _ in range(30):
                n = 12
                theta = rng.normal(size=n) * 0.8
                sol = pav_fit(spec, theta, total_order(n))
                mu = np.exp(theta) if spec is GENERALIZED_I else theta
                base = divergence(spec, sol.fitted, mu)
                for block in sol.induced_order.blocks:
                    for delta in (1e-3, -1e-3):
                        bumped = sol.fitted.copy()
                        for i in block:
                            bumped[i] += delta
                        if spec is GENERALIZED_I and np.any(bumped <= 0):
                            continue
                        assert divergence(spec, bumped, mu) >= base - 1e-12

    def test_output_nondecreasing_along_constraint(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.integers(2, 30))
            theta = rng.normal(size=n)
            constraint = random_partition(rng, n)
            sol = pav_fit(SQUARED_EUCLIDEAN, theta, constraint)
            previous_max = -np.inf
            for block in constraint.blocks:
                values = sol.fitted[np.asarray(block)]
                assert values.min() >= previous_max
                previous_max = max(previous_max, values.max())

    def test_induced_coarsens_refined_constraint(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            n = int(rng.integers(2, 20))
            theta = rng.normal(size=n)
            constraint = random_partition(rng, n)
            sol = pav_fit(SQUARED_EUCLIDEAN, theta, constraint)
            assert len(sol.induced_order.blocks) <= n
            refined = Ordering.total_from_permutation(sol.refined_order)
            assert sol.induced_order.coarsens(refined)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pav_fit(SQUARED_EUCLIDEAN, [1.0, 2.0], total_order(3))

    def test_linear_time_performance(self):
        rng = np.random.default_rng(11)
        theta = rng.normal(size=100_000)
        constraint = total_order(theta.size)
        best = np.inf
        for _ in range(3):
            start = time.perf_counter()
            pav_fit(SQUARED_EUCLIDEAN, theta, constraint)
            best = min(best, time.perf_counter() - start)
        assert best < 0.1, f"PAV took {best * 1000:.1f} ms on n=1e5"


class TestRangeMargin:
    def _solve(self, theta, spec=SQUARED_EUCLIDEAN):
        return pav_fit(spec, np.asarray(theta, dtype=float), total_order(len(theta)))

    def test_satisfied_margin_unchanged(self):
        sol = self._solve([0.0, 1.0, 2.0])
        assert enforce_range_margin(sol, 0.5) is sol

    def test_constant_vector_splits_extremes(self):
        sol = self._solve([1.0, 1.0, 1.0])
        adjusted = enforce_range_margin(sol, 1.0)
        assert adjusted.fitted.max() - adjusted.fitted.min() == pytest.approx(1.0)
        # extremes split off, middle untouched
        assert len(adjusted.induced_order.blocks) == 3
        assert adjusted.fitted[1] == pytest.approx(1.0)

    def test_rescale_preserves_order(self):
        sol = self._solve([0.0, 0.1])
        adjusted = enforce_range_margin(sol, 1.0)
        assert adjusted.fitted.max() - adjusted.fitted.min() == pytest.approx(1.0)
        assert adjusted.fitted[0] < adjusted.fitted[1]
        assert adjusted.induced_order == sol.induced_order

    def test_exp_link_margin_stays_positive(self):
        sol = self._solve([0.0, 0.01], spec=GENERALIZED_I)
        adjusted = enforce_range_margin(sol, 5.0)
        assert np.all(adjusted.fitted > 0)
        assert adjusted.fitted.max() - adjusted.fitted.min() == pytest.approx(5.0)
        assert adjusted.fitted[0] < adjusted.fitted[1]

    def test_single_block_constraint_degenerate(self):
        sol = pav_fit(SQUARED_EUCLIDEAN, [0.5, 0.5, 0.5], Ordering(((0, 1, 2),)))
        with pytest.raises(DegenerateInputError):
            enforce_range_margin(sol, 1.0)

    def test_positive_epsilon_required(self):
        sol = self._solve([0.0, 1.0])
        with pytest.raises(ValueError):
            enforce_range_margin(sol, 0.0)
