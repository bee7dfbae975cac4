"""Order-constrained Bregman projection via pool-adjacent-violators.

The solver minimizes ``D(z || inv_grad_phi(theta))`` over all ``z`` that are
nondecreasing along a constraint ordering. For every supported family the
blockwise minimizer pools in the natural-parameter (dual) space: a pooled
block takes the value ``inv_grad_phi(mean of the block's thetas)``. Since the
inverse link is strictly increasing, the block partition itself is exactly
the one produced by least-squares PAV on the thetas, so a single linear-time
PAV pass on the dual variables solves all families at once.

Constraint orderings may be partial: indices inside a tie-block are first
sorted by ascending natural parameter (deterministic index tie-break), which
picks the best refinement of the partial order before the chain PAV runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import bregman
from .bregman import DivergenceSpec
from .errors import DegenerateInputError

#: Exp-link margin enforcement maps the vector onto
#: [fraction * eps, (1 + fraction) * eps], which fixes both the primal range
#: (exactly eps) and the spread of the natural parameters (log(1 + 1/frac)).
#: Too small a fraction starves the low end of the vector of curvature
#: weight in the downstream GLM fit.
_POSITIVE_FLOOR_FRACTION = 0.1


@dataclass(frozen=True)
class Ordering:
    """A ranking over item indices as an ordered sequence of tie-blocks.

    Earlier blocks rank lower (smaller score). A total order has all
    singleton blocks. Blocks partition ``range(n)``.
    """

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for block in self.blocks:
            if not block:
                raise ValueError("ordering blocks must be nonempty")
            seen.update(block)
        n = sum(len(b) for b in self.blocks)
        if seen != set(range(n)):
            raise ValueError("ordering blocks must partition range(n)")

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]]) -> "Ordering":
        return cls(tuple(tuple(sorted(int(i) for i in b)) for b in blocks))

    @classmethod
    def from_scores(cls, scores) -> "Ordering":
        """Group exactly equal scores into tie-blocks, ascending by value."""
        values = np.asarray(scores, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("scores must be a nonempty vector")
        order = np.argsort(values, kind="stable")
        blocks: list[tuple[int, ...]] = []
        current = [int(order[0])]
        for idx in order[1:]:
            idx = int(idx)
            if values[idx] == values[current[-1]]:
                current.append(idx)
            else:
                blocks.append(tuple(sorted(current)))
                current = [idx]
        blocks.append(tuple(sorted(current)))
        return cls(tuple(blocks))

    @classmethod
    def total_from_permutation(cls, permutation) -> "Ordering":
        """Total order whose i-th ranked (lowest) item is ``permutation[i]``."""
        return cls(tuple((int(i),) for i in permutation))

    @property
    def n_items(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def is_total(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def rank_vector(self) -> np.ndarray:
        """Block position per item index (0 = lowest ranked)."""
        ranks = np.empty(self.n_items, dtype=float)
        for pos, block in enumerate(self.blocks):
            for i in block:
                ranks[i] = pos
        return ranks

    def coarsens(self, other: "Ordering") -> bool:
        """True if every block of ``self`` is a union of consecutive blocks of ``other``."""
        own = self.rank_vector()
        their = other.rank_vector()
        # self coarsens other iff other's ranks never decrease when self's increase
        order = np.lexsort((their, own))
        return bool(np.all(np.diff(their[order]) >= 0))


@dataclass(frozen=True)
class IsotonicSolution:
    """Result of an order-constrained projection.

    ``fitted`` is nondecreasing along the constraint ordering;
    ``induced_order`` records the tie-blocks created by pooling (a coarsening
    of the refined constraint); ``refined_order`` is the total order the chain
    PAV actually ran over (constraint blocks refined by ascending theta).
    """

    spec: DivergenceSpec
    natural_params: np.ndarray
    fitted: np.ndarray
    induced_order: Ordering
    objective: float
    refined_order: tuple[int, ...]
    constraint_block_count: int


def _pav_mean(values: list[float]) -> tuple[list[float], list[int]]:
    """Least-squares PAV with uniform weights on a chain.

    Returns (block means, block lengths) for maximal nondecreasing blocks.
    """
    n = len(values)
    means: list[float] = []
    counts: list[int] = []
    for i in range(n):
        means.append(values[i])
        counts.append(1)
        while len(means) > 1 and means[-2] >= means[-1]:
            m1 = means.pop()
            c1 = counts.pop()
            c0 = counts[-1]
            total = c0 + c1
            means[-1] += (m1 - means[-1]) * (c1 / total)
            counts[-1] = total
    return means, counts


def pav_fit(spec: DivergenceSpec, natural_params, constraint: Ordering) -> IsotonicSolution:
    """Project onto the isotonic cone of ``constraint`` in the Bregman sense.

    Minimizes ``D(z || inv_grad_phi(natural_params))`` subject to ``z``
    nondecreasing along the constraint's block sequence; values inside a
    tie-block are unconstrained relative to each other, and the solver picks
    the within-block refinement sorted by ascending natural parameter.
    """
    theta = np.asarray(natural_params, dtype=float)
    if theta.ndim != 1:
        raise ValueError("natural_params must be a vector")
    n = theta.size
    if constraint.n_items != n:
        raise ValueError(
            f"constraint covers {constraint.n_items} items, expected {n}"
        )

    # Refine: within each tie-block, ascending theta, index tie-break.
    if constraint.is_total:
        refined = [b[0] for b in constraint.blocks]
    else:
        refined = []
        for block in constraint.blocks:
            if len(block) == 1:
                refined.append(block[0])
            else:
                idx = np.fromiter(block, dtype=np.intp)
                refined.extend(idx[np.lexsort((idx, theta[idx]))].tolist())

    means, counts = _pav_mean(theta[refined].tolist())

    fitted = np.empty(n)
    block_members: list[list[int]] = []
    pos = 0
    for mean, count in zip(means, counts):
        members = refined[pos : pos + count]
        value = float(bregman.inv_grad_phi(spec, [mean])[0])
        for i in members:
            fitted[i] = value
        # merge adjacent blocks that landed on exactly equal values
        if block_members and fitted[block_members[-1][0]] == value:
            block_members[-1].extend(members)
        else:
            block_members.append(list(members))
        pos += count

    induced = Ordering.from_blocks(block_members)
    mu = bregman.inv_grad_phi(spec, theta)
    objective = bregman.divergence(spec, fitted, mu)
    return IsotonicSolution(
        spec=spec,
        natural_params=theta,
        fitted=fitted,
        induced_order=induced,
        objective=objective,
        refined_order=tuple(refined),
        constraint_block_count=len(constraint.blocks),
    )


def enforce_range_margin(sol: IsotonicSolution, epsilon: float) -> IsotonicSolution:
    """Stretch the fitted vector so its range is at least ``epsilon``.

    Returns the input unchanged when the margin already holds. Otherwise the
    vector is mapped affinely onto a window of range exactly ``epsilon``,
    which preserves the induced ordering: real-domain families rescale about
    the midpoint, exp-link families rescale in natural-parameter space (a
    power law of the values, so positivity and GLM-realizability survive).
    A fully pooled (constant) vector is instead split at the extreme
    positions of the refined order.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    fitted = sol.fitted
    lo = float(fitted.min())
    hi = float(fitted.max())
    span = hi - lo
    if span >= epsilon:
        return sol

    if sol.constraint_block_count <= 1 and len(sol.refined_order) > 1:
        raise DegenerateInputError(
            "range margin is undefined over a single-block constraint ordering"
        )

    n = fitted.size
    if n < 2:
        raise DegenerateInputError("range margin needs at least two items")

    exp_link = sol.spec.has_exp_link
    target_lo = _POSITIVE_FLOOR_FRACTION * epsilon
    target_hi = (1.0 + _POSITIVE_FLOOR_FRACTION) * epsilon

    if span > 0.0:
        if exp_link:
            theta = np.log(fitted)
            t_lo, t_hi = float(theta.min()), float(theta.max())
            scaled = (theta - t_lo) / (t_hi - t_lo)
            adjusted = np.exp(
                np.log(target_lo) + scaled * (np.log(target_hi) - np.log(target_lo))
            )
        else:
            mid = 0.5 * (hi + lo)
            adjusted = mid + (fitted - mid) * (epsilon / span)
        blocks = sol.induced_order
    else:
        # Constant vector: split only the extremes of the refined order.
        low_idx = sol.refined_order[0]
        high_idx = sol.refined_order[-1]
        if exp_link:
            adjusted = np.full(n, np.sqrt(target_lo * target_hi))
            adjusted[low_idx] = target_lo
            adjusted[high_idx] = target_hi
        else:
            adjusted = fitted.copy()
            adjusted[low_idx] = lo - 0.5 * epsilon
            adjusted[high_idx] = lo + 0.5 * epsilon
        middle = [i for i in sol.refined_order if i != low_idx and i != high_idx]
        new_blocks = [[low_idx]] + ([middle] if middle else []) + [[high_idx]]
        blocks = Ordering.from_blocks(new_blocks)

    mu = bregman.inv_grad_phi(sol.spec, sol.natural_params)
    objective = bregman.divergence(sol.spec, adjusted, mu)
    return IsotonicSolution(
        spec=sol.spec,
        natural_params=sol.natural_params,
        fitted=adjusted,
        induced_order=blocks,
        objective=objective,
        refined_order=sol.refined_order,
        constraint_block_count=sol.constraint_block_count,
    )
