"""Rank-quality metrics: Kendall tau-b, Spearman rho, and NDCG@K.

Tau uses the tie-corrected (tau-b) form: retargeted score vectors carry tie
blocks, and only the tie-corrected statistic can reach 1.0 against a strict
ground-truth ordering that the ties refine consistently.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import UndefinedMetricError


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.ndim != 1 or bv.ndim != 1:
        raise ValueError("inputs must be vectors")
    if av.size != bv.size:
        raise ValueError(f"length mismatch: {av.size} vs {bv.size}")
    if av.size < 2:
        raise ValueError("metrics need at least two items")
    return av, bv


def kendall_tau(a, b) -> float:
    """Tie-corrected Kendall correlation between two score vectors."""
    av, bv = _pair(a, b)
    iu = np.triu_indices(av.size, k=1)
    sa = np.sign(av[:, None] - av[None, :])[iu]
    sb = np.sign(bv[:, None] - bv[None, :])[iu]
    prod = sa * sb
    concordant = int(np.count_nonzero(prod > 0))
    discordant = int(np.count_nonzero(prod < 0))
    ties_a_only = int(np.count_nonzero((sa == 0) & (sb != 0)))
    ties_b_only = int(np.count_nonzero((sb == 0) & (sa != 0)))
    strict = concordant + discordant
    denom = np.sqrt(float(strict + ties_a_only) * float(strict + ties_b_only))
    if denom == 0.0:
        raise UndefinedMetricError("tau is undefined: a side has no ordered pairs")
    return (concordant - discordant) / denom


def midranks(values) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rho(a, b) -> float:
    """Pearson correlation of the mid-rank vectors."""
    av, bv = _pair(a, b)
    ra = midranks(av)
    rb = midranks(bv)
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    denom = np.sqrt(float(ra @ ra) * float(rb @ rb))
    if denom == 0.0:
        raise UndefinedMetricError("rho is undefined: zero-variance ranks")
    return float(ra @ rb) / denom


def _descending_order(scores: np.ndarray) -> np.ndarray:
    # stable: equal scores keep ascending index order
    return np.lexsort((np.arange(scores.size), -scores))


def ndcg_at_k(predicted_scores, relevance, k: int) -> float:
    """NDCG@k with gains ``2**rel - 1`` and log2(position + 1) discounts.

    Items are ranked by descending predicted score with a deterministic
    lower-index-first tie break. Returns 0.0 when every item is irrelevant
    (ideal DCG of zero).
    """
    scores = np.asarray(predicted_scores, dtype=float)
    rel = np.asarray(relevance, dtype=float)
    if scores.shape != rel.shape or scores.ndim != 1:
        raise ValueError("predicted_scores and relevance must be equal-length vectors")
    if np.any(rel < 0):
        raise ValueError("relevance grades must be nonnegative")
    n = scores.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    gains = np.power(2.0, rel) - 1.0
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    dcg = float(gains[_descending_order(scores)[:k]] @ discounts)
    ideal = float(np.sort(gains)[::-1][:k] @ discounts)
    if ideal == 0.0:
        return 0.0
    return dcg / ideal


class MeanNdcg(NamedTuple):
    value: float
    used: int
    skipped: int


def mean_ndcg_at_k(queries, k: int) -> MeanNdcg:
    """Average NDCG@k over (scores, relevance) pairs, skipping queries whose
    ideal DCG is zero; the skip count is reported alongside the mean."""
    total = 0.0
    used = 0
    skipped = 0
    for scores, relevance in queries:
        rel = np.asarray(relevance, dtype=float)
        if not np.any(rel > 0):
            skipped += 1
            continue
        total += ndcg_at_k(scores, rel, k)
        used += 1
    if used == 0:
        raise UndefinedMetricError("every query had zero ideal DCG")
    return MeanNdcg(total / used, used, skipped)
