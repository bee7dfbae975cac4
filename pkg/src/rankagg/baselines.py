"""Classical rank-aggregation baselines: Borda, the Comb family, and the
four Markov-chain constructions.

All functions map an n x p score matrix (column per expert list, higher score
= more relevant) to a single score vector over the n items. The Markov-chain
transition rules follow the standard constructions from the metasearch
literature; "list k ranks j at least as high as i" means ``R[j,k] >= R[i,k]``.
"""

from __future__ import annotations

import numpy as np

from .errors import PowerIterationError

COMB_KINDS = ("combsum", "combmnz", "combanz", "combmin", "combmax")
MC_KINDS = ("mc1", "mc2", "mc3", "mc4")
METHOD_NAMES = ("borda",) + COMB_KINDS + MC_KINDS

#: Probability of a uniform-restart move mixed into every Markov chain so the
#: stationary distribution is unique even when the raw chain is reducible.
DEFAULT_DAMPING = 0.05


def _validate(R) -> np.ndarray:
    arr = np.asarray(R, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("R must be an n x p matrix with n, p >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("R contains non-finite entries")
    return arr


def _midranks(column: np.ndarray) -> np.ndarray:
    """1-based mid-ranks: tied values share the average of their positions."""
    order = np.argsort(column, kind="stable")
    ranks = np.empty(column.size)
    i = 0
    while i < column.size:
        j = i
        while j + 1 < column.size and column[order[j + 1]] == column[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def borda(R) -> np.ndarray:
    """Mean number of items ranked below each item, averaged over lists;
    tied items share the average positional credit."""
    arr = _validate(R)
    credits = np.column_stack([_midranks(arr[:, k]) - 1.0 for k in range(arr.shape[1])])
    return credits.mean(axis=1)


def _minmax_normalize(arr: np.ndarray) -> np.ndarray:
    lo = arr.min(axis=0)
    span = arr.max(axis=0) - lo
    out = np.zeros_like(arr)
    live = span > 0
    out[:, live] = (arr[:, live] - lo[live]) / span[live]
    return out


def comb(R, kind: str) -> np.ndarray:
    """Score-fusion combiners over min-max normalized columns.

    With fully dense score matrices every item is retrieved by every list,
    so the MNZ and ANZ variants order items exactly like the plain sum.
    """
    arr = _validate(R)
    kind = kind.lower()
    if kind not in COMB_KINDS:
        raise ValueError(f"unknown comb kind {kind!r}; expected one of {COMB_KINDS}")
    norm = _minmax_normalize(arr)
    p = arr.shape[1]
    if kind == "combsum":
        return norm.sum(axis=1)
    if kind == "combmnz":
        return norm.sum(axis=1) * p
    if kind == "combanz":
        return norm.sum(axis=1) / p
    if kind == "combmin":
        return norm.min(axis=1)
    return norm.max(axis=1)


def _at_least_as_high(arr: np.ndarray) -> np.ndarray:
    # G[k, i, j] == True iff list k scores item j at least as high as item i
    cols = arr.T
    return cols[:, None, :] >= cols[:, :, None]


def transition_matrix(R, kind: str) -> np.ndarray:
    """Raw (undamped) transition matrix of the requested chain."""
    arr = _validate(R)
    n, p = arr.shape
    if n < 2:
        raise ValueError("Markov-chain aggregation needs at least two items")
    kind = kind.lower()
    if kind not in MC_KINDS:
        raise ValueError(f"unknown Markov chain {kind!r}; expected one of {MC_KINDS}")
    G = _at_least_as_high(arr)
    if kind == "mc1":
        reach = G.any(axis=0).astype(float)
        return reach / reach.sum(axis=1, keepdims=True)
    if kind == "mc2":
        per_list = G / G.sum(axis=2, keepdims=True)
        return per_list.mean(axis=0)
    if kind == "mc3":
        P = G.mean(axis=0) / n
        np.fill_diagonal(P, np.diag(P) + 1.0 - P.sum(axis=1))
        return P
    majority = (G.sum(axis=0) > p / 2.0).astype(float)
    P = majority / n
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    return P


def markov_chain(
    R,
    kind: str,
    damping: float = DEFAULT_DAMPING,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Stationary distribution of the damped chain, used as item scores.

    The chain is mixed with the uniform chain: ``P' = (1-damping) P +
    damping / n``. Raises :class:`PowerIterationError` if the L1 change does
    not fall below ``tol`` within ``max_iter`` sweeps.
    """
    if not 0.0 <= damping <= 1.0:
        raise ValueError("damping must lie in [0, 1]")
    P = transition_matrix(R, kind)
    n = P.shape[0]
    P = (1.0 - damping) * P + damping / n
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        if float(np.abs(nxt - pi).sum()) < tol:
            return nxt
        pi = nxt
    raise PowerIterationError(
        f"{kind} power iteration did not converge within {max_iter} sweeps"
    )


def baseline_scores(R, method: str, **kwargs) -> np.ndarray:
    """Dispatch a baseline by name (one of :data:`METHOD_NAMES`)."""
    name = method.lower()
    if name == "borda":
        return borda(R)
    if name in COMB_KINDS:
        return comb(R, name)
    if name in MC_KINDS:
        return markov_chain(R, name, **kwargs)
    raise ValueError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")
