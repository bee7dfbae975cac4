"""Monotone retargeting: alternate isotonic retargeting and GLM fitting.

Given a design matrix and a (possibly partial) target ordering, the loop
alternates two exact convex minimizations until the divergence stops
improving: project the current fitted means onto the isotonic cone of the
target ordering (PAV), then refit the GLM against the projected scores.
A range margin is enforced on the projected scores each iteration to keep
the trivial constant solution out of reach.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bregman
from .bregman import DivergenceSpec, Family
from .errors import UnsupportedFamilyError
from .glm import GlmOptions, Regularization, RegKind, fit_glm
from .isotonic import Ordering, enforce_range_margin, pav_fit

_SUPPORTED = (Family.SQUARED_EUCLIDEAN, Family.GENERALIZED_I)


@dataclass(frozen=True)
class MrOptions:
    """Knobs for the retargeting loop.

    ``epsilon`` is the minimum allowed range of the retargeted scores
    (0 disables the margin). ``init_weights`` warm-starts the GLM; without it
    the loop bootstraps by fitting the GLM once against rank-position scores
    of the target ordering, so the first projection is not vacuous.
    """

    tol: float = 1e-8
    max_iter: int = 100
    epsilon: float = 1e-3
    reg: Regularization = field(default_factory=Regularization.none)
    glm_tol: float = 1e-9
    glm_max_iter: int = 200
    intercept: bool = True
    init_weights: np.ndarray | None = None
    init_intercept: float = 0.0


@dataclass
class MrResult:
    retarget: np.ndarray
    weights: np.ndarray
    intercept: float
    fitted_scores: np.ndarray
    induced_order: Ordering
    cost_trace: list[float]
    penalized_cost_trace: list[float]
    margin_iterations: list[int]
    iterations: int
    converged: bool
    collapsed: bool


def _penalty(reg: Regularization, weights: np.ndarray) -> float:
    if reg.kind is RegKind.RIDGE_L2:
        return 0.5 * reg.strength * float(weights @ weights)
    if reg.kind is RegKind.LASSO_L1:
        return reg.strength * float(np.abs(weights).sum())
    return 0.0


def _rank_position_scores(spec: DivergenceSpec, order: Ordering) -> np.ndarray:
    """In-domain scores realizing the ordering, natural params in [-1, 1]."""
    ranks = order.rank_vector()
    top = len(order.blocks) - 1
    theta = np.zeros_like(ranks) if top == 0 else (ranks / top) * 2.0 - 1.0
    return bregman.inv_grad_phi(spec, theta)


def monotone_retarget(
    spec: DivergenceSpec,
    design,
    target_order: Ordering,
    opts: MrOptions | None = None,
) -> MrResult:
    """Jointly learn a retargeted score vector and GLM weights.

    Alternates :func:`pav_fit` (constraint = ``target_order``) and
    :func:`fit_glm` on ``design`` until the relative change of the divergence
    falls below ``opts.tol`` or ``opts.max_iter`` is reached. Non-convergence
    is reported through ``converged``, never as an exception.
    """
    opts = opts or MrOptions()
    if spec.family not in _SUPPORTED:
        raise UnsupportedFamilyError(
            f"retargeting supports squared_euclidean and generalized_i, "
            f"not {spec.family.value} (its domain is not closed under pooling)"
        )
    X = np.asarray(design, dtype=float)
    if X.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    n = X.shape[0]
    if target_order.n_items != n:
        raise ValueError(
            f"target_order covers {target_order.n_items} items, design has {n} rows"
        )

    if n == 1:
        w = np.zeros(X.shape[1]) if opts.init_weights is None else np.asarray(
            opts.init_weights, dtype=float
        )
        b = opts.init_intercept if opts.init_weights is not None else 0.0
        fitted = bregman.inv_grad_phi(spec, X @ w + b)
        return MrResult(
            retarget=fitted.copy(),
            weights=w,
            intercept=float(b),
            fitted_scores=fitted,
            induced_order=Ordering(((0,),)),
            cost_trace=[0.0],
            penalized_cost_trace=[_penalty(opts.reg, w)],
            margin_iterations=[],
            iterations=0,
            converged=True,
            collapsed=False,
        )

    glm_opts = dict(tol=opts.glm_tol, max_iter=opts.glm_max_iter, intercept=opts.intercept)

    if opts.init_weights is None:
        seed_target = _rank_position_scores(spec, target_order)
        fit = fit_glm(spec, X, seed_target, opts.reg, GlmOptions(**glm_opts))
    else:
        fit = None
        weights = np.asarray(opts.init_weights, dtype=float)
        intercept = float(opts.init_intercept)

    cost_trace: list[float] = []
    penalized_trace: list[float] = []
    margin_iterations: list[int] = []
    converged = False
    collapsed = False
    iterations = 0
    sol = None

    for iterations in range(1, opts.max_iter + 1):
        if fit is not None:
            weights, intercept = fit.weights, fit.intercept
        theta = X @ weights + intercept
        sol = pav_fit(spec, theta, target_order)
        collapsed = len(sol.induced_order.blocks) == 1
        if opts.epsilon > 0.0:
            adjusted = enforce_range_margin(sol, opts.epsilon)
            if adjusted is not sol:
                margin_iterations.append(iterations)
                sol = adjusted
        fit = fit_glm(
            spec,
            X,
            sol.fitted,
            opts.reg,
            GlmOptions(init_weights=weights, init_intercept=intercept, **glm_opts),
        )
        cost = fit.objective
        cost_trace.append(cost)
        penalized_trace.append(cost + _penalty(opts.reg, fit.weights))
        if len(cost_trace) >= 2:
            prev = cost_trace[-2]
            if abs(prev - cost) <= opts.tol * abs(prev):
                converged = True
                break

    fitted_scores = fit.fitted_means(spec, X)
    return MrResult(
        retarget=sol.fitted.copy(),
        weights=fit.weights,
        intercept=fit.intercept,
        fitted_scores=fitted_scores,
        induced_order=sol.induced_order,
        cost_trace=cost_trace,
        penalized_cost_trace=penalized_trace,
        margin_iterations=margin_iterations,
        iterations=iterations,
        converged=converged,
        collapsed=collapsed,
    )


def refine_ordering(order: Ordering, covariate_scores) -> Ordering:
    """Total order refining ``order``'s tie-blocks by ascending covariate
    score; exact covariate ties break by lower index."""
    cov = np.asarray(covariate_scores, dtype=float)
    if cov.size != order.n_items:
        raise ValueError("covariate_scores length must match the ordering")
    permutation: list[int] = []
    for block in order.blocks:
        idx = np.fromiter(block, dtype=np.intp)
        permutation.extend(idx[np.lexsort((idx, cov[idx]))].tolist())
    return Ordering.total_from_permutation(permutation)


def extract_total_order(result: MrResult, covariate_scores) -> Ordering:
    """Refine the result's tie-blocks into the total order most consistent
    with the covariate scores."""
    return refine_ordering(result.induced_order, covariate_scores)
