"""Unsupervised rank aggregation with object features.

The outer loop alternates two retargeting passes that share one isotonicity
coupling: a features pass (fit item features ``X``, constrained by the
current ordering of the list-side scores) and a lists pass (fit the expert
score matrix ``R``, constrained by the ordering the features pass produced).
Orderings handed between the passes keep their tie-blocks, which is what
lets the consensus ordering drift away from its initialization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import baselines, metrics
from .bregman import SQUARED_EUCLIDEAN, DivergenceSpec, Family
from .errors import DegenerateInputError, UnsupportedFamilyError
from .glm import Regularization
from .isotonic import Ordering
from .retarget import MrOptions, MrResult, monotone_retarget, refine_ordering

logger = logging.getLogger(__name__)

#: Strictly positive floor used when shifting list columns into the positive
#: orthant for the generalized-I family.
POSITIVE_LIST_FLOOR = 1e-6

#: Consecutive identical consensus orderings that trigger the secondary
#: early exit (orderings can oscillate between equal-cost solutions).
_STABLE_ORDER_EXIT = 3


@dataclass(frozen=True)
class AggregationConfig:
    """Configuration of one aggregation run.

    ``lam`` weighs the features term in the coupled cost; both alternating
    steps are invariant to it, so it only affects the recorded trace and the
    stopping rule. ``init_method`` names any baseline aggregator.
    """

    phi_r: DivergenceSpec = SQUARED_EUCLIDEAN
    phi_z: DivergenceSpec = SQUARED_EUCLIDEAN
    lam: float = 1.0
    # Retargeted score vectors shrink toward the degenerate constant solution
    # when list noise conflicts with the constraint ordering; a unit range
    # floor keeps them on the scale of the z-scored lists instead of parking
    # them at a microscopic range where the fits lose resolution.
    epsilon_margin: float = 1.0
    init_method: str = "borda"
    reg_beta: Regularization = field(default_factory=Regularization.none)
    reg_omega: Regularization = field(default_factory=Regularization.none)
    outer_tol: float = 1e-7
    outer_max_iter: int = 50
    inner_tol: float = 1e-8
    inner_max_iter: int = 100
    intercept: bool = True
    # PAV smears an order conflict across neighboring pools as a run of
    # epsilon-scale gaps instead of one exact tie. Treating gaps below this
    # fraction of the score range as ties when the features-pass ordering is
    # handed to the lists pass (and when the consensus is extracted) returns
    # that slack to the covariate refinement instead of freezing it as
    # spurious strict order.
    tie_rel_tol: float = 5e-3
    # Tolerance for the opposite handoff (lists-pass ordering constraining
    # the features pass). Exact ties keep the features fit under pressure:
    # a coarsened constraint is too easy to satisfy, which lets exp-link
    # fits park at a self-consistent ordering and stop moving.
    feedback_tie_rel_tol: float = 0.0
    # How raw list columns become the lists-pass design matrix. "auto" picks
    # the family default (z-scoring for squared Euclidean, a positive shift
    # for generalized I). "rank" replaces each column by its mid-ranks
    # before the family default, i.e. positional Borda-style scores; for
    # heavy-tailed score lists that keeps every rank position equally
    # informative instead of letting the largest scores dominate the fit.
    list_preprocessing: str = "auto"


@dataclass
class IterationRecord:
    """Per-outer-iteration diagnostics."""

    index: int
    z_values: np.ndarray
    r_values: np.ndarray
    z_fitted: np.ndarray
    r_fitted: np.ndarray
    z_order: Ordering
    r_order: Ordering
    consensus: Ordering
    consensus_features: Ordering
    coupled_cost: float
    lists_cost: float
    features_cost: float
    margin_in_z: bool
    margin_in_r: bool


@dataclass
class AggregationResult:
    """Final state of an aggregation run.

    ``consensus_order`` is the lists-side total order (retargeted list
    scores refined by the fitted list combination); ``consensus_order_features``
    is the features-side counterpart (retargeted feature scores refined by
    the fitted feature model), which carries finer structure when the list
    scores span many orders of magnitude.
    """

    r_bar: np.ndarray
    beta: np.ndarray
    beta_intercept: float
    z_bar: np.ndarray
    omega: np.ndarray
    omega_intercept: float
    consensus_order: Ordering
    consensus_order_features: Ordering
    coupled_cost_trace: list[float]
    per_step_orders: list[Ordering]
    records: list[IterationRecord]
    iterations: int
    converged: bool
    diagnostic: str | None = None

    @property
    def margin_iterations(self) -> list[int]:
        return [r.index for r in self.records if r.margin_in_z or r.margin_in_r]


def preprocess_lists(spec: DivergenceSpec, R, mode: str = "auto") -> np.ndarray:
    """Map raw expert score columns into the divergence domain.

    Squared Euclidean: columns are z-scored. Generalized I: columns are
    shifted (order preserving) so every entry is at least
    ``POSITIVE_LIST_FLOOR``. With ``mode="rank"`` each column is first
    replaced by its mid-ranks (positional scores). Constant columns carry
    no ranking information and are rejected.
    """
    arr = np.asarray(R, dtype=float)
    if arr.ndim != 2:
        raise ValueError("R must be a 2-D matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("R contains non-finite entries")
    spans = arr.max(axis=0) - arr.min(axis=0)
    dead = np.nonzero(spans == 0.0)[0]
    if dead.size:
        raise DegenerateInputError(
            f"list columns {dead.tolist()} are constant; degenerate lists rejected"
        )
    if mode not in ("auto", "rank"):
        raise ValueError(f"unknown list preprocessing {mode!r}")
    if mode == "rank":
        arr = np.column_stack([metrics.midranks(arr[:, k]) for k in range(arr.shape[1])])
        logger.debug("rank-transformed %d list columns", arr.shape[1])
    if spec.family is Family.SQUARED_EUCLIDEAN:
        out = (arr - arr.mean(axis=0)) / arr.std(axis=0)
        logger.debug("z-scored %d list columns", arr.shape[1])
        return out
    if spec.family is Family.GENERALIZED_I:
        mins = arr.min(axis=0)
        shift = np.maximum(POSITIVE_LIST_FLOOR - mins, 0.0)
        out = arr + shift
        logger.debug(
            "shifted %d of %d list columns into the positive orthant",
            int(np.count_nonzero(shift)),
            arr.shape[1],
        )
        return out
    raise UnsupportedFamilyError(
        f"no list preprocessing is defined for the {spec.family.value} family"
    )


def _tolerant_order(values: np.ndarray, rel_tol: float) -> Ordering:
    """Tie-blocks of ``values`` where a block spans at most ``rel_tol`` of the
    range (anchored at the block minimum, so blocks cannot chain without
    bound)."""
    vals = np.asarray(values, dtype=float)
    span = float(vals.max() - vals.min())
    if span == 0.0 or rel_tol <= 0.0:
        return Ordering.from_scores(vals)
    atol = rel_tol * span
    order = np.argsort(vals, kind="stable")
    blocks: list[list[int]] = []
    current = [int(order[0])]
    anchor = vals[current[0]]
    for raw in order[1:]:
        idx = int(raw)
        if vals[idx] - anchor <= atol:
            current.append(idx)
        else:
            blocks.append(current)
            current = [idx]
            anchor = vals[idx]
    blocks.append(current)
    return Ordering.from_blocks(blocks)


def _handed_order(spec: DivergenceSpec, values: np.ndarray, rel_tol: float) -> Ordering:
    """Ordering handed between steps; near-tie grouping happens on the
    family's natural-parameter scale so an exponential range does not
    swallow the low end of the vector."""
    if spec.has_exp_link:
        return _tolerant_order(np.log(values), rel_tol)
    return _tolerant_order(values, rel_tol)


def _inner_opts(cfg: AggregationConfig, reg: Regularization, warm) -> MrOptions:
    weights, intercept = warm
    return MrOptions(
        tol=cfg.inner_tol,
        max_iter=cfg.inner_max_iter,
        epsilon=cfg.epsilon_margin,
        reg=reg,
        intercept=cfg.intercept,
        init_weights=weights,
        init_intercept=intercept,
    )


def _best_retarget(spec, design, constraint, cfg, reg, warm) -> MrResult:
    """Retarget from the warm start and, when one exists, also from the cold
    bootstrap; keep the cheaper solution. The warm run bounds the cost from
    above (alternating descent), so taking the minimum preserves monotone
    descent while letting a restart escape a self-consistent stall."""
    warm_res = monotone_retarget(spec, design, constraint, _inner_opts(cfg, reg, warm))
    if warm[0] is None:
        return warm_res
    cold_res = monotone_retarget(spec, design, constraint, _inner_opts(cfg, reg, (None, 0.0)))
    if cold_res.cost_trace[-1] < warm_res.cost_trace[-1]:
        return cold_res
    return warm_res


def mr_rank_agg(R, X, cfg: AggregationConfig | None = None) -> AggregationResult:
    """Aggregate expert score lists ``R`` (n x p) using item features ``X`` (n x d).

    Initializes the consensus from ``cfg.init_method``, then alternates the
    features pass and the lists pass until the coupled cost stabilizes. The
    final total ordering refines the list-side tie-blocks by the fitted list
    combination scores. Degenerate runs (fewer than two items, or scores
    pooling into a single tie-block) come back with ``converged=False`` and a
    diagnostic rather than an exception.
    """
    cfg = cfg or AggregationConfig()
    R = np.asarray(R, dtype=float)
    X = np.asarray(X, dtype=float)
    if R.ndim != 2 or X.ndim != 2:
        raise ValueError("R and X must be 2-D matrices")
    if R.shape[0] != X.shape[0]:
        raise ValueError(f"R has {R.shape[0]} rows but X has {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    n = R.shape[0]
    if n == 0:
        raise ValueError("cannot aggregate zero items")

    Rp = preprocess_lists(cfg.phi_r, R, cfg.list_preprocessing) if n > 1 else R.astype(float)

    if n == 1:
        order = Ordering(((0,),))
        return AggregationResult(
            r_bar=np.zeros(1),
            beta=np.zeros(R.shape[1]),
            beta_intercept=0.0,
            z_bar=np.zeros(1),
            omega=np.zeros(X.shape[1]),
            omega_intercept=0.0,
            consensus_order=order,
            consensus_order_features=order,
            coupled_cost_trace=[],
            per_step_orders=[],
            records=[],
            iterations=0,
            converged=False,
            diagnostic="fewer than two items; nothing to aggregate",
        )

    init_scores = baselines.baseline_scores(R, cfg.init_method)
    r_order = Ordering.from_scores(init_scores)

    warm_omega: tuple = (None, 0.0)
    warm_beta: tuple = (None, 0.0)
    records: list[IterationRecord] = []
    converged = False
    diagnostic = None
    z_res: MrResult | None = None
    r_res: MrResult | None = None

    for index in range(1, cfg.outer_max_iter + 1):
        try:
            z_res = _best_retarget(cfg.phi_z, X, r_order, cfg, cfg.reg_omega, warm_omega)
            z_order = _handed_order(cfg.phi_z, z_res.retarget, cfg.tie_rel_tol)
            r_res = _best_retarget(cfg.phi_r, Rp, z_order, cfg, cfg.reg_beta, warm_beta)
        except DegenerateInputError as exc:
            diagnostic = f"degenerate step at outer iteration {index}: {exc}"
            logger.warning("%s", diagnostic)
            break
        warm_omega = (z_res.weights, z_res.intercept)
        warm_beta = (r_res.weights, r_res.intercept)
        lists_cost = r_res.cost_trace[-1]
        features_cost = z_res.cost_trace[-1]
        coupled = lists_cost + cfg.lam * features_cost
        r_order_next = _handed_order(cfg.phi_r, r_res.retarget, cfg.feedback_tie_rel_tol)
        consensus = refine_ordering(
            _handed_order(cfg.phi_r, r_res.retarget, cfg.tie_rel_tol), r_res.fitted_scores
        )
        consensus_features = refine_ordering(z_order, z_res.fitted_scores)
        records.append(
            IterationRecord(
                index=index,
                z_values=z_res.retarget.copy(),
                r_values=r_res.retarget.copy(),
                z_fitted=z_res.fitted_scores.copy(),
                r_fitted=r_res.fitted_scores.copy(),
                z_order=z_order,
                r_order=r_order_next,
                consensus=consensus,
                consensus_features=consensus_features,
                coupled_cost=coupled,
                lists_cost=lists_cost,
                features_cost=features_cost,
                margin_in_z=bool(z_res.margin_iterations),
                margin_in_r=bool(r_res.margin_iterations),
            )
        )
        if len(records) >= 2:
            # The two cost terms can sit many orders of magnitude apart, so
            # the sum alone would declare convergence while the smaller term
            # is still moving; require each term to stabilize. Costs can also
            # be stationary while the orderings still churn (pools keep both
            # fits cheap), so the orderings must have stopped moving too.
            prev = records[-2]
            costs_stable = abs(prev.lists_cost - lists_cost) <= cfg.outer_tol * abs(
                prev.lists_cost
            ) and abs(prev.features_cost - features_cost) <= cfg.outer_tol * abs(
                prev.features_cost
            )
            orders_stable = prev.z_order == z_order and prev.r_order == r_order_next
            if costs_stable and orders_stable:
                converged = True
                break
        if len(records) >= _STABLE_ORDER_EXIT and all(
            records[-k].consensus == consensus
            and records[-k].z_order == z_order
            and records[-k].r_order == r_order_next
            for k in range(2, _STABLE_ORDER_EXIT + 1)
        ):
            converged = True
            break
        r_order = r_order_next

    if not records:
        raise DegenerateInputError(
            diagnostic or "aggregation produced no complete iteration"
        )

    if r_res is not None and r_res.collapsed:
        converged = False
        diagnostic = "rank scores pooled into a single tie-block; consensus is unreliable"
        logger.warning("%s", diagnostic)

    last = records[-1]
    features_consensus = last.consensus_features
    return AggregationResult(
        r_bar=last.r_values,
        beta=r_res.weights,
        beta_intercept=r_res.intercept,
        z_bar=last.z_values,
        omega=z_res.weights,
        omega_intercept=z_res.intercept,
        consensus_order=last.consensus,
        consensus_order_features=features_consensus,
        coupled_cost_trace=[r.coupled_cost for r in records],
        per_step_orders=[r.consensus for r in records],
        records=records,
        iterations=len(records),
        converged=converged,
        diagnostic=diagnostic,
    )


def recovery_config(family: DivergenceSpec) -> AggregationConfig:
    """Configuration tuned for exact recovery on planted synthetic instances.

    The features pass uses the planted family; the lists pass uses the
    squared Euclidean loss over rank-transformed columns (positional
    scores), with an L1 penalty on the list weights so spurious lists drop
    to exactly zero.
    """
    return AggregationConfig(
        phi_z=family,
        phi_r=SQUARED_EUCLIDEAN,
        reg_beta=Regularization.lasso(3.0),
        list_preprocessing="rank",
    )


def expert_weights(result: AggregationResult) -> np.ndarray:
    """Learned combination weight per expert list (spurious lists shrink to ~0
    under an L1 penalty on the list weights)."""
    return result.beta.copy()


def permutation_trace(result: AggregationResult):
    """Sequence of (iteration, consensus ordering, tau to previous consensus).

    The first entry reports tau = 1.0; later entries report Kendall tau
    between consecutive consensus orderings, so any value below 1.0 marks an
    iteration where the total ordering actually moved.
    """
    if not result.records:
        raise ValueError("result holds no recorded iterations")
    trace = []
    prev_ranks = None
    for rec in result.records:
        ranks = rec.consensus.rank_vector()
        tau = 1.0 if prev_ranks is None else metrics.kendall_tau(prev_ranks, ranks)
        trace.append((rec.index, rec.consensus, tau))
        prev_ranks = ranks
    return trace
