"""Unsupervised rank aggregation with object features via monotone retargeting."""

from .aggregate import (
    AggregationConfig,
    AggregationResult,
    expert_weights,
    mr_rank_agg,
    permutation_trace,
    preprocess_lists,
    recovery_config,
)
from .baselines import METHOD_NAMES, baseline_scores, borda, comb, markov_chain
from .bregman import (
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
from .data import (
    COLUMN_PRESETS,
    ColumnMap,
    CorruptionKind,
    CorruptionOp,
    QueryGroup,
    SyntheticSpec,
    augment_with_quality_list,
    generate_synthetic,
    parse_letor,
    relevance_grades,
    write_letor,
)
from .errors import (
    DegenerateInputError,
    DomainError,
    LetorFormatError,
    NaturalParamOverflowError,
    PowerIterationError,
    RankAggError,
    UndefinedMetricError,
    UnsupportedFamilyError,
)
from .glm import GlmFit, GlmOptions, Regularization, fit_glm
from .isotonic import IsotonicSolution, Ordering, enforce_range_margin, pav_fit
from .metrics import kendall_tau, mean_ndcg_at_k, ndcg_at_k, spearman_rho
from .retarget import MrOptions, MrResult, extract_total_order, monotone_retarget

__version__ = "0.1.0"

__all__ = [
    "AggregationConfig",
    "AggregationResult",
    "COLUMN_PRESETS",
    "ColumnMap",
    "CorruptionKind",
    "CorruptionOp",
    "DegenerateInputError",
    "DivergenceSpec",
    "DomainError",
    "Family",
    "GENERALIZED_I",
    "GlmFit",
    "GlmOptions",
    "IsotonicSolution",
    "KL",
    "LetorFormatError",
    "METHOD_NAMES",
    "MrOptions",
    "MrResult",
    "NaturalParamOverflowError",
    "Ordering",
    "PowerIterationError",
    "QueryGroup",
    "RankAggError",
    "Regularization",
    "SQUARED_EUCLIDEAN",
    "SyntheticSpec",
    "UndefinedMetricError",
    "UnsupportedFamilyError",
    "augment_with_quality_list",
    "baseline_scores",
    "borda",
    "comb",
    "divergence",
    "enforce_range_margin",
    "expert_weights",
    "extract_total_order",
    "fit_glm",
    "generate_synthetic",
    "grad_phi",
    "inv_grad_phi",
    "kendall_tau",
    "markov_chain",
    "mean_ndcg_at_k",
    "monotone_retarget",
    "mr_rank_agg",
    "ndcg_at_k",
    "parse_letor",
    "pav_fit",
    "permutation_trace",
    "phi",
    "preprocess_lists",
    "recovery_config",
    "relevance_grades",
    "spearman_rho",
    "write_letor",
]
