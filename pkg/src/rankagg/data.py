"""Synthetic data generation, rank-list corruption, and LETOR-format I/O.

Synthetic instances plant a GLM: features are standard normal, the true
weight vector is standard normal, and the true scores are the inverse link
applied to the linear predictor. Expert lists are corrupted copies of the
true scores plus pure-noise (spurious) lists.

The LETOR line grammar is ``<grade> qid:<id> <idx>:<float> ... [#comment]``
with 1-based feature indices; a column map assigns disjoint index sets to
the feature matrix and the rank-list matrix.
"""

from __future__ import annotations

import enum
import io
import os
from dataclasses import dataclass, field

import numpy as np

from . import bregman
from .bregman import GENERALIZED_I, SQUARED_EUCLIDEAN, DivergenceSpec
from .errors import DegenerateInputError, LetorFormatError


class CorruptionKind(enum.Enum):
    TRANSLATION = "translation"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    PURE_NOISE = "pure_noise"


@dataclass(frozen=True)
class CorruptionOp:
    """One corrupted copy of the true scores; ``magnitude`` is interpreted
    relative to the standard deviation of the true scores (translation and
    additive) or as the factor spread around 1 (multiplicative)."""

    kind: CorruptionKind
    magnitude: float = 0.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("corruption magnitude must be nonnegative")


def default_corruption() -> tuple[CorruptionOp, ...]:
    """Six informative lists: two translated, two with additive noise, two
    with multiplicative noise."""
    return (
        CorruptionOp(CorruptionKind.TRANSLATION, 1.0),
        CorruptionOp(CorruptionKind.TRANSLATION, 2.0),
        CorruptionOp(CorruptionKind.ADDITIVE, 0.25),
        CorruptionOp(CorruptionKind.ADDITIVE, 0.25),
        CorruptionOp(CorruptionKind.MULTIPLICATIVE, 0.25),
        CorruptionOp(CorruptionKind.MULTIPLICATIVE, 0.25),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic aggregation instance (10 lists by default:
    six corrupted and four spurious)."""

    n: int = 200
    d: int = 20
    family: DivergenceSpec = SQUARED_EUCLIDEAN
    corruption: tuple[CorruptionOp, ...] = field(default_factory=default_corruption)
    n_spurious: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two items")
        if self.d < 1:
            raise ValueError("need at least one feature")
        if self.n_spurious < 0:
            raise ValueError("n_spurious must be nonnegative")

    @property
    def p_total(self) -> int:
        return len(self.corruption) + self.n_spurious


@dataclass
class QueryGroup:
    """Items of one query: features, expert lists, optional ground truth."""

    query_id: str
    X: np.ndarray
    R: np.ndarray
    relevance: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        if self.X.ndim != 2 or self.R.ndim != 2:
            raise ValueError("X and R must be 2-D matrices")
        if self.X.shape[0] != self.R.shape[0]:
            raise ValueError("X and R must have the same number of rows")
        if self.relevance is not None:
            self.relevance = np.asarray(self.relevance, dtype=int)
            if self.relevance.shape != (self.X.shape[0],):
                raise ValueError("relevance length must match the item count")

    @property
    def n_items(self) -> int:
        return self.X.shape[0]


def relevance_grades(scores, max_grade: int = 16) -> np.ndarray:
    """Integer grades from real scores with doubling windows from the top.

    The best item gets ``max_grade``, the next two ``max_grade - 1``, the
    next four ``max_grade - 2`` and so on (floored at zero). The windows keep
    relevance granular near the top, where NDCG@K looks.
    """
    arr = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(arr.size), -arr))
    positions = np.empty(arr.size, dtype=int)
    positions[order] = np.arange(arr.size)
    grades = max_grade - np.floor(np.log2(positions + 1.0)).astype(int)
    return np.maximum(grades, 0)


def apply_corruption(
    op: CorruptionOp, true_scores: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    scale = float(true_scores.std())
    if op.kind is CorruptionKind.TRANSLATION:
        return true_scores + op.magnitude * scale
    if op.kind is CorruptionKind.ADDITIVE:
        return true_scores + op.magnitude * scale * rng.standard_normal(true_scores.size)
    if op.kind is CorruptionKind.MULTIPLICATIVE:
        return true_scores * (1.0 + op.magnitude * rng.standard_normal(true_scores.size))
    return scale * rng.standard_normal(true_scores.size)


def generate_synthetic(spec: SyntheticSpec):
    """Build one planted instance.

    Returns ``(group, true_scores, true_weights)`` where
    ``true_scores = inv_grad_phi(X @ true_weights)`` and the group's
    relevance grades are derived from the true scores. Fully deterministic
    under the spec's seed.
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.standard_normal((spec.n, spec.d))
    omega = rng.standard_normal(spec.d)
    rho = bregman.inv_grad_phi(spec.family, X @ omega)
    columns = [apply_corruption(op, rho, rng) for op in spec.corruption]
    scale = float(rho.std())
    for _ in range(spec.n_spurious):
        columns.append(scale * rng.standard_normal(spec.n))
    R = np.column_stack(columns)
    group = QueryGroup(
        query_id=f"synth-{spec.seed}",
        X=X,
        R=R,
        relevance=relevance_grades(rho),
    )
    return group, rho, omega


def augment_with_quality_list(group: QueryGroup, oracle_scores) -> QueryGroup:
    """Append one extra expert list; nothing marks it as high quality."""
    scores = np.asarray(oracle_scores, dtype=float)
    if scores.shape != (group.n_items,):
        raise ValueError(
            f"oracle scores have length {scores.size}, expected {group.n_items}"
        )
    if scores.size and float(scores.max()) == float(scores.min()):
        raise DegenerateInputError("augmentation list is constant; rejected")
    return QueryGroup(
        query_id=group.query_id,
        X=group.X.copy(),
        R=np.column_stack([group.R, scores]),
        relevance=None if group.relevance is None else group.relevance.copy(),
    )


# ---------------------------------------------------------------------------
# LETOR-format files


@dataclass(frozen=True)
class ColumnMap:
    """Disjoint 1-based column index sets for features and rank lists."""

    x_columns: tuple[int, ...]
    r_columns: tuple[int, ...]
    pad_missing: bool = False

    def __post_init__(self):
        if not self.x_columns or not self.r_columns:
            raise LetorFormatError("column map needs at least one column per side")
        if min(self.x_columns + self.r_columns) < 1:
            raise LetorFormatError("column indices are 1-based")
        overlap = set(self.x_columns) & set(self.r_columns)
        if overlap:
            raise LetorFormatError(
                f"feature and rank-list columns overlap: {sorted(overlap)}"
            )


#: Named column-map presets. "mq" follows the LETOR 4.0 million-query layout
#: (46 ranking features, then 25 appended rank lists); "ohsumed" treats the
#: retrieval-model score columns of each field block as the 15 rank lists.
#: Both are overridable conventions, not file-format guarantees.
COLUMN_PRESETS = {
    "mq": ColumnMap(
        x_columns=tuple(range(1, 47)),
        r_columns=tuple(range(47, 72)),
    ),
    "ohsumed": ColumnMap(
        x_columns=tuple(
            i for i in range(1, 46) if i not in set(range(11, 16)) | set(range(26, 31)) | set(range(41, 46))
        ),
        r_columns=tuple(range(11, 16)) + tuple(range(26, 31)) + tuple(range(41, 46)),
    ),
    "mini": ColumnMap(
        x_columns=tuple(range(1, 5)),
        r_columns=tuple(range(5, 9)),
    ),
}


def resolve_column_map(columns) -> ColumnMap:
    """Accept a ColumnMap, a preset name, or an ``"x=1-4;r=5-8"`` spec string."""
    if isinstance(columns, ColumnMap):
        return columns
    name = str(columns).strip().lower()
    if name in COLUMN_PRESETS:
        return COLUMN_PRESETS[name]
    if "=" in name:
        return _parse_column_spec(name)
    raise LetorFormatError(
        f"unknown column map {columns!r}; expected a preset "
        f"({sorted(COLUMN_PRESETS)}) or a spec like 'x=1-4;r=5-8'"
    )


def _parse_index_ranges(text: str) -> tuple[int, ...]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_column_spec(spec: str) -> ColumnMap:
    sides: dict[str, tuple[int, ...]] = {}
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, _, value = chunk.partition("=")
        key = key.strip().lower()
        if key not in ("x", "r"):
            raise LetorFormatError(f"column spec side must be 'x' or 'r', got {key!r}")
        sides[key] = _parse_index_ranges(value)
    if "x" not in sides or "r" not in sides:
        raise LetorFormatError("column spec must define both x= and r= sides")
    return ColumnMap(x_columns=sides["x"], r_columns=sides["r"])


def _parse_line(line: str, lineno: int):
    body, _, _comment = line.partition("#")
    tokens = body.split()
    if not tokens:
        return None
    if len(tokens) < 2 or not tokens[1].startswith("qid:"):
        raise LetorFormatError(f"line {lineno}: expected '<grade> qid:<id> ...'")
    try:
        grade = int(float(tokens[0]))
    except ValueError as exc:
        raise LetorFormatError(f"line {lineno}: bad relevance grade {tokens[0]!r}") from exc
    if grade < 0:
        raise LetorFormatError(f"line {lineno}: negative relevance grade {grade}")
    qid = tokens[1][4:]
    if not qid:
        raise LetorFormatError(f"line {lineno}: empty qid")
    values: dict[int, float] = {}
    for tok in tokens[2:]:
        idx_text, sep, val_text = tok.partition(":")
        if not sep:
            raise LetorFormatError(f"line {lineno}: malformed pair {tok!r}")
        try:
            idx = int(idx_text)
            val = float(val_text)
        except ValueError as exc:
            raise LetorFormatError(f"line {lineno}: malformed pair {tok!r}") from exc
        if idx < 1:
            raise LetorFormatError(f"line {lineno}: column indices are 1-based")
        if idx in values:
            raise LetorFormatError(f"line {lineno}: duplicate column {idx}")
        values[idx] = val
    return grade, qid, values


def _gather(values: dict[int, float], wanted, pad: bool, lineno: int) -> list[float]:
    row = []
    for idx in wanted:
        if idx in values:
            row.append(values[idx])
        elif pad:
            row.append(0.0)
        else:
            raise LetorFormatError(f"line {lineno}: missing column {idx}")
    return row


def parse_letor(source, columns, strict_grouping: bool = False) -> list[QueryGroup]:
    """Parse a LETOR-format file or stream into query groups.

    ``columns`` is a :class:`ColumnMap`, preset name, or spec string. Groups
    keep first-seen qid order; with ``strict_grouping`` a qid may not
    reappear after another qid started.
    """
    cmap = resolve_column_map(columns)
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()

    grades: dict[str, list[int]] = {}
    xs: dict[str, list[list[float]]] = {}
    rs: dict[str, list[list[float]]] = {}
    order: list[str] = []
    last_qid = None
    for lineno, line in enumerate(lines, start=1):
        parsed = _parse_line(line, lineno)
        if parsed is None:
            continue
        grade, qid, values = parsed
        if strict_grouping and qid != last_qid and qid in grades:
            raise LetorFormatError(
                f"line {lineno}: qid {qid} reappears after another query "
                "(strict grouping)"
            )
        last_qid = qid
        if qid not in grades:
            grades[qid] = []
            xs[qid] = []
            rs[qid] = []
            order.append(qid)
        grades[qid].append(grade)
        xs[qid].append(_gather(values, cmap.x_columns, cmap.pad_missing, lineno))
        rs[qid].append(_gather(values, cmap.r_columns, cmap.pad_missing, lineno))

    return [
        QueryGroup(
            query_id=qid,
            X=np.asarray(xs[qid], dtype=float),
            R=np.asarray(rs[qid], dtype=float),
            relevance=np.asarray(grades[qid], dtype=int),
        )
        for qid in order
    ]


def write_letor(groups, destination, columns) -> None:
    """Serialize query groups in the same line grammar the parser reads."""
    cmap = resolve_column_map(columns)
    buffer = io.StringIO()
    for group in groups:
        if group.X.shape[1] != len(cmap.x_columns):
            raise LetorFormatError(
                f"group {group.query_id}: X has {group.X.shape[1]} columns, "
                f"map expects {len(cmap.x_columns)}"
            )
        if group.R.shape[1] != len(cmap.r_columns):
            raise LetorFormatError(
                f"group {group.query_id}: R has {group.R.shape[1]} columns, "
                f"map expects {len(cmap.r_columns)}"
            )
        rel = group.relevance
        if rel is None:
            rel = np.zeros(group.n_items, dtype=int)
        for i in range(group.n_items):
            pairs = [
                f"{idx}:{float(value)!r}"
                for idx, value in zip(cmap.x_columns, group.X[i])
            ] + [
                f"{idx}:{float(value)!r}"
                for idx, value in zip(cmap.r_columns, group.R[i])
            ]
            buffer.write(f"{int(rel[i])} qid:{group.query_id} " + " ".join(pairs) + "\n")
    text = buffer.getvalue()
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Bundled miniature dataset


def make_demo_groups(seed: int = 77) -> list[QueryGroup]:
    """Five small queries with planted features, noisy lists, and 0-2 grades.

    The lists are noisy enough that aggregation cannot ace the queries, which
    leaves headroom for the list-augmentation experiment bundled with the CLI.
    """
    rng = np.random.default_rng(seed)
    groups = []
    for q in range(1, 6):
        n, d = 20, 4
        X = rng.standard_normal((n, d))
        w = rng.standard_normal(d)
        truth = X @ w + 0.6 * float((X @ w).std()) * rng.standard_normal(n)
        scale = float(truth.std())
        lists = np.column_stack(
            [
                truth + 1.0 * scale,
                truth + 1.0 * scale * rng.standard_normal(n),
                truth + 1.4 * scale * rng.standard_normal(n),
                scale * rng.standard_normal(n),
            ]
        )
        cut_lo, cut_hi = np.quantile(truth, [0.5, 0.8])
        grades = np.where(truth >= cut_hi, 2, np.where(truth >= cut_lo, 1, 0))
        groups.append(
            QueryGroup(query_id=str(q), X=X, R=lists, relevance=grades)
        )
    return groups


def demo_dataset_path() -> str:
    """Path of the bundled miniature LETOR file (column preset: "mini")."""
    return os.path.join(os.path.dirname(__file__), "fixtures", "mini.letor")


def write_demo_dataset(path, seed: int = 77) -> None:
    """Regenerate the bundled miniature dataset at ``path``."""
    write_letor(make_demo_groups(seed), path, COLUMN_PRESETS["mini"])
