"""Command-line harness: synthetic experiments, file-based aggregation runs,
and the built-in selftest.

All outputs are CSV files whose first line is a versioned schema comment;
every command is deterministic for a fixed ``--seed``.
"""

from __future__ import annotations

import configparser
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import baselines, data, selftest
from .aggregate import AggregationConfig, mr_rank_agg, recovery_config
from .bregman import SQUARED_EUCLIDEAN, DivergenceSpec
from .data import SyntheticSpec, augment_with_quality_list, parse_letor, resolve_column_map
from .errors import RankAggError
from .glm import Regularization
from .metrics import kendall_tau, ndcg_at_k, spearman_rho

CSV_VERSION = "rankagg-csv v1"

MR_METHOD = "mr"
ALL_METHODS = (MR_METHOD,) + baselines.METHOD_NAMES


def _configure_logging():
    level = os.environ.get("RANKAGG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


@click.group()
def main():
    """Unsupervised rank aggregation with object features."""
    _configure_logging()


# ---------------------------------------------------------------------------
# config handling


def _load_config(path: str) -> dict[str, str]:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read(), source=path)
    except OSError as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}")
    except configparser.Error as exc:
        raise click.UsageError(f"config parse error in {path}: {exc}")
    return {k: v.strip() for k, v in parser["run"].items()}


def _parse_reg(text: str, where: str) -> Regularization:
    text = text.strip().lower()
    if text in ("", "none"):
        return Regularization.none()
    kind, _, raw = text.partition(":")
    try:
        strength = float(raw)
    except ValueError:
        raise click.UsageError(f"{where}: expected 'lasso:<s>' or 'ridge:<s>', got {text!r}")
    if kind == "lasso":
        return Regularization.lasso(strength)
    if kind == "ridge":
        return Regularization.ridge(strength)
    raise click.UsageError(f"{where}: unknown regularization kind {kind!r}")


def _config_int(conf, key, default):
    try:
        return int(conf.get(key, default))
    except ValueError:
        raise click.UsageError(f"config key '{key}' must be an integer, got {conf[key]!r}")


def _config_float(conf, key, default):
    try:
        return float(conf.get(key, default))
    except ValueError:
        raise click.UsageError(f"config key '{key}' must be a number, got {conf[key]!r}")


def _write_csv(path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {CSV_VERSION} {schema}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _method_scores(method: str, R, X, cfg: AggregationConfig):
    if method == MR_METHOD:
        result = mr_rank_agg(R, X, cfg)
        return result.consensus_order.rank_vector().astype(float), result
    return baselines.baseline_scores(R, method), None


# ---------------------------------------------------------------------------
# synth


@main.command("synth")
@click.option("--config", "config_path", required=True, type=click.Path(), help="INI config file.")
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--output", type=click.Path(), default=".", help="Output directory for CSVs.")
@click.option("--jobs", type=int, default=1, help="Unused for the single synthetic query.")
def cmd_synth(config_path, seed, output, jobs):
    """Run the synthetic-recovery experiment described by a config file."""
    conf = _load_config(config_path)
    if "family" not in conf:
        raise click.UsageError("config missing required key 'family'")
    try:
        family = DivergenceSpec.from_name(conf["family"])
    except ValueError as exc:
        raise click.UsageError(str(exc))

    spec = SyntheticSpec(
        n=_config_int(conf, "n", 200),
        d=_config_int(conf, "d", 20),
        family=family,
        n_spurious=_config_int(conf, "spurious", 4),
        seed=seed if seed is not None else _config_int(conf, "seed", 0),
    )
    base = recovery_config(family)
    cfg = AggregationConfig(
        phi_z=base.phi_z,
        phi_r=base.phi_r,
        lam=_config_float(conf, "lambda", base.lam),
        epsilon_margin=_config_float(conf, "margin", base.epsilon_margin),
        init_method=conf.get("init", base.init_method),
        reg_beta=_parse_reg(conf.get("reg_beta", "lasso:3.0"), "reg_beta"),
        reg_omega=_parse_reg(conf.get("reg_omega", "none"), "reg_omega"),
        outer_tol=_config_float(conf, "outer_tol", base.outer_tol),
        outer_max_iter=_config_int(conf, "outer_max_iter", base.outer_max_iter),
        list_preprocessing=conf.get("list_preprocessing", base.list_preprocessing),
    )

    group, rho_star, _ = data.generate_synthetic(spec)
    os.makedirs(output, exist_ok=True)

    try:
        result = mr_rank_agg(group.R, group.X, cfg)
    except RankAggError as exc:
        click.echo(f"aggregation failed: {exc}", err=True)
        raise SystemExit(1)

    trace_rows = []
    for rec in result.records:
        trace_rows.append(
            (
                rec.index,
                kendall_tau(rec.consensus.rank_vector(), rho_star),
                spearman_rho(rec.consensus.rank_vector(), rho_star),
                kendall_tau(rec.consensus_features.rank_vector(), rho_star),
                spearman_rho(rec.consensus_features.rank_vector(), rho_star),
                rec.coupled_cost,
                int(rec.margin_in_z or rec.margin_in_r),
            )
        )
    _write_csv(
        os.path.join(output, "synth_trace.csv"),
        "synth-trace",
        ["iteration", "kendall_tau", "spearman_rho", "kendall_tau_features",
         "spearman_rho_features", "coupled_cost", "margin_active"],
        trace_rows,
    )

    summary_rows = []
    ndcg_rows = []
    ks = list(range(1, 11))
    for method in ALL_METHODS:
        if method == MR_METHOD:
            scores = result.consensus_order.rank_vector().astype(float)
        else:
            scores = baselines.baseline_scores(group.R, method)
        summary_rows.append(
            (method, kendall_tau(scores, rho_star), spearman_rho(scores, rho_star))
        )
        ndcg_rows.append(
            [method] + [ndcg_at_k(scores, group.relevance, k) for k in ks]
        )
    _write_csv(
        os.path.join(output, "synth_summary.csv"),
        "synth-summary",
        ["method", "kendall_tau", "spearman_rho"],
        summary_rows,
    )
    _write_csv(
        os.path.join(output, "synth_ndcg.csv"),
        "ndcg-table",
        ["method"] + [f"k{k}" for k in ks],
        ndcg_rows,
    )

    click.echo(f"seed {spec.seed} family {family.family.value} "
               f"({result.iterations} outer iterations, converged={result.converged})")
    click.echo(f"{'method':<10} {'kendall_tau':>12} {'spearman_rho':>13}")
    for method, tau, rho in summary_rows:
        click.echo(f"{method:<10} {tau:>12.6f} {rho:>13.6f}")


# ---------------------------------------------------------------------------
# aggregate


def _read_augment_scores(path, groups):
    """Oracle scores per query: LETOR-style grade lines keyed by qid, or one
    float per line aligned with the dataset's item order."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.split("#")[0].strip()]
    if any("qid:" in ln for ln in lines):
        per_qid: dict[str, list[float]] = {}
        for ln in lines:
            tokens = ln.split("#")[0].split()
            if len(tokens) < 2 or not tokens[1].startswith("qid:"):
                raise click.UsageError(f"augment file {path}: malformed line {ln!r}")
            per_qid.setdefault(tokens[1][4:], []).append(float(tokens[0]))
        out = {}
        for group in groups:
            if group.query_id not in per_qid:
                raise click.UsageError(f"augment file lacks scores for query {group.query_id}")
            out[group.query_id] = np.asarray(per_qid[group.query_id], dtype=float)
        return out
    values = [float(tok) for ln in lines for tok in ln.split()]
    total = sum(g.n_items for g in groups)
    if len(values) != total:
        raise click.UsageError(
            f"augment file has {len(values)} scores, dataset has {total} items"
        )
    out = {}
    pos = 0
    for group in groups:
        out[group.query_id] = np.asarray(values[pos : pos + group.n_items])
        pos += group.n_items
    return out


@main.command("aggregate")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--columns", default="mini", help="Column-map preset or 'x=1-4;r=5-8' spec.")
@click.option("--methods", default="borda,combmnz,mr", help="Comma-separated method list.")
@click.option("--output", type=click.Path(), default=".", help="Output directory.")
@click.option("--augment", "augment_path", type=click.Path(exists=True), default=None,
              help="LETOR-grades or plain-scores file appended as one extra rank list.")
@click.option("--family", default="gaussian", help="GLM family for the MR runs.")
@click.option("--jobs", type=int, default=1, help="Concurrent queries.")
@click.option("--seed", type=int, default=0, help="Recorded in outputs; the pipeline is deterministic.")
def cmd_aggregate(dataset, columns, methods, output, augment_path, family, jobs, seed):
    """Aggregate a LETOR-format dataset per query and report mean NDCG@K."""
    method_list = [m.strip().lower() for m in methods.split(",") if m.strip()]
    for m in method_list:
        if m not in ALL_METHODS:
            raise click.UsageError(
                f"unknown method {m!r}; valid methods: {', '.join(ALL_METHODS)}"
            )
    try:
        cmap = resolve_column_map(columns)
        groups = parse_letor(dataset, cmap)
    except RankAggError as exc:
        raise click.UsageError(str(exc))
    if not groups:
        raise click.UsageError(f"dataset {dataset} contains no queries")
    try:
        spec = DivergenceSpec.from_name(family)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    if augment_path is not None:
        oracle = _read_augment_scores(augment_path, groups)
        groups = [augment_with_quality_list(g, oracle[g.query_id]) for g in groups]

    cfg = recovery_config(spec)
    ks = list(range(1, 11))

    def run_query(group):
        per_method = {}
        for method in method_list:
            scores, _ = _method_scores(method, group.R, group.X, cfg)
            per_method[method] = scores
        return group.query_id, per_method

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(run_query, groups))
    else:
        results = dict(run_query(g) for g in groups)

    os.makedirs(output, exist_ok=True)
    rows = []
    skipped = 0
    for method in method_list:
        cells = [method]
        for k in ks:
            values = []
            skipped = 0
            for group in groups:
                if not np.any(group.relevance > 0):
                    skipped += 1
                    continue
                values.append(
                    ndcg_at_k(
                        results[group.query_id][method],
                        group.relevance,
                        min(k, group.n_items),
                    )
                )
            if not values:
                raise click.UsageError("every query has zero ideal DCG; nothing to average")
            cells.append(sum(values) / len(values))
        rows.append(cells)
    if skipped:
        click.echo(f"note: {skipped} queries skipped (all-zero relevance)", err=True)
    _write_csv(
        os.path.join(output, "aggregate_ndcg.csv"),
        "ndcg-table",
        ["method"] + [f"k{k}" for k in ks],
        rows,
    )
    click.echo(f"{len(groups)} queries, methods: {', '.join(method_list)}"
               + (" (augmented)" if augment_path else ""))
    for cells in rows:
        click.echo(f"{cells[0]:<10} " + " ".join(f"{v:.4f}" for v in cells[1:]))


# ---------------------------------------------------------------------------
# selftest


@main.command("selftest")
@click.option("--json", "as_json", is_flag=True, help="Emit a machine-readable report.")
def cmd_selftest(as_json):
    """Run the PAV oracle suite, gradient checks, and metric oracles."""
    checks = selftest.run_all()
    passed = all(c.passed for c in checks)
    if as_json:
        click.echo(json.dumps({"passed": passed, "checks": [c.as_dict() for c in checks]}))
    else:
        for c in checks:
            click.echo(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    raise SystemExit(0 if passed else 1)


if __name__ == "__main__":
    main()
