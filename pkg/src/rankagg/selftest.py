"""Built-in sanity suite: solver-vs-oracle checks runnable from the CLI.

Each check compares a fast implementation against an independent brute-force
computation. The checks intentionally call the public entry points through
their modules (``isotonic.pav_fit`` etc.) so a corrupted implementation is
caught even under monkeypatching.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import permutations

import numpy as np

from . import bregman, isotonic, metrics
from .bregman import SQUARED_EUCLIDEAN, GENERALIZED_I, KL
from .glm import objective_gradient, objective_value
from .isotonic import Ordering


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def as_dict(self):
        return asdict(self)


def l2_isotonic_oracle(values: np.ndarray) -> np.ndarray:
    """Least-squares isotonic fit by the max-min formula (O(n^3))."""
    n = values.size
    fitted = np.empty(n)
    for i in range(n):
        best = -np.inf
        for j in range(i + 1):
            low = min(float(np.mean(values[j : k + 1])) for k in range(i, n))
            best = max(best, low)
        fitted[i] = best
    return fitted


def _random_partition(rng: np.random.Generator, n: int) -> Ordering:
    cuts = sorted(rng.choice(range(1, n), size=rng.integers(0, n - 1), replace=False)) if n > 1 else []
    perm = rng.permutation(n)
    blocks = []
    start = 0
    for cut in list(cuts) + [n]:
        blocks.append(perm[start:cut])
        start = cut
    return Ordering.from_blocks(blocks)


def brute_force_isotonic(values: np.ndarray, constraint: Ordering) -> float:
    """Minimum squared-error objective over every refinement of ``constraint``."""
    best = np.inf
    for refinement in _refinements(constraint):
        chain = values[np.asarray(refinement)]
        fitted = l2_isotonic_oracle(chain)
        best = min(best, 0.5 * float(np.sum((fitted - chain) ** 2)))
    return best


def _refinements(constraint: Ordering):
    pools = [list(permutations(block)) for block in constraint.blocks]

    def rec(i, acc):
        if i == len(pools):
            yield tuple(acc)
            return
        for option in pools[i]:
            yield from rec(i + 1, acc + list(option))

    yield from rec(0, [])


def check_pav_oracle(trials: int = 120, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        theta = rng.normal(size=n)
        constraint = _random_partition(rng, n)
        sol = isotonic.pav_fit(SQUARED_EUCLIDEAN, theta, constraint)
        expected = brute_force_isotonic(theta, constraint)
        worst = max(worst, abs(sol.objective - expected))
    return CheckResult(
        "pav-oracle", worst <= 1e-6, f"max objective gap {worst:.3e} over {trials} instances"
    )


def check_glm_gradients(seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for spec in (SQUARED_EUCLIDEAN, KL, GENERALIZED_I):
        for _ in range(20):
            n, m = 8, 3
            design = rng.normal(size=(n, m)) * 0.4
            w = rng.normal(size=m) * 0.3
            if spec is KL:
                raw = rng.uniform(0.2, 1.0, size=n)
                target = raw / raw.sum()
            elif spec is GENERALIZED_I:
                target = rng.uniform(0.2, 3.0, size=n)
            else:
                target = rng.normal(size=n)
            grad = objective_gradient(spec, design, target, w)
            fd = np.empty(m)
            h = 1e-6
            for k in range(m):
                up = w.copy()
                up[k] += h
                dn = w.copy()
                dn[k] -= h
                fd[k] = (
                    objective_value(spec, design, target, up)
                    - objective_value(spec, design, target, dn)
                ) / (2 * h)
            scale = max(1.0, float(np.abs(fd).max()))
            worst = max(worst, float(np.abs(grad - fd).max()) / scale)
    return CheckResult("glm-gradient", worst <= 1e-5, f"max relative gap {worst:.3e}")


def _tau_brute(a: np.ndarray, b: np.ndarray) -> float:
    c = d = ta = tb = 0
    n = a.size
    for i in range(n):
        for j in range(i + 1, n):
            sa = np.sign(a[i] - a[j])
            sb = np.sign(b[i] - b[j])
            if sa and sb:
                if sa == sb:
                    c += 1
                else:
                    d += 1
            elif sa == 0 and sb != 0:
                ta += 1
            elif sb == 0 and sa != 0:
                tb += 1
    return (c - d) / np.sqrt((c + d + ta) * (c + d + tb))


def check_metric_oracles(trials: int = 60, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 8))
        a = rng.integers(0, 4, size=n).astype(float)
        b = rng.normal(size=n)
        if np.all(a == a[0]):
            a[0] += 1.0
        worst = max(worst, abs(metrics.kendall_tau(a, b) - _tau_brute(a, b)))
        ra = metrics.midranks(a)
        rb = metrics.midranks(b)
        rho_oracle = float(np.corrcoef(ra, rb)[0, 1])
        worst = max(worst, abs(metrics.spearman_rho(a, b) - rho_oracle))
        rel = rng.integers(0, 3, size=n)
        k = int(rng.integers(1, n + 1))
        order = sorted(range(n), key=lambda i: (-b[i], i))
        dcg = sum((2.0 ** rel[order[i]] - 1.0) / np.log2(i + 2) for i in range(k))
        ideal = sum(
            (2.0**g - 1.0) / np.log2(i + 2)
            for i, g in enumerate(sorted(rel, reverse=True)[:k])
        )
        ndcg_oracle = dcg / ideal if ideal > 0 else 0.0
        worst = max(worst, abs(metrics.ndcg_at_k(b, rel, k) - ndcg_oracle))
    return CheckResult("metric-oracles", worst <= 1e-12, f"max gap {worst:.3e}")


def check_link_roundtrip(seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for spec in (SQUARED_EUCLIDEAN, KL, GENERALIZED_I):
        for _ in range(50):
            if spec is KL:
                raw = rng.uniform(0.05, 1.0, size=5)
                x = raw / raw.sum()
            elif spec is GENERALIZED_I:
                x = rng.uniform(0.05, 5.0, size=5)
            else:
                x = rng.normal(size=5)
            back = bregman.inv_grad_phi(spec, bregman.grad_phi(spec, x))
            worst = max(worst, float(np.abs(back - x).max() / np.abs(x).max()))
    return CheckResult("link-roundtrip", worst <= 1e-12, f"max relative gap {worst:.3e}")


def run_all() -> list[CheckResult]:
    return [
        check_pav_oracle(),
        check_glm_gradients(),
        check_metric_oracles(),
        check_link_roundtrip(),
    ]
