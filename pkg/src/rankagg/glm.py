"""GLM parameter estimation under a Bregman matching loss.

Fits ``min_w D(target || inv_grad_phi(design @ w)) + penalty`` for any of the
three supported families. Smooth penalties (none, ridge) use damped Newton
steps with an Armijo backtracking line search; the L1 penalty uses proximal
gradient descent with backtracked step sizes, which produces exact zeros.

Natural parameters are unconstrained for every family, so ``w = 0`` is always
a feasible, deterministic starting point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import bregman
from .bregman import DivergenceSpec, Family
from .errors import NaturalParamOverflowError

#: Diagonal ridge floor on the Newton system; real-world feature matrices
#: (e.g. LETOR ones) are collinear enough that the plain Hessian can be
#: numerically singular.
HESSIAN_FLOOR = 1e-10

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-13


class RegKind(enum.Enum):
    NONE = "none"
    RIDGE_L2 = "ridge_l2"
    LASSO_L1 = "lasso_l1"


@dataclass(frozen=True)
class Regularization:
    """Penalty on the GLM weights. ``strength == 0`` behaves like none.

    Ridge adds ``strength/2 * ||w||^2``, lasso adds ``strength * ||w||_1``;
    neither is applied to the intercept.
    """

    kind: RegKind = RegKind.NONE
    strength: float = 0.0

    def __post_init__(self):
        if self.strength < 0.0:
            raise ValueError("regularization strength must be nonnegative")

    @classmethod
    def none(cls) -> "Regularization":
        return cls(RegKind.NONE, 0.0)

    @classmethod
    def ridge(cls, strength: float) -> "Regularization":
        return cls(RegKind.RIDGE_L2, strength)

    @classmethod
    def lasso(cls, strength: float) -> "Regularization":
        return cls(RegKind.LASSO_L1, strength)

    @property
    def is_smooth(self) -> bool:
        return self.kind is not RegKind.LASSO_L1 or self.strength == 0.0


@dataclass(frozen=True)
class GlmOptions:
    tol: float = 1e-9
    max_iter: int = 200
    intercept: bool = True
    init_weights: np.ndarray | None = None
    init_intercept: float = 0.0


@dataclass
class GlmFit:
    """Fitted GLM: coefficients per design column plus an optional intercept.

    ``objective`` is the final (unpenalized) divergence value;
    ``objective_trace`` records the penalized objective per accepted iterate.
    """

    weights: np.ndarray
    intercept: float
    objective: float
    iterations: int
    converged: bool
    objective_trace: list[float] = field(default_factory=list)

    def linear_predictor(self, design) -> np.ndarray:
        return np.asarray(design, dtype=float) @ self.weights + self.intercept

    def fitted_means(self, spec: DivergenceSpec, design) -> np.ndarray:
        return bregman.inv_grad_phi(spec, self.linear_predictor(design))


def objective_value(
    spec: DivergenceSpec, design: np.ndarray, target: np.ndarray, w: np.ndarray
) -> float:
    """Unpenalized divergence D(target || inv_grad_phi(design @ w)).

    Returns ``inf`` when the natural parameters exceed the family's cap so
    line searches can treat capped iterates as infeasible.
    """
    theta = design @ w
    if spec.has_exp_link and theta.size and np.max(np.abs(theta)) > spec.natural_param_cap:
        return np.inf
    if spec.family is Family.SQUARED_EUCLIDEAN:
        diff = target - theta
        return 0.5 * float(diff @ diff)
    mu = np.exp(theta - 1.0) if spec.family is Family.KL else np.exp(theta)
    value = float(np.sum(target * np.log(target / mu) - target + mu))
    return value


def objective_gradient(
    spec: DivergenceSpec, design: np.ndarray, target: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """Analytic gradient of :func:`objective_value` with respect to ``w``."""
    theta = design @ w
    mu = bregman.inv_grad_phi(spec, theta)
    return design.T @ (mu - target)


def _link_derivative(spec: DivergenceSpec, theta: np.ndarray) -> np.ndarray:
    if spec.family is Family.SQUARED_EUCLIDEAN:
        return np.ones_like(theta)
    if spec.family is Family.KL:
        return np.exp(theta - 1.0)
    return np.exp(theta)


def _augment(design: np.ndarray, intercept: bool) -> np.ndarray:
    if not intercept:
        return design
    return np.hstack([design, np.ones((design.shape[0], 1))])


def _penalty_mask(m: int, intercept: bool) -> np.ndarray:
    mask = np.ones(m)
    if intercept:
        mask[-1] = 0.0
    return mask


def fit_glm(
    spec: DivergenceSpec,
    design,
    target,
    reg: Regularization | None = None,
    opts: GlmOptions | None = None,
) -> GlmFit:
    """Estimate GLM weights for ``target`` against ``design``.

    For the squared Euclidean family with no penalty this reproduces the
    least-squares solution of the normal equations; for exponential links it
    runs damped Newton iterations on the convex matching loss. Raises
    :class:`NaturalParamOverflowError` when the iterates push the natural
    parameters against the family cap, which signals a diverging fit.
    """
    reg = reg or Regularization.none()
    opts = opts or GlmOptions()
    M = np.asarray(design, dtype=float)
    if M.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("design contains non-finite entries")
    z = bregman.check_domain(spec, target, "target")
    if z.size != M.shape[0]:
        raise ValueError(f"target length {z.size} != design rows {M.shape[0]}")

    A = _augment(M, opts.intercept)
    m = A.shape[1]
    w = np.zeros(m)
    if opts.init_weights is not None:
        w0 = np.asarray(opts.init_weights, dtype=float)
        if w0.size != M.shape[1]:
            raise ValueError("init_weights length must match design columns")
        w[: M.shape[1]] = w0
        if opts.intercept:
            w[-1] = opts.init_intercept

    if reg.is_smooth:
        w, trace, iters, converged = _newton(spec, A, z, w, reg, opts)
    else:
        w, trace, iters, converged = _proximal_gradient(spec, A, z, w, reg, opts)

    theta = A @ w
    if spec.has_exp_link and theta.size:
        worst = float(np.max(np.abs(theta)))
        if worst >= 0.999 * spec.natural_param_cap:
            raise NaturalParamOverflowError(
                f"fit drove |theta| to {worst:.4g}, at the cap "
                f"{spec.natural_param_cap}; the GLM solution is diverging",
                offending=w,
            )

    weights = w[: M.shape[1]].copy()
    intercept = float(w[-1]) if opts.intercept else 0.0
    final = objective_value(spec, A, z, w)
    return GlmFit(
        weights=weights,
        intercept=intercept,
        objective=final,
        iterations=iters,
        converged=converged,
        objective_trace=trace,
    )


def _smooth_penalty(reg: Regularization, w: np.ndarray, mask: np.ndarray) -> float:
    if reg.kind is RegKind.RIDGE_L2 and reg.strength > 0.0:
        return 0.5 * reg.strength * float((mask * w) @ w)
    return 0.0


def _newton(spec, A, z, w, reg, opts):
    mask = _penalty_mask(A.shape[1], opts.intercept)
    obj = objective_value(spec, A, z, w) + _smooth_penalty(reg, w, mask)
    trace = [obj]
    converged = False
    iters = 0
    for iters in range(1, opts.max_iter + 1):
        theta = A @ w
        mu = bregman.inv_grad_phi(spec, theta)
        grad = A.T @ (mu - z)
        if reg.kind is RegKind.RIDGE_L2:
            grad = grad + reg.strength * mask * w
        h = _link_derivative(spec, theta)
        H = A.T @ (A * h[:, None])
        diag = HESSIAN_FLOOR + (reg.strength if reg.kind is RegKind.RIDGE_L2 else 0.0)
        H = H + diag * np.eye(A.shape[1])
        if reg.kind is RegKind.RIDGE_L2 and opts.intercept:
            # ridge never shrinks the intercept
            H[-1, -1] -= reg.strength
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = -grad
        slope = float(grad @ step)
        if slope >= 0.0:  # not a descent direction; fall back to gradient
            step = -grad
            slope = float(grad @ step)
            if slope >= 0.0:
                converged = True
                break
        t_start = 1.0
        if spec.has_exp_link:
            # start the line search at the cap boundary so a huge Newton step
            # cannot strand the backtracking outside the feasible band
            dtheta = A @ step
            cap = spec.natural_param_cap
            with np.errstate(divide="ignore", invalid="ignore"):
                up = np.where(dtheta > 0, (cap - theta) / dtheta, np.inf)
                dn = np.where(dtheta < 0, (-cap - theta) / dtheta, np.inf)
            t_max = float(min(np.min(up), np.min(dn), np.inf))
            if np.isfinite(t_max) and t_max > 0:
                t_start = min(1.0, 0.99 * t_max)
        t = t_start
        t_floor = max(t_start * 1e-14, 1e-300)
        new_obj = np.inf
        while t >= t_floor:
            cand = w + t * step
            new_obj = objective_value(spec, A, z, cand) + _smooth_penalty(reg, cand, mask)
            if new_obj <= obj + _ARMIJO_C * t * slope:
                break
            t *= 0.5
        if t < t_floor or not np.isfinite(new_obj):
            converged = True  # cannot improve further at float precision
            break
        w = w + t * step
        trace.append(new_obj)
        if obj - new_obj <= opts.tol * abs(obj):
            obj = new_obj
            converged = True
            break
        obj = new_obj
    return w, trace, iters, converged


def _soft_threshold(x: np.ndarray, radius: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - radius, 0.0)


def _proximal_gradient(spec, A, z, w, reg, opts):
    mask = _penalty_mask(A.shape[1], opts.intercept)

    def smooth(wv):
        return objective_value(spec, A, z, wv)

    def full(wv):
        return smooth(wv) + reg.strength * float(np.abs(mask * wv).sum())

    # crude Lipschitz seed from the Gram diagonal; backtracking fixes the rest
    lip = max(float(np.sum(A * A)), 1.0)
    obj = full(w)
    trace = [obj]
    converged = False
    iters = 0
    for iters in range(1, opts.max_iter + 1):
        g = smooth(w)
        grad = objective_gradient(spec, A, z, w)
        while True:
            step = 1.0 / lip
            cand = _soft_threshold(w - step * grad, step * reg.strength * mask)
            delta = cand - w
            g_cand = smooth(cand)
            if g_cand <= g + float(grad @ delta) + 0.5 * lip * float(delta @ delta) + 1e-15:
                break
            lip *= 2.0
            if lip > 1e18:
                break
        new_obj = full(cand)
        if not np.isfinite(new_obj) or new_obj > obj + 1e-15:
            converged = True
            break
        w = cand
        trace.append(new_obj)
        if obj - new_obj <= opts.tol * abs(obj):
            obj = new_obj
            converged = True
            break
        obj = new_obj
        lip = max(lip * 0.9, 1e-6)  # let the step size recover
    return w, trace, iters, converged
