"""Bregman divergences and link functions for the three supported GLM families.

Each family pairs a strictly convex generator with its gradient (the link
mapping mean values to natural parameters) and the inverse link:

===================  ======================  ============  ==============
family               generator               link          inverse link
===================  ======================  ============  ==============
squared Euclidean    0.5 * ||x||^2           x             theta
KL                   sum x_i log x_i         1 + log x     exp(theta - 1)
generalized I        sum x_i log x_i - x_i   log x         exp(theta)
===================  ======================  ============  ==============

Divergences are evaluated through their closed forms (not the generic
``phi(y) - phi(x) - <grad phi(x), y - x>`` expansion) for numerical
stability; the generic expansion is used as an oracle in the test suite.

All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NaturalParamOverflowError

#: Default bound on |theta| for exponential links. Exceeding it during an
#: optimization almost always means the iterates are diverging, so we fail
#: loudly instead of overflowing.
NATURAL_PARAM_CAP = 50.0

#: Simplex membership tolerance for the KL family: entries in (0, 1] and
#: the sum within this distance of 1.
SIMPLEX_SUM_TOL = 1e-8


class Family(enum.Enum):
    SQUARED_EUCLIDEAN = "squared_euclidean"
    KL = "kl"
    GENERALIZED_I = "generalized_i"


_FAMILY_ALIASES = {
    "squared_euclidean": Family.SQUARED_EUCLIDEAN,
    "gaussian": Family.SQUARED_EUCLIDEAN,
    "l2": Family.SQUARED_EUCLIDEAN,
    "kl": Family.KL,
    "generalized_i": Family.GENERALIZED_I,
    "gi": Family.GENERALIZED_I,
    "poisson": Family.GENERALIZED_I,
}

_DOMAIN_NAMES = {
    Family.SQUARED_EUCLIDEAN: "all reals",
    Family.KL: "probability simplex",
    Family.GENERALIZED_I: "strictly positive orthant",
}


@dataclass(frozen=True)
class DivergenceSpec:
    """Selects a divergence family together with its numeric guards.

    ``natural_param_cap`` bounds |theta| for the exponential links; it is
    ignored by the squared Euclidean family whose link is the identity.
    """

    family: Family
    natural_param_cap: float = NATURAL_PARAM_CAP

    @classmethod
    def from_name(cls, name: str, **kwargs) -> "DivergenceSpec":
        key = name.strip().lower().replace("-", "_")
        if key not in _FAMILY_ALIASES:
            raise ValueError(
                f"unknown divergence family {name!r}; "
                f"expected one of {sorted(_FAMILY_ALIASES)}"
            )
        return cls(_FAMILY_ALIASES[key], **kwargs)

    @property
    def domain(self) -> str:
        return _DOMAIN_NAMES[self.family]

    @property
    def has_exp_link(self) -> bool:
        return self.family in (Family.KL, Family.GENERALIZED_I)


SQUARED_EUCLIDEAN = DivergenceSpec(Family.SQUARED_EUCLIDEAN)
KL = DivergenceSpec(Family.KL)
GENERALIZED_I = DivergenceSpec(Family.GENERALIZED_I)


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        arr = np.atleast_1d(arr.squeeze())
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {np.shape(x)}")
    return arr


def check_domain(spec: DivergenceSpec, x, name: str = "x") -> np.ndarray:
    """Validate that ``x`` lies in the family's domain and return it as an array."""
    arr = _as_vector(x, name)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    if spec.family is Family.SQUARED_EUCLIDEAN:
        return arr
    if np.any(arr <= 0.0):
        raise DomainError(
            f"{name} must be strictly positive for the {spec.family.value} family"
        )
    if spec.family is Family.KL:
        if np.any(arr > 1.0):
            raise DomainError(f"{name} has entries above 1; not on the simplex")
        total = float(arr.sum())
        if abs(total - 1.0) > SIMPLEX_SUM_TOL:
            raise DomainError(
                f"{name} sums to {total:.12g}; not on the simplex "
                f"(tolerance {SIMPLEX_SUM_TOL})"
            )
    return arr


def phi(spec: DivergenceSpec, x) -> float:
    """Convex generator of the family, evaluated at ``x``."""
    arr = check_domain(spec, x)
    if spec.family is Family.SQUARED_EUCLIDEAN:
        return 0.5 * float(arr @ arr)
    if spec.family is Family.KL:
        return float(np.sum(arr * np.log(arr)))
    return float(np.sum(arr * np.log(arr) - arr))


def grad_phi(spec: DivergenceSpec, x) -> np.ndarray:
    """Link function: maps mean values to natural parameters, elementwise."""
    arr = check_domain(spec, x)
    if spec.family is Family.SQUARED_EUCLIDEAN:
        return arr.copy()
    if spec.family is Family.KL:
        return 1.0 + np.log(arr)
    return np.log(arr)


def inv_grad_phi(spec: DivergenceSpec, theta) -> np.ndarray:
    """Inverse link: maps natural parameters to mean values, elementwise.

    Raises :class:`NaturalParamOverflowError` when an exponential-link
    natural parameter exceeds ``spec.natural_param_cap`` in magnitude.
    """
    arr = _as_vector(theta, "theta")
    if not np.all(np.isfinite(arr)):
        raise DomainError("theta contains non-finite entries")
    if spec.family is Family.SQUARED_EUCLIDEAN:
        return arr.copy()
    worst = float(np.max(np.abs(arr))) if arr.size else 0.0
    if worst > spec.natural_param_cap:
        raise NaturalParamOverflowError(
            f"|theta| = {worst:.6g} exceeds the cap {spec.natural_param_cap}; "
            "iterates are diverging",
            offending=arr,
        )
    if spec.family is Family.KL:
        return np.exp(arr - 1.0)
    return np.exp(arr)


def divergence(spec: DivergenceSpec, y, x) -> float:
    """Bregman divergence D(y || x), via the family's closed form.

    ``y`` and ``x`` must both lie in the family's domain; the result is
    nonnegative and zero exactly when ``y == x``.
    """
    yv = check_domain(spec, y, "y")
    xv = check_domain(spec, x, "x")
    if yv.shape != xv.shape:
        raise ValueError(f"shape mismatch: y {yv.shape} vs x {xv.shape}")
    if spec.family is Family.SQUARED_EUCLIDEAN:
        diff = yv - xv
        return 0.5 * float(diff @ diff)
    if spec.family is Family.KL:
        return float(np.sum(yv * np.log(yv / xv)))
    return float(np.sum(yv * np.log(yv / xv) - yv + xv))
