"""Scalar special functions: gamma, Mittag-Leffler, and the power rule.

The power rule

    J^alpha t^mu = Gamma(mu + 1) / Gamma(mu + alpha + 1) * t^(mu + alpha)

is the closed form every operator test in the package is checked against.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, PrecisionLossError
from .order import FracOrder, as_order

__all__ = ["gamma", "mittag_leffler", "power_rule", "ML_MAX_ABS_Z"]

#: Largest |z| for which :func:`mittag_leffler` is in contract.
ML_MAX_ABS_Z = 10.0

_ML_REL_TOL = 1e-12
# rounding noise from cancelling terms, relative to the result
_ML_ROUNDING_TOL = 1e-10
_LOG_MAX = math.log(np.finfo(float).max)


def gamma(x: float) -> float:
    """Gamma function for x > 0.

    Backed by :func:`math.gamma` (a Lanczos approximation, relative error
    near machine precision on the positive axis).
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"gamma is only provided for finite x > 0, got {x!r}")
    return math.gamma(x)


def power_rule(mu: float, alpha: FracOrder | float) -> float:
    """Coefficient of t^(mu+alpha) in J^alpha t^mu, i.e. Gamma(mu+1)/Gamma(mu+alpha+1)."""
    a = as_order(alpha).alpha
    mu = float(mu)
    if not mu > -1:
        raise DomainError(f"J^alpha t^mu diverges for mu <= -1 (mu={mu})")
    if mu + a + 1 < 170:
        return math.gamma(mu + 1) / math.gamma(mu + a + 1)
    return math.exp(math.lgamma(mu + 1) - math.lgamma(mu + a + 1))


def mittag_leffler(alpha: FracOrder | float, z):
    """One-parameter Mittag-Leffler function E_alpha(z) for 0 < alpha <= 1.

    Sums z^k / Gamma(alpha k + 1) until the remainder, bounded by a geometric
    series (term ratios decrease monotonically in k), is below 1e-12 times the
    partial sum. Only real |z| <= 10 is in contract.

    Accepts a scalar or an array for ``z`` and returns the same shape.

    Raises
    ------
    OverflowError
        A term or partial sum leaves double range.
    PrecisionLossError
        Alternating terms cancel so badly that the rounding error would
        exceed 1e-10 of the result (large negative z with small alpha).
    """
    a = as_order(alpha).alpha
    if a > 1:
        raise DomainError(f"mittag_leffler supports 0 < alpha <= 1, got {a}")
    zarr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zarr)) or np.any(np.abs(zarr) > ML_MAX_ABS_Z):
        raise DomainError(f"mittag_leffler is only in contract for |z| <= {ML_MAX_ABS_Z}")

    flat = zarr.ravel()
    out = np.empty_like(flat)
    for n, zz in enumerate(flat):
        out[n] = _ml_series(a, float(zz))
    if zarr.ndim == 0:
        return float(out[0])
    return out.reshape(zarr.shape)


def _ml_series(a: float, z: float) -> float:
    if z == 0.0:
        return 1.0
    logz = math.log(abs(z))
    neg = z < 0
    terms = [1.0]
    abs_sum = 1.0
    k = 0
    while True:
        k += 1
        logt = k * logz - math.lgamma(a * k + 1)
        if logt > _LOG_MAX:
            raise OverflowError(f"Mittag-Leffler term {k} overflows for alpha={a}, z={z}")
        t = math.exp(logt)
        abs_sum += t
        if abs_sum > np.finfo(float).max:
            raise OverflowError(f"Mittag-Leffler partial sums overflow for alpha={a}, z={z}")
        terms.append(-t if (neg and k % 2) else t)
        # ratio of the next term to this one; decreasing in k
        ratio = math.exp(logz + math.lgamma(a * k + 1) - math.lgamma(a * (k + 1) + 1))
        if ratio < 1.0:
            partial = math.fsum(terms)
            tail = t * ratio / (1.0 - ratio)
            if tail <= _ML_REL_TOL * abs(partial):
                break
        if k > 100000:  # pragma: no cover - cannot happen for |z| <= 10, alpha >= ~0.2
            raise PrecisionLossError(f"Mittag-Leffler series did not settle for alpha={a}, z={z}")
    value = math.fsum(terms)
    if np.finfo(float).eps * abs_sum > _ML_ROUNDING_TOL * abs(value):
        raise PrecisionLossError(
            f"cancellation in the Mittag-Leffler series for alpha={a}, z={z}: "
            f"terms up to {abs_sum:.3g} sum to {value:.3g}"
        )
    return value
