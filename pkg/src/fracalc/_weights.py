"""Product-integration weights for the kernel ``(t - s)^(alpha-1) / Gamma(alpha)``.

For a cell of width ``h`` whose far end sits at distance ``x + h`` from the
evaluation point, and ``x >= 0`` its near end:

* cell-constant data contribute ``((x+h)^a - x^a) / Gamma(a+1)``;
* node-linear data contribute ``near * v_near + far * v_far`` with the
  moments of ``y^(a-1)`` against the two hat functions.
"""

from __future__ import annotations

import math

import numpy as np


def powdiff(x, h, beta: float):
    """``(x + h)^beta - x^beta`` without cancellation, for ``x >= 0, h > 0``."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    top = x + h
    with np.errstate(divide="ignore"):
        return top**beta * -np.expm1(beta * np.log1p(-h / top))


def cell_weights(x, h, alpha: float):
    """Integral of the kernel over cells at near-distance ``x``."""
    return powdiff(x, h, alpha) / math.gamma(alpha + 1)


def linear_weights(x, h, alpha: float):
    """``(near, far)`` hat-function weights for cells at near-distance ``x``."""
    p1 = powdiff(x, h, alpha) / alpha
    p2 = powdiff(x, h, alpha + 1) / (alpha + 1)
    g = math.gamma(alpha)
    near = ((x + h) * p1 - p2) / (h * g)
    far = (p2 - x * p1) / (h * g)
    return near, far


def toeplitz_cell(alpha: float, N: int, h: float) -> np.ndarray:
    """Cell weights on a uniform mesh indexed by the cell offset ``d = 0..N-1``."""
    d = np.arange(N, dtype=float)
    return h**alpha * cell_weights(d, 1.0, alpha)


def toeplitz_linear(alpha: float, N: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Node weights on a uniform mesh.

    Returns ``(coef, end)``: interior node ``j`` at offset ``d`` from the
    evaluation node gets ``coef[d]``; the boundary node at offset ``d + 1``
    only sees one cell and gets ``end[d]``.
    """
    d = np.arange(N, dtype=float)
    near, far = linear_weights(d, 1.0, alpha)
    coef = near.copy()
    coef[1:] += far[:-1]
    s = h**alpha
    return s * coef, s * far


def is_uniform_nodes(t: np.ndarray) -> bool:
    h = np.diff(t)
    return bool(np.all(np.abs(h - h[0]) <= 1e-13 * h[0]))
