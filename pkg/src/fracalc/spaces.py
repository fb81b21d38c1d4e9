"""Sobolev-Slobodecki norms, ``W_{alpha,p}`` norms and embedding scans."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError
from .frac_ops import derivative, frac_integral_left, invert_frac_integral
from .grid import LINEAR, GridFn, Mesh, lp_exponent, lp_norm
from .order import FracOrder, as_order

__all__ = [
    "EmbeddingScanReport",
    "SlobodeckiParams",
    "embedding_ratio",
    "embedding_scan",
    "slobodecki_norm",
    "slobodecki_seminorm",
    "wap_norm",
]

_GL4 = np.polynomial.legendre.leggauss(4)
_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class SlobodeckiParams:
    """Order ``alpha = m - 1 + sigma`` with ``0 < sigma < 1`` and a finite ``p >= 1``."""

    order: FracOrder
    p: float

    def __post_init__(self) -> None:
        order = as_order(self.order)
        order.require_fractional()
        p = lp_exponent(self.p)
        if math.isinf(p):
            raise DomainError("the Sobolev-Slobodecki norm needs a finite p")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "p", p)


def _as_params(params: SlobodeckiParams | FracOrder | float, p: float | None) -> SlobodeckiParams:
    if isinstance(params, SlobodeckiParams):
        return params
    if p is None:
        raise DomainError("pass SlobodeckiParams or both an order and p")
    return SlobodeckiParams(as_order(params), p)


def _gauss(nodes_w: tuple[np.ndarray, np.ndarray], lo: np.ndarray, hi: np.ndarray):
    """Gauss-Legendre points and weights mapped onto ``[lo, hi]`` (broadcast over rows)."""
    x, w = nodes_w
    half = 0.5 * (hi - lo)[..., None]
    return 0.5 * (hi + lo)[..., None] + half * x, half * w


def _diagonal_linear(slopes: np.ndarray, h: np.ndarray, p: float, sigma: float) -> float:
    # |D|^p |t-s|^g integrated exactly over a cell squared
    g = p - 1.0 - sigma * p
    return float(np.sum(np.abs(slopes) ** p * 2.0 * h ** (g + 2) / ((g + 1) * (g + 2))))


def _adjacent_linear(d1: np.ndarray, d2: np.ndarray, h1: np.ndarray, h2: np.ndarray, p: float, sigma: float) -> float:
    """Neighbouring cells ``[b-h1, b] x [b, b+h2]`` with slopes ``d1, d2``.

    With ``x = b - s``, ``y = t - b`` the integrand is homogeneous of degree
    ``g = p - 1 - sigma p`` in ``(x, y)``. Writing ``x = rho xi``,
    ``y = rho (1 - xi)`` the radial integral is exact and the remaining
    integral over ``xi`` is smooth between its break points.
    """
    g = p - 1.0 - sigma * p
    kink = h1 / (h1 + h2)
    with np.errstate(divide="ignore", invalid="ignore"):
        zero = np.where(d2 != d1, d2 / (d2 - d1), 0.0)
    zero = np.where((zero > 0) & (zero < 1), zero, kink)
    br = np.sort(np.stack([np.zeros_like(kink), kink, zero, np.ones_like(kink)], axis=-1), axis=-1)
    total = 0.0
    for k in range(3):
        xi, w = _gauss(_GL16, br[:, k], br[:, k + 1])
        with np.errstate(divide="ignore"):
            R = np.minimum(h1[:, None] / xi, h2[:, None] / (1.0 - xi))
        f = np.abs(d1[:, None] * xi + d2[:, None] * (1.0 - xi)) ** p * R ** (g + 2) / (g + 2)
        total += float(np.sum(w * f))
    return total


def _far_linear(t: np.ndarray, u: np.ndarray, p: float, sigma: float) -> float:
    """Cell pairs at least two cells apart, tensor Gauss-Legendre, ``s < t``."""
    N = t.size - 1
    beta = 1.0 + sigma * p
    total = 0.0
    for d in range(2, N):
        rule = _GL16 if d < 4 else (_GL8 if d < 8 else _GL4)
        I = np.arange(1, N + 1 - d)
        J = I + d
        s, ws = _gauss(rule, t[I - 1], t[I])
        r, wr = _gauss(rule, t[J - 1], t[J])
        us = u[I - 1, None] + (u[I] - u[I - 1])[:, None] * (s - t[I - 1, None]) / (t[I] - t[I - 1])[:, None]
        ur = u[J - 1, None] + (u[J] - u[J - 1])[:, None] * (r - t[J - 1, None]) / (t[J] - t[J - 1])[:, None]
        diff = np.abs(ur[:, None, :] - us[:, :, None]) ** p
        dist = (r[:, None, :] - s[:, :, None]) ** (-beta)
        total += float(np.sum(ws[:, :, None] * wr[:, None, :] * diff * dist))
    return total


def _second_antiderivative(z: np.ndarray, beta: float) -> np.ndarray:
    # F'' = z^(-beta)
    if beta == 1.0:
        return z * np.log(z) - z
    if beta == 2.0:
        return -np.log(z)
    return z ** (2.0 - beta) / ((1.0 - beta) * (2.0 - beta))


def _far_cell(t: np.ndarray, c: np.ndarray, p: float, sigma: float) -> float:
    """Cell pairs at least two apart for piecewise-constant data, integrated exactly."""
    N = t.size - 1
    beta = 1.0 + sigma * p
    total = 0.0
    for d in range(2, N):
        I = np.arange(1, N + 1 - d)
        J = I + d
        a0, a1, b0, b1 = t[I - 1], t[I], t[J - 1], t[J]
        F = lambda z: _second_antiderivative(z, beta)  # noqa: E731
        box = F(b1 - a0) - F(b1 - a1) - F(b0 - a0) + F(b0 - a1)
        total += float(np.sum(np.abs(c[J] - c[I]) ** p * box))
    return total


def slobodecki_seminorm(u: GridFn, params: SlobodeckiParams | FracOrder | float, p: float | None = None) -> float:
    """Double-integral seminorm of ``d^(m-1) u / dt^(m-1)``.

    Node-linear data are integrated over the whole square: cells on the
    diagonal exactly, neighbouring cells by an exact radial integral, the
    rest by Gauss-Legendre. For piecewise-constant data the band of
    neighbouring cells is left out, so the result is a lower bound.
    """
    prm = _as_params(params, p)
    g = u
    for _ in range(prm.order.m - 1):
        g = derivative(g)
    t = g.mesh.nodes
    vals = g.values
    sigma, q = prm.order.sigma, prm.p
    if g.convention == LINEAR:
        h = g.mesh.widths
        slopes = np.diff(vals) / h
        total = _diagonal_linear(slopes, h, q, sigma)
        if g.mesh.N >= 2:
            total += 2.0 * _adjacent_linear(slopes[:-1], slopes[1:], h[:-1], h[1:], q, sigma)
        total += 2.0 * _far_linear(t, vals, q, sigma)
    else:
        total = 2.0 * _far_cell(t, vals, q, sigma)
    return float(total ** (1.0 / q))


def slobodecki_norm(u: GridFn, params: SlobodeckiParams | FracOrder | float, p: float | None = None) -> float:
    """``(sum_{k<m} ||D^k u||_p^p + seminorm^p)^(1/p)`` with ``m = ceil(alpha)``."""
    prm = _as_params(params, p)
    lower = 0.0
    g = u
    for k in range(prm.order.m):
        if k:
            g = derivative(g)
        lower += lp_norm(g, prm.p) ** prm.p
    return float((lower + slobodecki_seminorm(u, prm) ** prm.p) ** (1.0 / prm.p))


def wap_norm(u: GridFn, alpha: FracOrder | float, p: float) -> float:
    """``||(J^alpha)^{-1} u||_p`` with the discrete inverse."""
    p = lp_exponent(p)
    if math.isinf(p):
        raise DomainError("wap_norm needs a finite p")
    return lp_norm(invert_frac_integral(u, alpha), p)


def embedding_ratio(v: GridFn, alpha: float, epsilon: float, p: float) -> float:
    """``||J^alpha v||_{W^{alpha-epsilon,p}} / ||v||_p``."""
    num = slobodecki_norm(frac_integral_left(v, alpha), SlobodeckiParams(FracOrder(alpha - epsilon), p))
    return num / lp_norm(v, p)


@dataclass(frozen=True)
class EmbeddingScanReport:
    alpha: float
    epsilon: float
    p: float
    seed: int
    sample_count: int
    N: int
    ratios: tuple[float, ...]
    max_ratio: float
    distribution: str = "iid uniform node values on [-1, 1], node-linear"

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "p": self.p,
            "seed": self.seed,
            "sample_count": self.sample_count,
            "N": self.N,
            "distribution": self.distribution,
            "ratios": list(self.ratios),
            "max_ratio": self.max_ratio,
        }


def _thread_count() -> int:
    from .verify import thread_count

    return thread_count()


def embedding_scan(
    alpha: float, epsilon: float, p: float, sample_count: int, mesh: Mesh, seed: int = 0
) -> EmbeddingScanReport:
    """Empirical ``||J^alpha v||_{W^{alpha-epsilon,p}} / ||v||_p`` over random ``v``."""
    alpha, epsilon = float(alpha), float(epsilon)
    if not 0 < epsilon < alpha:
        raise DomainError("embedding scans need 0 < epsilon < alpha")
    if sample_count < 1:
        raise DomainError("sample_count must be at least 1")
    SlobodeckiParams(FracOrder(alpha - epsilon), p)
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-1.0, 1.0, size=(sample_count, mesh.N + 1))
    fns = [GridFn(mesh, row, LINEAR) for row in samples]
    with ThreadPoolExecutor(max_workers=min(_thread_count(), sample_count)) as ex:
        ratios = tuple(ex.map(lambda v: embedding_ratio(v, alpha, epsilon, p), fns))
    return EmbeddingScanReport(
        alpha, epsilon, float(p), int(seed), int(sample_count), mesh.N, ratios, max(ratios)
    )

