"""Fractional integrals and derivatives of grid functions.

All integrals are product-integration rules: the weakly singular kernel is
integrated exactly against the piecewise-constant or piecewise-linear
reconstruction of the data, so the only error is the reconstruction error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from ._weights import cell_weights, linear_weights, toeplitz_cell, toeplitz_linear
from .errors import AsymmetricMeshError, ConventionError, DomainError
from .grid import CELL, LINEAR, GridFn, Mesh, lp_exponent, lp_norm, refine
from .order import FracOrder, as_order

__all__ = [
    "ConvolutionWeights",
    "FracOrder",
    "MembershipReport",
    "caputo",
    "convolution_weights",
    "derivative",
    "frac_integral_left",
    "frac_integral_right",
    "invert_frac_integral",
    "membership_diagnostic",
    "reflect",
    "riemann_liouville",
]

#: Per-refinement growth of ``||w||_p`` that counts as divergence.
NORM_RATIO_THRESHOLD = 1.2
#: Per-refinement ratio of the largest cell mass ``h_k |w_k|^p`` that counts
#: as divergence. A ``t^(-beta)`` singularity gives ratio ``2^(beta p - 1)``.
MASS_RATIO_THRESHOLD = 0.97

#: Largest order for which the discrete inverse is well conditioned.
MAX_INVERT_ORDER = 2.0


@dataclass(frozen=True, eq=False)
class ConvolutionWeights:
    """Dense lower-triangular weights of the discrete left integral.

    ``matrix[i, j]`` multiplies ``v[j]``; for cell data column 0 is unused.
    Intended for inspection and small meshes; the operators never form it.
    """

    order: FracOrder
    mesh: Mesh
    convention: str
    matrix: np.ndarray = field(repr=False)


def convolution_weights(mesh: Mesh, alpha: FracOrder | float, convention: str = CELL) -> ConvolutionWeights:
    a = as_order(alpha).alpha
    t = mesh.nodes
    h = mesh.widths
    N = mesh.N
    W = np.zeros((N + 1, N + 1))
    for i in range(1, N + 1):
        x = t[i] - t[1 : i + 1]
        if convention == LINEAR:
            near, far = linear_weights(x, h[:i], a)
            W[i, 1 : i + 1] += near
            W[i, :i] += far
        elif convention == CELL:
            W[i, 1 : i + 1] = cell_weights(x, h[:i], a)
        else:
            raise ConventionError(f"unknown convention {convention!r}")
    W.setflags(write=False)
    return ConvolutionWeights(as_order(alpha), mesh, convention, W)


# kernel dispatch


def _apply_left(mesh: Mesh, values: np.ndarray, alpha: float, linear: bool) -> np.ndarray:
    v = np.ascontiguousarray(values, dtype=float)
    if mesh.is_uniform:
        h = mesh.T / mesh.N
        if linear:
            coef, end = toeplitz_linear(alpha, mesh.N, h)
        else:
            coef, end = toeplitz_cell(alpha, mesh.N, h), np.zeros(mesh.N)
        return kernels.left_uniform(coef, end, v)
    return kernels.left_general(np.ascontiguousarray(mesh.nodes), v, alpha, linear)


def _apply_right(mesh: Mesh, values: np.ndarray, alpha: float, linear: bool) -> np.ndarray:
    v = np.ascontiguousarray(values, dtype=float)
    if mesh.is_uniform:
        h = mesh.T / mesh.N
        if linear:
            coef, end = toeplitz_linear(alpha, mesh.N, h)
            return kernels.right_uniform(coef, end, v)
        # cell k sits one slot to the right of its left node
        x = np.zeros_like(v)
        x[:-1] = v[1:]
        return kernels.right_uniform(toeplitz_cell(alpha, mesh.N, h), np.zeros(mesh.N), x)
    return kernels.right_general(np.ascontiguousarray(mesh.nodes), v, alpha, linear)


def volterra_solve(
    mesh: Mesh,
    rhs: np.ndarray,
    terms: Sequence[tuple[float, np.ndarray | float, np.ndarray | float]],
    identity: float = 1.0,
    linear: bool = False,
) -> np.ndarray:
    """Forward substitution for ``identity*w - sum_l c_l * J^{a_l}(d_l * w) = rhs``.

    Each term is ``(a_l, c_l, d_l)`` with ``c_l`` multiplying after and
    ``d_l`` before the integral; both are scalars or node arrays. The
    equation holds at every node ``t_i, i >= 1``; in cell mode ``w[k]`` is
    the value on cell ``k`` and ``w[0]`` is returned as zero.
    """
    N = mesh.N
    rhs = np.ascontiguousarray(rhs, dtype=float)
    L = len(terms)
    outer = np.empty((L, N + 1))
    inner = np.empty((L, N + 1))
    alphas = np.empty(L)
    for l, (a, c, d) in enumerate(terms):
        alphas[l] = float(a)
        outer[l] = c
        inner[l] = d
    if mesh.is_uniform:
        h = mesh.T / N
        coefs = np.empty((L, N))
        ends = np.zeros((L, N))
        for l in range(L):
            if linear:
                coefs[l], ends[l] = toeplitz_linear(alphas[l], N, h)
            else:
                coefs[l] = toeplitz_cell(alphas[l], N, h)
        return kernels.solve_uniform(coefs, ends, outer, inner, rhs, float(identity), bool(linear))
    return kernels.solve_general(
        np.ascontiguousarray(mesh.nodes), alphas, outer, inner, rhs, float(identity), bool(linear)
    )


# operators


def frac_integral_left(v: GridFn, alpha: FracOrder | float) -> GridFn:
    """Left Riemann-Liouville integral ``J^alpha v`` at the nodes.

    The result is exact for ``v``'s reconstruction and is returned as a
    node-linear grid function.
    """
    a = as_order(alpha).alpha
    out = _apply_left(v.mesh, v.values, a, v.convention == LINEAR)
    return GridFn(v.mesh, out, LINEAR)


def frac_integral_right(v: GridFn, alpha: FracOrder | float) -> GridFn:
    """Right-sided integral ``J_alpha v(t) = int_t^T (s - t)^(alpha-1) v(s) ds / Gamma(alpha)``."""
    a = as_order(alpha).alpha
    out = _apply_right(v.mesh, v.values, a, v.convention == LINEAR)
    return GridFn(v.mesh, out, LINEAR)


def reflect(v: GridFn) -> GridFn:
    """``(tau v)(t) = v(T - t)`` on a mesh symmetric about ``T/2``."""
    if not v.mesh.is_symmetric:
        raise AsymmetricMeshError("reflection needs a mesh symmetric under t -> T - t")
    if v.convention == LINEAR:
        return GridFn(v.mesh, v.values[::-1], LINEAR)
    # cell k maps to cell N + 1 - k
    out = np.empty_like(v.values)
    out[1:] = v.values[:0:-1]
    return GridFn(v.mesh, out, CELL)


def derivative(v: GridFn) -> GridFn:
    """Discrete first derivative as a cell function.

    Linear data give the exact slope on each cell. Cell data are
    differenced between neighbouring cell midpoints; the first cell copies
    the second.
    """
    t = v.mesh.nodes
    h = v.mesh.widths
    out = np.empty(v.mesh.N + 1)
    if v.convention == LINEAR:
        out[1:] = np.diff(v.values) / h
    else:
        if v.mesh.N < 2:
            raise DomainError("differencing a cell function needs at least two cells")
        mid = 0.5 * (t[1:] + t[:-1])
        out[2:] = np.diff(v.values[1:]) / np.diff(mid)
        out[1] = out[2]
    return GridFn(v.mesh, out, CELL)


def caputo(v: GridFn, alpha: FracOrder | float) -> GridFn:
    """Caputo derivative ``J^(1-alpha) (dv/dt)`` for ``0 < alpha < 1``."""
    a = as_order(alpha).alpha
    if not 0 < a < 1:
        raise DomainError(f"caputo needs 0 < alpha < 1, got {a}")
    if v.convention != LINEAR:
        raise ConventionError("caputo needs node-linear data so that dv/dt exists on every cell")
    return frac_integral_left(derivative(v), 1.0 - a)


def riemann_liouville(v: GridFn, alpha: FracOrder | float) -> GridFn:
    """Riemann-Liouville derivative ``D^m J^(1-sigma) v`` with ``alpha = m - 1 + sigma``.

    Returned as a cell function. The value at ``t = 0`` is not defined for
    data that do not vanish there; compare from ``t_1`` on.
    """
    order = as_order(alpha).require_fractional()
    y = frac_integral_left(v, 1.0 - order.sigma)
    for _ in range(order.m):
        y = derivative(y)
    return y


def invert_frac_integral(u: GridFn, alpha: FracOrder | float) -> GridFn:
    """Discrete ``(J^alpha)^{-1} u``: the cell function ``w`` with ``J^alpha w = u`` at every node.

    Solved by forward substitution against the cell weights, so
    ``invert_frac_integral(frac_integral_left(w, a), a)`` returns a cell
    function ``w`` up to rounding. ``u(0)`` plays no role since
    ``J^alpha w`` vanishes at the origin. Integer orders are accepted.

    Orders above ``MAX_INVERT_ORDER`` are refused: the inverse of the cell
    weight matrix then grows geometrically in N, so no solver can recover ``w``.
    """
    a = as_order(alpha).alpha
    if a > MAX_INVERT_ORDER:
        raise DomainError(
            f"discrete inversion is exponentially ill-conditioned for alpha > {MAX_INVERT_ORDER}, got {a}"
        )
    w = volterra_solve(u.mesh, u.values, [(a, -1.0, 1.0)], identity=0.0, linear=False)
    return GridFn(u.mesh, w, CELL)


@dataclass(frozen=True)
class MembershipReport:
    """Refinement study of ``||(J^alpha)^{-1} u||_p``.

    ``divergent`` is set when the norm grows by more than
    ``NORM_RATIO_THRESHOLD`` twice in a row, or when the largest single-cell
    contribution ``h_k |w_k|^p`` fails to shrink (ratio at least
    ``MASS_RATIO_THRESHOLD``) twice in a row.
    """

    alpha: float
    p: float
    mesh_sizes: tuple[int, ...]
    norms: tuple[float, ...]
    norm_ratios: tuple[float, ...]
    mass_ratios: tuple[float, ...]
    divergent: bool

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "p": self.p,
            "mesh_sizes": list(self.mesh_sizes),
            "norms": list(self.norms),
            "norm_ratios": list(self.norm_ratios),
            "mass_ratios": list(self.mass_ratios),
            "divergent": self.divergent,
        }


def _twice(ratios: Sequence[float], threshold: float) -> bool:
    return any(a >= threshold and b >= threshold for a, b in zip(ratios, ratios[1:]))


def membership_from_norms(
    alpha: float, p: float, mesh_sizes: Sequence[int], ws: Sequence[GridFn]
) -> MembershipReport:
    """Apply the refinement ratio tests to a sequence of inverted functions."""
    norms = [lp_norm(w, p) for w in ws]
    masses = []
    for w in ws:
        vals = w.values[1:] if w.convention == CELL else 0.5 * (w.values[1:] + w.values[:-1])
        masses.append(float(np.max(w.mesh.widths * np.abs(vals) ** p)))
    norm_ratios = [b / a if a > 0 else (math.inf if b > 0 else 1.0) for a, b in zip(norms, norms[1:])]
    mass_ratios = [b / a if a > 0 else (math.inf if b > 0 else 0.0) for a, b in zip(masses, masses[1:])]
    divergent = _twice([r - 1e-15 for r in norm_ratios], NORM_RATIO_THRESHOLD + 1e-15) or _twice(
        mass_ratios, MASS_RATIO_THRESHOLD
    )
    return MembershipReport(
        float(alpha), float(p), tuple(mesh_sizes), tuple(norms), tuple(norm_ratios), tuple(mass_ratios), divergent
    )


def membership_diagnostic(
    make_u: Callable[[Mesh], GridFn],
    alpha: FracOrder | float,
    p: float,
    mesh: Mesh,
    levels: int = 4,
) -> MembershipReport:
    """Flag ``u`` as outside ``W_{alpha,p}`` if ``||(J^alpha)^{-1} u||_p`` blows up under refinement.

    ``make_u`` samples the same function on each of ``levels`` meshes,
    starting at ``mesh`` and doubling.
    """
    a = as_order(alpha).alpha
    p = lp_exponent(p)
    if math.isinf(p):
        raise DomainError("membership diagnostics need a finite p")
    if levels < 3:
        raise DomainError("membership diagnostics need at least three refinement levels")
    meshes = [mesh]
    for _ in range(levels - 1):
        meshes.append(refine(meshes[-1], 2))
    ws = [invert_frac_integral(make_u(m), a) for m in meshes]
    return membership_from_norms(a, p, [m.N for m in meshes], ws)
