"""Fractional initial value problems of order ``0 < alpha < 1``.

Every problem is rewritten as a second-kind Volterra equation with a
weakly singular kernel and solved by forward substitution over the
product-integration weights of :mod:`fracalc.frac_ops`.

Two discretizations are available:

``"linear"``
    unknowns at the nodes, data reconstructed piecewise linearly (product
    trapezoid rule). Needs data that can be evaluated at ``t = 0``.
``"cell"``
    the unknown at ``t_k`` stands for the cell ``(t_{k-1}, t_k]`` and the
    data enter through exact cell averages. Handles data that blow up at
    the origin, such as ``t^(-gamma)`` with ``gamma < 1``.

``"auto"`` picks ``"linear"`` unless some datum is singular at the origin.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import special as sps

from .errors import (
    DomainError,
    ExponentGateError,
    HypothesisError,
    MeshMismatchError,
    NonConvergenceError,
    PairingUndefinedError,
    SchemaError,
)
from .frac_ops import (
    MembershipReport,
    _apply_left,
    invert_frac_integral,
    membership_from_norms,
    volterra_solve,
)
from ._weights import powdiff
from .grid import CELL, LINEAR, GridFn, Mesh, lp_exponent, lp_norm, refine
from .order import FracOrder, as_order
from .spaces import wap_norm

__all__ = [
    "Coefficient",
    "Forcing",
    "IvpProblem",
    "MultitermEntry",
    "OUTSIDE_REGIME",
    "PowerSum",
    "SolveReport",
    "exponent_gate",
    "problem_from_dict",
    "solve",
    "solve_distributional",
    "solve_multiterm",
    "solve_single",
    "solve_singular_coeff",
]

OUTSIDE_REGIME = "outside proven regime"


@dataclass(frozen=True)
class PowerSum:
    """``sum_k c_k t^(mu_k)`` with every ``mu_k > -1``."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        terms = tuple((float(c), float(mu)) for c, mu in self.terms)
        for c, mu in terms:
            if not (math.isfinite(c) and math.isfinite(mu)):
                raise DomainError("power terms need finite coefficients and exponents")
            if mu <= -1:
                raise DomainError(f"t^{mu} is not integrable at the origin")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def constant(cls, c: float) -> PowerSum:
        return cls(((c, 0.0),))

    @classmethod
    def power(cls, c: float, theta: float) -> PowerSum:
        """``c t^(-theta)``."""
        return cls(((c, -theta),))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c, _ in self.terms)

    @property
    def singular(self) -> bool:
        return any(c != 0 and mu < 0 for c, mu in self.terms)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, mu in self.terms:
            if c == 0:
                continue
            out = out + (c if mu == 0 else c * t**mu)
        return out

    def node_values(self, mesh: Mesh) -> np.ndarray:
        if self.singular:
            raise DomainError("data singular at the origin cannot be sampled at the nodes")
        return self(mesh.nodes)

    def cell_averages(self, mesh: Mesh) -> np.ndarray:
        t = mesh.nodes
        h = mesh.widths
        out = np.zeros(mesh.N + 1)
        for c, mu in self.terms:
            if c == 0:
                continue
            out[1:] += c * powdiff(t[:-1], h, mu + 1) / ((mu + 1) * h)
        out[0] = out[1]
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "powers", "terms": [{"c": c, "exponent": mu} for c, mu in self.terms]}


Data = "GridFn | PowerSum"


def _node_values(d: GridFn | PowerSum, mesh: Mesh) -> np.ndarray:
    if isinstance(d, PowerSum):
        return d.node_values(mesh)
    if d.mesh != mesh:
        raise MeshMismatchError("problem data live on a different mesh")
    if d.convention == CELL:
        raise DomainError("cell data cannot be used by the node-linear scheme")
    return np.array(d.values)


def _cell_values(d: GridFn | PowerSum, mesh: Mesh) -> np.ndarray:
    if isinstance(d, PowerSum):
        return d.cell_averages(mesh)
    if d.mesh != mesh:
        raise MeshMismatchError("problem data live on a different mesh")
    return np.array(d.as_cell().values)


def _is_zero(d: GridFn | PowerSum | None) -> bool:
    if d is None:
        return True
    if isinstance(d, PowerSum):
        return d.is_zero
    return not np.any(d.values)


def _singular(d: GridFn | PowerSum | None) -> bool:
    if isinstance(d, PowerSum):
        return d.singular
    return isinstance(d, GridFn) and d.convention == CELL


def _data_to_dict(d: GridFn | PowerSum) -> dict[str, Any]:
    if isinstance(d, PowerSum):
        return d.to_dict()
    return {"kind": "grid", "values": d.values.tolist(), "convention": d.convention}


@dataclass(frozen=True)
class Coefficient:
    """A coefficient function with its integrability class: ``L^q`` (``q = inf`` for bounded)."""

    func: GridFn | PowerSum
    q: float = math.inf

    def __post_init__(self) -> None:
        if isinstance(self.func, (int, float)):
            object.__setattr__(self, "func", PowerSum.constant(self.func))
        q = float(self.q)
        if not q > 1:
            raise DomainError(f"coefficient integrability exponent must exceed 1, got {q}")
        object.__setattr__(self, "q", q)

    @property
    def bounded(self) -> bool:
        return math.isinf(self.q)

    def to_dict(self) -> dict[str, Any]:
        d = _data_to_dict(self.func)
        d["tag"] = "Linf" if self.bounded else {"Lq": self.q}
        return d


@dataclass(frozen=True)
class MultitermEntry:
    alpha_k: FracOrder
    b_k: Coefficient

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_k", as_order(self.alpha_k))
        if not isinstance(self.b_k, Coefficient):
            object.__setattr__(self, "b_k", Coefficient(self.b_k))


@dataclass(frozen=True)
class Forcing:
    """Right-hand side: none, a regular function, or ``weight * delta_{t0}``."""

    kind: str = "none"
    f: GridFn | PowerSum | None = None
    t0: float = 0.0
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "regular", "dirac"):
            raise DomainError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "regular" and self.f is None:
            raise DomainError("regular forcing needs a function")
        if self.kind == "dirac":
            if not math.isfinite(self.t0) or not math.isfinite(self.weight):
                raise DomainError("dirac forcing needs finite t0 and weight")

    @classmethod
    def none(cls) -> Forcing:
        return cls("none")

    @classmethod
    def regular(cls, f: GridFn | PowerSum) -> Forcing:
        return cls("regular", f)

    @classmethod
    def dirac(cls, t0: float, weight: float = 1.0) -> Forcing:
        return cls("dirac", None, float(t0), float(weight))

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "none":
            return {"kind": "none"}
        if self.kind == "dirac":
            return {"kind": "dirac", "t0": self.t0, "weight": self.weight}
        return _data_to_dict(self.f)  # type: ignore[arg-type]


@dataclass(frozen=True)
class IvpProblem:
    """``d^alpha u + sum_k b_k d^{alpha_k} u = b u + f``, ``u(0) = a``, with ``0 < alpha < 1``.

    ``d^alpha`` is the inverse of the fractional integral acting on
    ``u - a``. A missing ``b`` means ``b = 0``; ``p`` is the Lebesgue
    exponent of the solution space, used by the exponent checks and in
    reported norms.
    """

    alpha: FracOrder
    a: float = 0.0
    b: Coefficient | None = None
    multiterm: tuple[MultitermEntry, ...] = ()
    forcing: Forcing = field(default_factory=Forcing.none)
    p: float = 2.0

    def __post_init__(self) -> None:
        order = as_order(self.alpha)
        if not 0 < order.alpha < 1:
            raise DomainError(f"initial value problems need 0 < alpha < 1, got {order.alpha}")
        object.__setattr__(self, "alpha", order)
        object.__setattr__(self, "a", float(self.a))
        if self.b is not None and not isinstance(self.b, Coefficient):
            object.__setattr__(self, "b", Coefficient(self.b))
        mt = tuple(e if isinstance(e, MultitermEntry) else MultitermEntry(*e) for e in self.multiterm)
        orders = [e.alpha_k.alpha for e in mt]
        if any(b <= a for a, b in zip(orders, orders[1:])) or any(o >= order.alpha for o in orders):
            raise DomainError("multiterm orders must satisfy 0 < alpha_1 < ... < alpha_n < alpha")
        object.__setattr__(self, "multiterm", mt)
        object.__setattr__(self, "p", lp_exponent(self.p))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "alpha": self.alpha.alpha,
            "a": self.a,
            "forcing": self.forcing.to_dict(),
            "p": self.p,
            "multiterm": [{"alpha_k": e.alpha_k.alpha, "b_k": e.b_k.to_dict()} for e in self.multiterm],
        }
        if self.b is not None:
            d["b"] = self.b.to_dict()
        return d


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Solution ``u``, its offset ``v = u - a``, and solver diagnostics.

    ``residual`` is the discrete L^p norm of the residual of the solved
    Volterra equation. ``w`` is the fractional derivative of ``v`` when the
    solver computes it.
    """

    u: GridFn
    v: GridFn
    residual: float
    iterations: int
    scheme: str
    flags: tuple[str, ...] = ()
    w: GridFn | None = None
    norms: dict[str, float] = field(default_factory=dict)
    membership: MembershipReport | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "residual": self.residual,
            "iterations": self.iterations,
            "scheme": self.scheme,
            "flags": list(self.flags),
            "norms": dict(self.norms),
            "mesh": self.u.mesh.to_dict(),
        }
        if self.membership is not None:
            d["membership"] = self.membership.to_dict()
        return d

    def to_csv(self, exact: np.ndarray | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["t", "u", "v"] + (["exact", "abs_error"] if exact is not None else [])
        w.writerow(header)
        for i, t in enumerate(self.u.mesh.nodes):
            row = [repr(float(t)), repr(float(self.u.values[i])), repr(float(self.v.values[i]))]
            if exact is not None:
                row += [repr(float(exact[i])), repr(float(abs(self.u.values[i] - exact[i])))]
            w.writerow(row)
        return buf.getvalue()


# scheme helpers


def _choose_scheme(scheme: str, *data: GridFn | PowerSum | None) -> str:
    if scheme not in ("auto", "linear", "cell"):
        raise DomainError(f"unknown scheme {scheme!r}")
    singular = any(_singular(d) for d in data)
    if scheme == "auto":
        return CELL if singular else LINEAR
    if scheme == LINEAR and singular:
        raise DomainError("data singular at the origin need the cell scheme")
    return scheme


def _values(d: GridFn | PowerSum | None, mesh: Mesh, scheme: str) -> np.ndarray:
    if d is None:
        return np.zeros(mesh.N + 1)
    return _node_values(d, mesh) if scheme == LINEAR else _cell_values(d, mesh)


def _residual(mesh: Mesh, r: np.ndarray, scheme: str, p: float) -> float:
    r = np.array(r)
    if scheme == CELL:
        r[0] = r[1] if mesh.N >= 1 else 0.0
    return lp_norm(GridFn(mesh, r, scheme), p)


def _forcing_fn(prob: IvpProblem) -> GridFn | PowerSum | None:
    return prob.forcing.f if prob.forcing.kind == "regular" else None


def _b_fn(prob: IvpProblem) -> GridFn | PowerSum | None:
    return None if prob.b is None else prob.b.func


def _finish(mesh: Mesh, a: float, v: np.ndarray) -> tuple[GridFn, GridFn]:
    v = np.array(v)
    v[0] = 0.0
    vf = GridFn(mesh, v, LINEAR)
    return vf + a, vf


# solvers


def solve_single(
    prob: IvpProblem,
    mesh: Mesh,
    scheme: str = "auto",
    method: str = "direct",
    tol: float = 1e-13,
    max_iter: int = 1000,
) -> SolveReport:
    """Solve ``v = J^alpha(b v) + J^alpha(b a + f)`` and return ``u = a + v``.

    ``method="direct"`` forward-substitutes; ``method="picard"`` iterates
    the fixed-point map from ``v = 0`` until successive iterates differ by
    at most ``tol`` in the max norm.
    """
    if prob.multiterm:
        raise DomainError("solve_single takes problems without lower-order terms")
    if prob.b is not None and not prob.b.bounded:
        raise DomainError("solve_single needs a bounded coefficient; use solve_singular_coeff")
    if prob.forcing.kind == "dirac":
        raise DomainError("solve_single needs regular forcing; use solve_distributional")
    bfn, ffn = _b_fn(prob), _forcing_fn(prob)
    scheme = _choose_scheme(scheme, bfn, ffn)
    linear = scheme == LINEAR
    a = prob.alpha.alpha
    b = _values(bfn, mesh, scheme)
    f = _values(ffn, mesh, scheme)
    g = _apply_left(mesh, b * prob.a + f, a, linear)

    iterations = 0
    if method == "direct":
        v = volterra_solve(mesh, g, [(a, 1.0, b)], linear=linear)
    elif method == "picard":
        v = np.zeros(mesh.N + 1)
        for iterations in range(1, max_iter + 1):
            nxt = _apply_left(mesh, b * v, a, linear) + g
            step = float(np.max(np.abs(nxt - v)))
            v = nxt
            if step <= tol:
                break
        else:
            raise NonConvergenceError(f"fixed-point iteration did not settle in {max_iter} steps")
    else:
        raise DomainError(f"unknown method {method!r}")

    res = v - _apply_left(mesh, b * v, a, linear) - g
    u, vf = _finish(mesh, prob.a, v)
    return SolveReport(u, vf, _residual(mesh, res, scheme, prob.p), iterations, scheme)


def solve_multiterm(prob: IvpProblem, mesh: Mesh, scheme: str = "auto") -> SolveReport:
    """Solve for ``w = d^alpha (u - a)`` from
    ``w = -sum_k b_k J^{alpha-alpha_k} w + b J^alpha w + b a + f`` and set ``u = a + J^alpha w``.
    """
    if prob.forcing.kind == "dirac":
        raise DomainError("solve_multiterm needs regular forcing")
    if prob.b is not None and not prob.b.bounded:
        raise DomainError("solve_multiterm needs a bounded coefficient")
    if any(not e.b_k.bounded for e in prob.multiterm):
        raise DomainError("solve_multiterm needs bounded lower-order coefficients")
    bfn, ffn = _b_fn(prob), _forcing_fn(prob)
    scheme = _choose_scheme(scheme, bfn, ffn, *(e.b_k.func for e in prob.multiterm))
    linear = scheme == LINEAR
    a = prob.alpha.alpha
    b = _values(bfn, mesh, scheme)
    rhs = b * prob.a + _values(ffn, mesh, scheme)

    terms: list[tuple[float, np.ndarray | float, np.ndarray | float]] = []
    for e in prob.multiterm:
        terms.append((a - e.alpha_k.alpha, -_values(e.b_k.func, mesh, scheme), 1.0))
    terms.append((a, b, 1.0))
    w = volterra_solve(mesh, rhs, terms, linear=linear)
    if not linear:
        w[0] = w[1]

    res = w - rhs
    for order, c, d in terms:
        res = res - c * _apply_left(mesh, d * w, order, linear)
    v = _apply_left(mesh, w, a, linear)
    u, vf = _finish(mesh, prob.a, v)
    wf = GridFn(mesh, w, scheme)
    return SolveReport(u, vf, _residual(mesh, res, scheme, prob.p), 0, scheme, w=wf)


def exponent_gate(alpha: float, p: float, q: float) -> float:
    """Check ``1 < p < inf``, ``q > 1/alpha`` and ``p - 1 > 1/(q - 1)``; return ``r = pq/(p+q)``.

    These are the conditions under which a coefficient in ``L^q`` is known
    to give a unique solution with ``u - a`` in ``W_{alpha,r}``.
    """
    alpha, p, q = float(alpha), float(p), float(q)
    if not 1 < p < math.inf:
        raise ExponentGateError(f"need 1 < p < inf, got p={p}")
    if not q > 1 / alpha:
        raise ExponentGateError(f"need q > 1/alpha = {1 / alpha:.6g}, got q={q}")
    if not p - 1 > 1 / (q - 1):
        raise ExponentGateError(f"need p - 1 > 1/(q - 1) = {1 / (q - 1):.6g}, got p={p}")
    return p * q / (p + q)


def _singular_coeff_once(prob: IvpProblem, mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    a = prob.alpha.alpha
    b = _cell_values(prob.b.func, mesh)  # type: ignore[union-attr]
    f = _values(_forcing_fn(prob), mesh, CELL)
    g = _apply_left(mesh, b * prob.a + f, a, False)
    v = volterra_solve(mesh, g, [(a, 1.0, b)], linear=False)
    res = v - _apply_left(mesh, b * v, a, False) - g
    return v, res


def solve_singular_coeff(
    prob: IvpProblem,
    mesh: Mesh,
    force: bool = False,
    check_membership: bool = False,
    levels: int = 3,
) -> SolveReport:
    """Solve ``v = J^alpha(b v) + a J^alpha b (+ J^alpha f)`` for ``b = c t^(-theta)`` in ``L^q``.

    The exponent gate of :func:`exponent_gate` is enforced unless
    ``force`` is set, in which case the report carries the
    ``"outside proven regime"`` flag. Uses the cell scheme; ``norms``
    holds ``wap_r`` (the ``W_{alpha,r}`` norm of ``u - a`` with
    ``r = pq/(p+q)``) and ``lp_u``. With ``check_membership`` the solve is
    repeated on ``levels`` successively doubled meshes and ``wap_r`` is
    put through the refinement ratio test.
    """
    if prob.b is None or prob.b.bounded:
        raise DomainError("solve_singular_coeff needs a coefficient tagged L^q with finite q")
    if prob.multiterm:
        raise DomainError("solve_singular_coeff takes problems without lower-order terms")
    if prob.forcing.kind == "dirac":
        raise DomainError("solve_singular_coeff needs regular forcing")
    bfn = prob.b.func
    q = prob.b.q
    if isinstance(bfn, PowerSum):
        worst = min(mu for c, mu in bfn.terms if c != 0) if not bfn.is_zero else 0.0
        if worst < 0 and not -worst * q < 1:
            raise HypothesisError(f"b ~ t^{worst} is not in L^{q}")
    flags: list[str] = []
    a = prob.alpha.alpha
    try:
        r = exponent_gate(a, prob.p, q)
    except ExponentGateError:
        if not force:
            raise
        flags.append(OUTSIDE_REGIME)
        r = prob.p * q / (prob.p + q)

    v, res = _singular_coeff_once(prob, mesh)
    u, vf = _finish(mesh, prob.a, v)
    norms = {"r": r, "lp_u": lp_norm(u, prob.p)}
    # a forced run may leave r below 1, where no W_{alpha,r} norm exists
    has_r = r >= 1
    if has_r:
        norms["wap_r"] = wap_norm(vf, a, r)

    membership = None
    if check_membership and has_r:
        meshes = [mesh]
        for _ in range(levels - 1):
            meshes.append(refine(meshes[-1], 2))
        ws = [invert_frac_integral(vf, a)]
        for m in meshes[1:]:
            vm, _ = _singular_coeff_once(prob, m)
            _, vfm = _finish(m, prob.a, vm)
            ws.append(invert_frac_integral(vfm, a))
        membership = membership_from_norms(a, r, [m.N for m in meshes], ws)
        if membership.divergent:
            flags.append("wap_divergent")
    return SolveReport(
        u, vf, _residual(mesh, res, CELL, prob.p), 0, CELL, tuple(flags),
        w=invert_frac_integral(vf, a), norms=norms, membership=membership,
    )


def _beta_piece(lo: np.ndarray, hi: np.ndarray, p: float, q: float) -> np.ndarray:
    """``I_hi(p, q) - I_lo(p, q)`` using the complement near 1."""
    upper = lo >= 0.5
    direct = sps.betainc(p, q, hi) - sps.betainc(p, q, lo)
    comp = sps.betainc(q, p, 1.0 - lo) - sps.betainc(q, p, 1.0 - hi)
    return np.where(upper, comp, direct)


def _source_node_values(mesh: Mesh, alpha: float, t0: float) -> np.ndarray:
    """``(t - t0)_+^(alpha-1) / Gamma(alpha)`` at the nodes.

    A node at ``t0`` itself carries the mean of the source over the
    following cell.
    """
    t = mesh.nodes
    out = np.zeros(mesh.N + 1)
    tol = 1e-14 * mesh.T
    after = t > t0 + tol
    out[after] = (t[after] - t0) ** (alpha - 1) / math.gamma(alpha)
    at = np.flatnonzero(np.abs(t - t0) <= tol)
    for i in at:
        if i < mesh.N:
            h = t[i + 1] - t0
            out[i] = h ** (alpha - 1) / math.gamma(alpha + 1)
    return out


def _integral_against_source(mesh: Mesh, alpha: float, t0: float, b: np.ndarray, linear: bool) -> np.ndarray:
    """``J^alpha(b k)`` at the nodes with ``k(s) = (s - t0)_+^(alpha-1) / Gamma(alpha)``.

    Integrated exactly against ``b``'s reconstruction through incomplete
    beta functions; the cell holding ``t0`` is cut at ``t0``.
    """
    t = mesh.nodes
    N = mesh.N
    out = np.zeros(N + 1)
    g2 = math.gamma(alpha) ** 2
    B0 = sps.beta(alpha, alpha)
    B1 = sps.beta(alpha + 1, alpha)
    first = int(np.searchsorted(t, t0, side="right"))  # first node strictly after t0
    for i in range(max(first, 1), N + 1):
        D = t[i] - t0
        j = np.arange(max(first, 1), i + 1)
        s_lo = np.maximum(t[j - 1], t0)
        lo = (s_lo - t0) / D
        hi = np.minimum((t[j] - t0) / D, 1.0)
        piece0 = D ** (2 * alpha - 1) * B0 * _beta_piece(lo, hi, alpha, alpha)
        if linear:
            h = t[j] - t[j - 1]
            slope = (b[j] - b[j - 1]) / h
            base = b[j - 1] - slope * (t[j - 1] - t0)
            piece1 = D ** (2 * alpha) * B1 * _beta_piece(lo, hi, alpha + 1, alpha)
            out[i] = np.sum(base * piece0 + slope * piece1) / g2
        else:
            out[i] = np.sum(b[j] * piece0) / g2
    return out


def solve_distributional(prob: IvpProblem, mesh: Mesh, scheme: str = "auto") -> SolveReport:
    """Solve with forcing ``weight * delta_{t0}``.

    The pairing ``<delta_{t0}, J_alpha u> = (J_alpha u)(t0)`` turns the
    impulse into the source ``weight * k`` with
    ``k(t) = (t - t0)_+^(alpha-1) / Gamma(alpha)``. The solution is split as
    ``v = weight * k + y`` where ``y = J^alpha(b y) + weight J^alpha(b k) + a J^alpha b``
    has bounded data. Needs ``alpha q > 1`` with ``q = p/(p-1)``.
    """
    if prob.forcing.kind != "dirac":
        raise DomainError("solve_distributional needs dirac forcing")
    if prob.multiterm:
        raise DomainError("solve_distributional takes problems without lower-order terms")
    if prob.b is not None and not prob.b.bounded:
        raise DomainError("solve_distributional needs a bounded coefficient")
    a = prob.alpha.alpha
    p = prob.p
    q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
    if not a * q > 1:
        raise PairingUndefinedError(f"the impulse pairing needs alpha*q > 1, got alpha={a}, q={q}")
    flags = (OUTSIDE_REGIME,) if p == 1 else ()
    t0, weight = prob.forcing.t0, prob.forcing.weight
    if not 0 <= t0 <= mesh.T:
        raise DomainError(f"impulse location t0={t0} lies outside [0, {mesh.T}]")

    bfn = _b_fn(prob)
    scheme = _choose_scheme(scheme, bfn)
    linear = scheme == LINEAR
    b = _values(bfn, mesh, scheme)
    rhs = _apply_left(mesh, b * prob.a, a, linear)
    if weight != 0 and not _is_zero(bfn):
        rhs = rhs + weight * _integral_against_source(mesh, a, t0, b, linear)
    y = volterra_solve(mesh, rhs, [(a, 1.0, b)], linear=linear)
    res = y - _apply_left(mesh, b * y, a, linear) - rhs
    y[0] = 0.0
    v = y + weight * _source_node_values(mesh, a, t0)
    vf = GridFn(mesh, v, LINEAR)
    return SolveReport(vf + prob.a, vf, _residual(mesh, res, scheme, p), 0, scheme, flags)


def solve(prob: IvpProblem, mesh: Mesh, scheme: str = "auto", force: bool = False) -> SolveReport:
    """Dispatch to the solver matching the problem's structure."""
    if prob.forcing.kind == "dirac":
        return solve_distributional(prob, mesh, scheme)
    if prob.b is not None and not prob.b.bounded:
        return solve_singular_coeff(prob, mesh, force=force)
    if prob.multiterm:
        return solve_multiterm(prob, mesh, scheme)
    return solve_single(prob, mesh, scheme)


# JSON schema


def _number(d: dict, key: str, default: float | None = None) -> float:
    if key not in d:
        if default is None:
            raise SchemaError(f"missing field {key!r}")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"field {key!r} must be a number")
    return float(val)


def _data_from_dict(d: Any, mesh: Mesh) -> GridFn | PowerSum:
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return PowerSum.constant(float(d))
    if not isinstance(d, dict):
        raise SchemaError("function data must be a number or an object")
    kind = d.get("kind")
    try:
        if kind == "power":
            return PowerSum.power(_number(d, "c", 1.0), _number(d, "theta", 0.0))
        if kind == "powers":
            terms = d.get("terms")
            if not isinstance(terms, list):
                raise SchemaError("'powers' data need a list 'terms'")
            return PowerSum(tuple((_number(x, "c"), _number(x, "exponent")) for x in terms))
        if kind == "constant":
            return PowerSum.constant(_number(d, "c"))
        if kind == "grid":
            vals = d.get("values")
            if not isinstance(vals, list):
                raise SchemaError("grid data need a list 'values'")
            return GridFn(mesh, np.asarray(vals, dtype=float), d.get("convention", LINEAR))
    except (DomainError, TypeError, ValueError) as exc:
        raise SchemaError(f"invalid function data: {exc}") from exc
    raise SchemaError(f"unknown data kind {kind!r}")


def _coefficient_from_dict(d: Any, mesh: Mesh) -> Coefficient:
    func = _data_from_dict(d, mesh)
    tag = d.get("tag", "Linf") if isinstance(d, dict) else "Linf"
    if tag == "Linf":
        q = math.inf
    elif isinstance(tag, dict) and set(tag) == {"Lq"}:
        q = _number(tag, "Lq")
    else:
        raise SchemaError(f"unknown integrability tag {tag!r}")
    try:
        return Coefficient(func, q)
    except DomainError as exc:
        raise SchemaError(str(exc)) from exc


_PROBLEM_KEYS = {"alpha", "a", "b", "multiterm", "forcing", "mesh", "p", "oracle", "scheme"}


def problem_from_dict(d: dict[str, Any]) -> tuple[IvpProblem, Mesh]:
    """Parse the problem-file schema into a problem and its mesh."""
    if not isinstance(d, dict):
        raise SchemaError("problem must be a JSON object")
    unknown = set(d) - _PROBLEM_KEYS
    if unknown:
        raise SchemaError(f"unknown problem fields: {sorted(unknown)}")
    if "mesh" not in d:
        raise SchemaError("missing field 'mesh'")
    mesh = Mesh.from_dict(d["mesh"])
    alpha = _number(d, "alpha")
    b = _coefficient_from_dict(d["b"], mesh) if d.get("b") is not None else None
    mt_raw = d.get("multiterm", [])
    if not isinstance(mt_raw, list):
        raise SchemaError("'multiterm' must be a list")
    mt = []
    for e in mt_raw:
        if not isinstance(e, dict) or "alpha_k" not in e or "b_k" not in e:
            raise SchemaError("multiterm entries need 'alpha_k' and 'b_k'")
        mt.append(MultitermEntry(FracOrder(_number(e, "alpha_k")), _coefficient_from_dict(e["b_k"], mesh)))
    fd = d.get("forcing", {"kind": "none"})
    if not isinstance(fd, dict):
        fd = {"kind": "constant", "c": fd} if isinstance(fd, (int, float)) else None
        if fd is None:
            raise SchemaError("'forcing' must be an object")
    kind = fd.get("kind", "none")
    if kind == "none":
        forcing = Forcing.none()
    elif kind == "dirac":
        forcing = Forcing.dirac(_number(fd, "t0"), _number(fd, "weight", 1.0))
    else:
        forcing = Forcing.regular(_data_from_dict(fd, mesh))
    try:
        prob = IvpProblem(FracOrder(alpha), _number(d, "a", 0.0), b, tuple(mt), forcing, d.get("p", 2.0))
    except DomainError as exc:
        raise SchemaError(f"invalid problem: {exc}") from exc
    return prob, mesh
