"""Identity checks, convergence studies and the fractional-derivative decomposition."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Any, Callable, Sequence

import numpy as np

from ._weights import powdiff
from .errors import DomainError, HypothesisError, OracleMissingError
from .frac_ops import (
    derivative,
    frac_integral_left,
    frac_integral_right,
    invert_frac_integral,
    reflect,
    riemann_liouville,
)
from .grid import CELL, LINEAR, GridFn, Mesh, lp_norm
from .ivp import Coefficient, Forcing, IvpProblem, PowerSum, solve_distributional, solve_single
from .order import as_order
from .special import mittag_leffler, power_rule

__all__ = [
    "ConvergenceStudy",
    "Decomposition",
    "IdentityResult",
    "SuiteReport",
    "TARGETS",
    "convergence_study",
    "fit_order",
    "identity_suite",
    "load_tolerance_profile",
    "s1_s2_decomposition",
    "step_function",
    "thread_count",
]

#: Errors at or below this level count as rounding noise.
EXACT_LEVEL = 1e-12
#: Smallest RMS log-residual used by the outlier test in :func:`fit_order`.
RMS_FLOOR = 1e-3


def thread_count() -> int:
    """Worker cap from ``FRACALC_THREADS`` (a positive integer), else the core count."""
    raw = os.environ.get("FRACALC_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise DomainError(f"FRACALC_THREADS must be a positive integer, got {raw!r}")
    return n


def _map(fn: Callable, items: Sequence) -> list:
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# decomposition of d/dt J^(1-alpha) u


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``d/dt J^(1-alpha) u`` and its two parts at the interior nodes ``t_1 .. t_{N-1}``.

    ``s1`` is the hypersingular integral of ``u(s) - u(t)``, ``s2`` is
    ``t^(-alpha) u(t) / Gamma(1 - alpha)``, and ``lhs`` is computed
    independently by differencing ``J^(1-alpha) u``.
    """

    nodes: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    lhs: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return np.abs(self.lhs - self.s1 - self.s2)

    @property
    def discrepancy(self) -> float:
        return float(self.residual.max()) if self.residual.size else 0.0


def _central_difference(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    hl = t[1:-1] - t[:-2]
    hr = t[2:] - t[1:-1]
    return (hl**2 * (y[2:] - y[1:-1]) + hr**2 * (y[1:-1] - y[:-2])) / (hl * hr * (hl + hr))


def s1_s2_decomposition(u: GridFn, alpha: float) -> Decomposition:
    """Split ``d/dt J^(1-alpha) u`` for node-linear ``u`` with ``u(0) = 0``.

    ``S1(t) = -(alpha / Gamma(1-alpha)) int_0^t (t-s)^(-alpha-1) (u(s) - u(t)) ds``
    is integrated exactly against the linear reconstruction; the integrand
    is bounded by ``C (t-s)^(-alpha)`` so every cell integral is finite.
    """
    a = as_order(alpha).alpha
    if not 0 < a < 1:
        raise DomainError(f"the decomposition needs 0 < alpha < 1, got {a}")
    if u.convention != LINEAR:
        raise HypothesisError("the decomposition needs node-linear data")
    vals = u.values
    scale = max(1.0, float(np.max(np.abs(vals))))
    if abs(vals[0]) > 1e-14 * scale:
        raise HypothesisError(f"the decomposition needs u(0) = 0, got {vals[0]!r}")
    mesh = u.mesh
    t, h, N = mesh.nodes, mesh.widths, mesh.N
    g1 = math.gamma(1.0 - a)

    s1 = np.zeros(N + 1)
    for i in range(1, N + 1):
        # last cell: u(s) - u(t_i) is proportional to t_i - s
        acc = (vals[i - 1] - vals[i]) * h[i - 1] ** (1.0 - a) / ((1.0 - a) * h[i - 1])
        if i > 1:
            x = t[i] - t[1:i]
            hh = h[: i - 1]
            q0 = -powdiff(x, hh, -a) / a
            q1 = powdiff(x, hh, 1.0 - a) / (1.0 - a)
            acc += np.sum(
                (vals[: i - 1] - vals[i]) * (q1 - x * q0) / hh + (vals[1:i] - vals[i]) * ((x + hh) * q0 - q1) / hh
            )
        s1[i] = -a / g1 * acc
    s2 = np.zeros(N + 1)
    s2[1:] = t[1:] ** (-a) * vals[1:] / g1
    lhs = _central_difference(t, frac_integral_left(u, 1.0 - a).values)
    sl = slice(1, N)
    return Decomposition(t[sl].copy(), s1[sl], s2[sl], lhs)


# order fitting and convergence studies


def fit_order(mesh_sizes: Sequence[int], errors: Sequence[float]) -> tuple[float, bool]:
    """Least-squares order from ``log error`` against ``log N``.

    Returns ``(order, dropped)``. With four or more points the coarsest one
    is dropped when its residual against the fit of the other points
    exceeds three times their RMS residual (floored at ``RMS_FLOOR``). A
    residual measured against a fit that includes the point itself can never
    exceed ``sqrt(n)`` times the RMS, hence the leave-one-out form.
    Returns ``inf`` if every error is at rounding level.
    """
    n = np.asarray(mesh_sizes, dtype=float)
    e = np.asarray(errors, dtype=float)
    if n.size < 3:
        raise DomainError("an order estimate needs at least three mesh sizes")
    if np.all(e <= EXACT_LEVEL):
        return math.inf, False
    e = np.maximum(e, 1e-300)
    x, y = np.log(n), np.log(e)
    slope, _ = np.polyfit(x, y, 1)
    if n.size > 3:
        s_rest, i_rest = np.polyfit(x[1:], y[1:], 1)
        rest = y[1:] - (s_rest * x[1:] + i_rest)
        rms = max(math.sqrt(float(np.mean(rest**2))), RMS_FLOOR)
        if abs(y[0] - (s_rest * x[0] + i_rest)) > 3 * rms:
            return float(-s_rest), True
    return float(-slope), False


@dataclass(frozen=True)
class ConvergenceStudy:
    target: str
    params: dict[str, Any]
    mesh_sizes: tuple[int, ...]
    errors: tuple[float, ...]
    estimated_order: float
    exact: bool
    dropped_coarsest: bool = False

    @property
    def local_orders(self) -> tuple[float, ...]:
        out = []
        for (n0, e0), (n1, e1) in zip(zip(self.mesh_sizes, self.errors), zip(self.mesh_sizes[1:], self.errors[1:])):
            if e0 <= EXACT_LEVEL or e1 <= EXACT_LEVEL:
                out.append(math.nan)
            else:
                out.append(math.log(e0 / e1) / math.log(n1 / n0))
        return tuple(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "params": dict(self.params),
            "mesh_sizes": list(self.mesh_sizes),
            "errors": list(self.errors),
            "estimated_order": "exact" if self.exact else self.estimated_order,
            "local_orders": [None if math.isnan(o) else o for o in self.local_orders],
            "dropped_coarsest": self.dropped_coarsest,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "error", "order_estimate"])
        orders = (math.nan,) + self.local_orders
        for n, e, o in zip(self.mesh_sizes, self.errors, orders):
            w.writerow([n, repr(float(e)), "" if math.isnan(o) else repr(float(o))])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"target {self.target}", f"{'N':>8}  {'error':>12}  {'order':>7}"]
        orders = (math.nan,) + self.local_orders
        for n, e, o in zip(self.mesh_sizes, self.errors, orders):
            lines.append(f"{n:>8}  {e:>12.4e}  {'' if math.isnan(o) else f'{o:7.3f}':>7}")
        fitted = "exact" if self.exact else f"{self.estimated_order:.3f}"
        lines.append(f"fitted order: {fitted}")
        return "\n".join(lines)


def step_function(mesh: Mesh, seed: int, pieces: int = 16) -> GridFn:
    """Piecewise constant on ``pieces`` equal parts of ``[0, T]`` with iid uniform levels in ``[-1, 1]``.

    The levels depend only on ``seed``, so refining the mesh samples the
    same function.
    """
    levels = np.random.default_rng(seed).uniform(-1.0, 1.0, pieces)
    t = mesh.nodes
    mid = 0.5 * (t[1:] + t[:-1])
    idx = np.minimum((mid / mesh.T * pieces).astype(int), pieces - 1)
    v = np.empty(mesh.N + 1)
    v[1:] = levels[idx]
    return GridFn(mesh, v, CELL)


def _mesh_from(params: dict[str, Any], N: int, default_r: float = 1.0, default_kind: str = "uniform") -> Mesh:
    kind = params.get("kind", default_kind)
    T = float(params.get("T", 1.0))
    if kind == "graded":
        return Mesh.graded(N, float(params.get("r", default_r)), T)
    return Mesh.uniform(N, T)


def _err_power_law(N: int, prm: dict[str, Any]) -> float:
    alpha = float(prm.get("alpha", 0.6))
    gam = float(prm.get("gamma", 0.3))
    a = float(prm.get("a", 1.0))
    mesh = _mesh_from(prm, N, default_r=1.0 / gam, default_kind="graded")
    prob = IvpProblem(alpha, a, None, (), Forcing.regular(PowerSum.power(1.0, gam)))
    u = solve_single(prob, mesh, scheme=prm.get("scheme", "auto")).u
    exact = power_rule(-gam, alpha) * mesh.nodes ** (alpha - gam) + a
    return float(np.max(np.abs(u.values - exact)))


def _err_mittag_leffler(N: int, prm: dict[str, Any]) -> float:
    alpha = float(prm.get("alpha", 0.5))
    lam = float(prm.get("lam", 1.0))
    a = float(prm.get("a", 1.0))
    mesh = _mesh_from(prm, N)
    prob = IvpProblem(alpha, a, Coefficient(lam))
    u = solve_single(prob, mesh, scheme=prm.get("scheme", "auto")).u
    exact = a * mittag_leffler(alpha, lam * mesh.nodes**alpha)
    return float(np.max(np.abs(u.values - exact)))


def _err_dirac(N: int, prm: dict[str, Any]) -> float:
    alpha = float(prm.get("alpha", 0.7))
    t0 = float(prm.get("t0", 0.5))
    weight = float(prm.get("weight", 1.0))
    mesh = _mesh_from(prm, N)
    prob = IvpProblem(alpha, 0.0, None, (), Forcing.dirac(t0, weight), p=float(prm.get("p", 2.0)))
    v = solve_distributional(prob, mesh).v.values
    t = mesh.nodes
    after = t > t0
    exact = weight * (t[after] - t0) ** (alpha - 1) / math.gamma(alpha)
    return float(np.max(np.abs(v[after] - exact))) if after.any() else 0.0


def _err_frac_integral_power(N: int, prm: dict[str, Any]) -> float:
    alpha = float(prm.get("alpha", 0.5))
    mu = float(prm.get("mu", 0.0))
    mesh = _mesh_from(prm, N)
    v = GridFn.from_function(mesh, lambda t: t**mu, prm.get("convention", CELL))
    out = frac_integral_left(v, alpha).values
    exact = power_rule(mu, alpha) * mesh.nodes ** (mu + alpha)
    return float(np.max(np.abs(out - exact)))


def _err_inversion(N: int, prm: dict[str, Any]) -> float:
    alpha = float(prm.get("alpha", 0.5))
    mesh = _mesh_from(prm, N)
    rng = np.random.default_rng(int(prm.get("seed", 0)))
    w = GridFn(mesh, rng.uniform(-1, 1, N + 1), CELL)
    back = invert_frac_integral(frac_integral_left(w, alpha), alpha)
    return float(np.max(np.abs(back.values - w.values)))


def _err_semigroup(N: int, prm: dict[str, Any]) -> float:
    a = float(prm.get("alpha", 0.3))
    b = float(prm.get("beta", 0.4))
    mesh = _mesh_from(prm, N)
    v = step_function(mesh, int(prm.get("seed", 0)))
    lhs = frac_integral_left(frac_integral_left(v, b), a)
    rhs = frac_integral_left(v, a + b)
    return float(np.max(np.abs(lhs.values - rhs.values)) / np.max(np.abs(v.values)))


def _err_decomposition(N: int, prm: dict[str, Any]) -> float:
    alpha = float(prm.get("alpha", 0.5))
    mesh = _mesh_from(prm, N)
    u = GridFn(mesh, mesh.nodes, LINEAR)
    return s1_s2_decomposition(u, alpha).discrepancy


#: Registered study targets: name -> error at N for the given parameters.
TARGETS: dict[str, Callable[[int, dict[str, Any]], float]] = {
    "power_law": _err_power_law,
    "section1": _err_power_law,
    "mittag_leffler": _err_mittag_leffler,
    "dirac": _err_dirac,
    "frac_integral_power": _err_frac_integral_power,
    "inversion_roundtrip": _err_inversion,
    "semigroup": _err_semigroup,
    "decomposition": _err_decomposition,
}


def convergence_study(
    target: str, mesh_sizes: Sequence[int], params: dict[str, Any] | None = None
) -> ConvergenceStudy:
    """Errors of a registered target against its oracle, with the fitted order."""
    if target not in TARGETS:
        raise OracleMissingError(f"no oracle registered for target {target!r}")
    sizes = [int(n) for n in mesh_sizes]
    if len(sizes) < 3 or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
        raise DomainError("mesh_sizes must be at least three strictly increasing positive integers")
    prm = dict(params or {})
    fn = TARGETS[target]
    errors = _map(lambda n: fn(n, prm), sizes)
    order, dropped = fit_order(sizes, errors)
    return ConvergenceStudy(target, prm, tuple(sizes), tuple(float(e) for e in errors), order, math.isinf(order), dropped)


# identity suite


def load_tolerance_profile(name: str = "default") -> dict[str, dict[str, Any]]:
    data = json.loads(resources.files("fracalc").joinpath("data/tolerances.json").read_text())
    if name not in data:
        raise OracleMissingError(f"unknown tolerance profile {name!r}")
    return data[name]


def _tolerance(entry: dict[str, Any], N: int) -> float:
    if entry["kind"] == "exact":
        return float(entry["tol"])
    return float(entry["tol"]) * (float(entry["N_ref"]) / N) ** float(entry["order"])


@dataclass(frozen=True)
class IdentityResult:
    name: str
    kind: str
    discrepancy: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class SuiteReport:
    seed: int
    N: int
    profile: str
    results: tuple[IdentityResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def discrepancies(self) -> dict[str, float]:
        return {r.name: r.discrepancy for r in self.results}

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "N": self.N,
            "profile": self.profile,
            "passed": self.passed,
            "results": [
                {"name": r.name, "kind": r.kind, "discrepancy": r.discrepancy, "tolerance": r.tolerance, "passed": r.passed}
                for r in self.results
            ],
        }

    def to_text(self) -> str:
        lines = [f"{'identity':<16} {'kind':<9} {'discrepancy':>12} {'tolerance':>12}  result"]
        for r in self.results:
            lines.append(
                f"{r.name:<16} {r.kind:<9} {r.discrepancy:>12.4e} {r.tolerance:>12.4e}  {'pass' if r.passed else 'FAIL'}"
            )
        return "\n".join(lines)


def _identity_checks(mesh: Mesh, seed: int, zero: bool) -> dict[str, Callable[[], float]]:
    scale = 0.0 if zero else 1.0
    step = step_function(mesh, seed) * scale
    smooth = frac_integral_left(step, 1.0)  # continuous, vanishes at 0
    rng = np.random.default_rng(seed + 1)
    w = GridFn(mesh, scale * rng.uniform(-1, 1, mesh.N + 1), CELL)
    a = 0.5

    def semigroup() -> float:
        lhs = frac_integral_left(frac_integral_left(step, 0.4), 0.3)
        return float(np.max(np.abs(lhs.values - frac_integral_left(step, 0.7).values)))

    def reflection() -> float:
        lhs = frac_integral_right(step, a)
        rhs = reflect(frac_integral_left(reflect(step), a))
        return float(np.max(np.abs(lhs.values - rhs.values)))

    def commutation() -> float:
        lhs = derivative(frac_integral_left(smooth, a))
        rhs = frac_integral_left(derivative(smooth), a).as_cell()
        return float(np.max(np.abs(lhs.values[1:] - rhs.values[1:])))

    def rl_inversion() -> float:
        back = riemann_liouville(frac_integral_left(smooth, a), a)
        return float(np.max(np.abs(back.values[1:] - smooth.as_cell().values[1:])))

    def reconstruction() -> float:
        u = frac_integral_left(step, a + 0.3)
        back = frac_integral_left(derivative(frac_integral_left(u, 1.0 - a)), a)
        return float(np.max(np.abs(back.values - u.values)))

    def inversion() -> float:
        back = invert_frac_integral(frac_integral_left(w, a), a)
        return float(np.max(np.abs(back.values - w.values)))

    def isometry() -> float:
        return abs(lp_norm(invert_frac_integral(frac_integral_left(w, a), a), 2) - lp_norm(w, 2))

    def decomposition() -> float:
        return s1_s2_decomposition(smooth, a).discrepancy

    return {
        "semigroup": semigroup,
        "reflection": reflection,
        "commutation": commutation,
        "rl_inversion": rl_inversion,
        "reconstruction": reconstruction,
        "inversion": inversion,
        "isometry": isometry,
        "decomposition": decomposition,
    }


def identity_suite(seed: int = 0, N: int = 1024, tolerance_profile: str = "default", zero_input: bool = False) -> SuiteReport:
    """Evaluate every operator identity on seeded inputs on a uniform mesh of ``N`` cells.

    Inputs are built from a step function with seeded levels (smoothed by
    one ordinary integration where continuity is needed), so the same
    functions are used at every ``N``. ``zero_input`` replaces them by zero.
    """
    profile = load_tolerance_profile(tolerance_profile)
    mesh = Mesh.uniform(N)
    checks = _identity_checks(mesh, seed, zero_input)
    missing = set(checks) - set(profile)
    if missing:
        raise OracleMissingError(f"tolerance profile lacks entries for {sorted(missing)}")
    names = sorted(checks)
    values = _map(lambda n: checks[n](), names)
    results = []
    for name, d in zip(names, values):
        entry = profile[name]
        tol = _tolerance(entry, N)
        results.append(IdentityResult(name, entry["kind"], float(d), tol, bool(d <= tol)))
    return SuiteReport(int(seed), int(N), tolerance_profile, tuple(results))


