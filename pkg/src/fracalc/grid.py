"""Time meshes on [0, T], grid functions, and discrete L^p norms."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np

from .errors import ConventionError, DomainError, MeshMismatchError, SchemaError

__all__ = [
    "CELL",
    "LINEAR",
    "GridFn",
    "Mesh",
    "default_grading",
    "lp_exponent",
    "lp_norm",
    "refine",
]

Convention = Literal["cell", "linear"]

#: Piecewise-constant reconstruction: ``values[k]`` is the value on
#: ``(t[k-1], t[k]]``; ``values[0]`` mirrors ``values[1]``.
CELL: Convention = "cell"
#: Continuous piecewise-linear interpolation of the node values.
LINEAR: Convention = "linear"


def default_grading(alpha: float) -> float:
    """Grading exponent ``max(1, 1/alpha)``.

    Solutions of order-alpha problems with bounded data behave like
    ``t^alpha`` near the origin. With ``t_j = T (j/N)^r`` and ``r = 1/alpha``
    the first cell has width ``~N^(-1/alpha)``, so the local error there
    matches the ``O(1/N)`` error away from the origin.
    """
    return max(1.0, 1.0 / float(alpha))


@dataclass(frozen=True)
class Mesh:
    """A partition ``0 = t_0 < ... < t_N = T``.

    ``kind`` is ``"uniform"`` or ``"graded"``; graded meshes use
    ``t_j = T (j/N)^r`` with ``r >= 1``.
    """

    N: int
    T: float = 1.0
    kind: str = "uniform"
    r: float = 1.0

    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool) or self.N < 1:
            raise DomainError(f"mesh needs an integer number of cells N >= 1, got {self.N!r}")
        T = float(self.T)
        if not math.isfinite(T) or T <= 0:
            raise DomainError(f"horizon T must be positive and finite, got {self.T!r}")
        if self.kind not in ("uniform", "graded"):
            raise DomainError(f"unknown mesh kind {self.kind!r}")
        r = float(self.r)
        if self.kind == "uniform":
            r = 1.0
        elif not math.isfinite(r) or r < 1:
            raise DomainError(f"grading exponent must be >= 1, got {self.r!r}")

        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "r", r)

        j = np.arange(self.N + 1, dtype=float)
        if self.kind == "uniform":
            t = T * j / self.N
        else:
            t = T * (j / self.N) ** r
        t[0] = 0.0
        t[-1] = T
        if np.any(np.diff(t) <= 0):
            raise DomainError("mesh nodes are not strictly increasing (N too large for this grading)")
        t.setflags(write=False)
        object.__setattr__(self, "nodes", t)

    @classmethod
    def uniform(cls, N: int, T: float = 1.0) -> Mesh:
        return cls(N=N, T=T, kind="uniform")

    @classmethod
    def graded(cls, N: int, r: float, T: float = 1.0) -> Mesh:
        return cls(N=N, T=T, kind="graded", r=r)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        return self.kind == "uniform" or self.r == 1.0

    @property
    def is_symmetric(self) -> bool:
        """True if the node set is invariant under ``t -> T - t``."""
        return self.is_uniform

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"N": self.N, "T": self.T, "kind": self.kind}
        if self.kind == "graded":
            d["r"] = self.r
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Mesh:
        if not isinstance(d, dict) or "N" not in d:
            raise SchemaError("mesh must be an object with at least an integer field 'N'")
        unknown = set(d) - {"N", "T", "kind", "r"}
        if unknown:
            raise SchemaError(f"unknown mesh fields: {sorted(unknown)}")
        N = d["N"]
        if not isinstance(N, int) or isinstance(N, bool):
            raise SchemaError("mesh field 'N' must be an integer")
        kind = d.get("kind", "uniform")
        try:
            return cls(N=N, T=float(d.get("T", 1.0)), kind=kind, r=float(d.get("r", 1.0)))
        except (DomainError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid mesh: {exc}") from exc


def refine(mesh: Mesh, factor: int = 2) -> Mesh:
    """Mesh of the same kind with ``factor`` times as many cells."""
    if not isinstance(factor, (int, np.integer)) or factor < 2:
        raise DomainError(f"refinement factor must be an integer >= 2, got {factor!r}")
    return Mesh(N=mesh.N * int(factor), T=mesh.T, kind=mesh.kind, r=mesh.r)


@dataclass(frozen=True, eq=False)
class GridFn:
    """A real function sampled on a mesh.

    ``convention`` records the reconstruction the operators integrate
    exactly: ``"linear"`` (node values, linear in between) or ``"cell"``
    (``values[k]`` holds on ``(t[k-1], t[k]]``).
    """

    mesh: Mesh
    values: np.ndarray
    convention: Convention = LINEAR

    def __post_init__(self) -> None:
        if self.convention not in (CELL, LINEAR):
            raise ConventionError(f"unknown convention {self.convention!r}")
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (self.mesh.N + 1,):
            raise DomainError(f"expected {self.mesh.N + 1} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function values must be finite")
        if self.convention == CELL:
            v[0] = v[1]
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    # construction helpers

    @classmethod
    def zeros(cls, mesh: Mesh, convention: Convention = LINEAR) -> GridFn:
        return cls(mesh, np.zeros(mesh.N + 1), convention)

    @classmethod
    def constant(cls, mesh: Mesh, c: float, convention: Convention = LINEAR) -> GridFn:
        return cls(mesh, np.full(mesh.N + 1, float(c)), convention)

    @classmethod
    def from_function(
        cls, mesh: Mesh, f: Callable[[np.ndarray], np.ndarray], convention: Convention = LINEAR
    ) -> GridFn:
        """Sample ``f`` at the nodes (linear) or the cell midpoints (cell)."""
        t = mesh.nodes
        if convention == LINEAR:
            return cls(mesh, np.broadcast_to(f(t), t.shape), LINEAR)
        mid = 0.5 * (t[1:] + t[:-1])
        v = np.empty(mesh.N + 1)
        v[1:] = np.broadcast_to(f(mid), mid.shape)
        return cls(mesh, v, CELL)

    @classmethod
    def from_antiderivative(cls, mesh: Mesh, F: Callable[[np.ndarray], np.ndarray]) -> GridFn:
        """Cell function holding the exact cell averages of ``F'``."""
        t = mesh.nodes
        Ft = np.asarray(F(t), dtype=float)
        v = np.empty(mesh.N + 1)
        v[1:] = np.diff(Ft) / mesh.widths
        return cls(mesh, v, CELL)

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes

    def with_values(self, values: np.ndarray) -> GridFn:
        return GridFn(self.mesh, values, self.convention)

    def as_cell(self) -> GridFn:
        """Cell averages of the reconstruction (identity for cell functions)."""
        if self.convention == CELL:
            return self
        v = self.values
        out = np.empty_like(v)
        out[1:] = 0.5 * (v[1:] + v[:-1])
        return GridFn(self.mesh, out, CELL)

    # arithmetic on a common mesh and convention

    def _check(self, other: GridFn) -> None:
        if other.mesh != self.mesh:
            raise MeshMismatchError("grid functions live on different meshes")
        if other.convention != self.convention:
            raise ConventionError(
                f"cannot combine {self.convention!r} and {other.convention!r} grid functions"
            )

    def _binary(self, other: Any, op: Callable[[np.ndarray, Any], np.ndarray]) -> GridFn:
        if isinstance(other, GridFn):
            self._check(other)
            return GridFn(self.mesh, op(self.values, other.values), self.convention)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return GridFn(self.mesh, op(self.values, float(other)), self.convention)
        return NotImplemented

    def __add__(self, other: Any) -> GridFn:
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other: Any) -> GridFn:
        return self._binary(other, np.subtract)

    def __rsub__(self, other: Any) -> GridFn:
        return self._binary(other, lambda x, y: np.subtract(y, x))

    def __mul__(self, other: Any) -> GridFn:
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> GridFn:
        if isinstance(other, GridFn):
            return NotImplemented
        return self._binary(other, np.divide)

    def __neg__(self) -> GridFn:
        return GridFn(self.mesh, -self.values, self.convention)

    def __abs__(self) -> GridFn:
        return GridFn(self.mesh, np.abs(self.values), self.convention)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridFn):
            return NotImplemented
        return (
            self.mesh == other.mesh
            and self.convention == other.convention
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]

    # serialization

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "T": self.mesh.T,
            "kind": self.mesh.kind,
            "nodes": self.mesh.nodes.tolist(),
            "values": self.values.tolist(),
            "convention": self.convention,
        }
        if self.mesh.kind == "graded":
            d["r"] = self.mesh.r
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GridFn:
        try:
            nodes = np.asarray(d["nodes"], dtype=float)
            values = np.asarray(d["values"], dtype=float)
            mesh = Mesh(N=nodes.size - 1, T=float(d["T"]), kind=d.get("kind", "uniform"), r=float(d.get("r", 1.0)))
        except (KeyError, TypeError, ValueError, DomainError) as exc:
            raise SchemaError(f"invalid grid function: {exc}") from exc
        if not np.allclose(nodes, mesh.nodes, rtol=1e-12, atol=1e-15 * mesh.T):
            raise SchemaError("nodes do not match the declared mesh kind")
        try:
            return cls(mesh, values, d.get("convention", LINEAR))
        except (DomainError, ConventionError) as exc:
            raise SchemaError(f"invalid grid function: {exc}") from exc

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(self.mesh.nodes, self.values):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, convention: Convention = LINEAR) -> GridFn:
        """Parse ``t,value`` rows; the mesh kind is recovered from the nodes."""
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
            raise SchemaError("CSV grid function must start with the header 't,value'")
        try:
            data = np.array([[float(a), float(b)] for a, b in rows[1:] if a.strip()], dtype=float)
        except ValueError as exc:
            raise SchemaError(f"bad CSV row: {exc}") from exc
        if data.ndim != 2 or data.shape[0] < 2:
            raise SchemaError("CSV grid function needs at least two rows")
        t, v = data[:, 0], data[:, 1]
        mesh = _infer_mesh(t)
        return cls(mesh, v, convention)


def _infer_mesh(t: np.ndarray) -> Mesh:
    N = t.size - 1
    if t[0] != 0.0 or t[-1] <= 0:
        raise SchemaError("nodes must start at 0 and end at T > 0")
    T = float(t[-1])
    tol = 1e-12 * T
    uni = Mesh.uniform(N, T)
    if np.allclose(t, uni.nodes, rtol=0, atol=tol):
        return uni
    r = math.log(t[1] / T) / math.log(1.0 / N)
    try:
        gr = Mesh.graded(N, r, T)
    except DomainError as exc:
        raise SchemaError(f"nodes are neither uniform nor graded: {exc}") from exc
    if not np.allclose(t, gr.nodes, rtol=1e-10, atol=tol):
        raise SchemaError("nodes are neither uniform nor graded")
    return gr


def lp_exponent(p: float | str) -> float:
    """Validate an exponent ``p >= 1``; ``"inf"`` and ``math.inf`` mean infinity."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        try:
            p = float(p)
        except ValueError as exc:
            raise DomainError(f"invalid exponent {p!r}") from exc
    p = float(p)
    if math.isnan(p) or p < 1:
        raise DomainError(f"L^p exponent must satisfy p >= 1, got {p}")
    return p


def lp_norm(v: GridFn, p: float | str = 2.0) -> float:
    """Discrete L^p norm that integrates the reconstruction's ``|v|^p``.

    Linear functions use composite trapezoid weights on ``|v_j|^p``; cell
    functions are integrated exactly. ``p = inf`` returns ``max |v_j|``.
    """
    p = lp_exponent(p)
    a = np.abs(v.values)
    if math.isinf(p):
        return float(a.max())
    scale = float(a.max())
    if scale == 0.0 or not math.isfinite(scale):
        return scale
    # scaled by the largest magnitude so |v|^p neither underflows nor overflows
    a = a / scale
    h = v.mesh.widths
    if v.convention == CELL:
        s = np.dot(h, a[1:] ** p)
    else:
        ap = a**p
        s = 0.5 * np.dot(h, ap[1:] + ap[:-1])
    return scale * float(s ** (1.0 / p))
