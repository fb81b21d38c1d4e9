"""Command line front end: ``fracalc <verb> --input FILE --out DIR``.

Exit status is 0 on success, 2 for invalid input, and 3 when ``--strict``
is given and the computation raised a diagnostic flag.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import FracalcError, OracleMissingError, SchemaError
from .frac_ops import (
    caputo,
    frac_integral_left,
    frac_integral_right,
    invert_frac_integral,
    membership_diagnostic,
    reflect,
    riemann_liouville,
)
from .grid import CELL, LINEAR, GridFn, Mesh, lp_norm
from .ivp import SolveReport, problem_from_dict, solve, solve_singular_coeff
from .order import FracOrder
from .spaces import SlobodeckiParams, slobodecki_norm, wap_norm
from .special import mittag_leffler, power_rule
from .verify import convergence_study, identity_suite, thread_count

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FLAGGED = 3

VERBS = ("apply", "solve", "norm", "study", "suite")


class Flagged(Exception):
    """Computation finished but raised a diagnostic."""


# helpers


def _clean(obj: Any) -> Any:
    """Make a structure JSON-safe: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(d: dict, key: str) -> Any:
    if key not in d:
        raise SchemaError(f"missing field {key!r}")
    return d[key]


def _num(d: dict, key: str, default: float | None = None) -> float:
    if key not in d:
        if default is None:
            raise SchemaError(f"missing field {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"field {key!r} must be a number")
    return float(v)


def _check_keys(d: dict, allowed: set[str], verb: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise SchemaError(f"unknown fields for {verb!r}: {sorted(extra)}")


def _grid_input(source: Any, mesh: Mesh, convention: str, seed: int) -> tuple[GridFn, tuple[float, float] | None]:
    """Parse a function description; returns the grid function and ``(c, mu)`` if it is a power."""
    power: tuple[float, float] | None = None
    if source == "ones":
        power = (1.0, 0.0)
    elif source == "zeros":
        power = (0.0, 0.0)
    elif source == "t":
        power = (1.0, 1.0)
    elif isinstance(source, dict) and "power" in source:
        power = (_num(source, "c", 1.0), _num(source, "power"))
    elif isinstance(source, dict) and "values" in source:
        vals = source["values"]
        if not isinstance(vals, list) or len(vals) != mesh.N + 1:
            raise SchemaError(f"'values' must be a list of {mesh.N + 1} numbers")
        return GridFn(mesh, np.asarray(vals, dtype=float), convention), None
    elif isinstance(source, dict) and source.get("random") == "uniform":
        rng = np.random.default_rng(seed)
        return GridFn(mesh, rng.uniform(-1.0, 1.0, mesh.N + 1), convention), None
    else:
        raise SchemaError(f"unknown function source {source!r}")
    c, mu = power
    if mu < 0 and convention == LINEAR:
        raise SchemaError("negative powers need the cell convention")
    if convention == CELL:
        return GridFn.from_antiderivative(mesh, lambda t: c * t ** (mu + 1) / (mu + 1)), power
    return GridFn(mesh, c * mesh.nodes**mu, LINEAR), power


def _convention(d: dict) -> str:
    conv = d.get("convention", LINEAR)
    if conv not in (LINEAR, CELL):
        raise SchemaError(f"convention must be 'linear' or 'cell', got {conv!r}")
    return conv


def _grid_csv(t: np.ndarray, columns: dict[str, np.ndarray]) -> str:
    names = ["t", *columns]
    lines = [",".join(names)]
    for i, ti in enumerate(t):
        lines.append(",".join([repr(float(ti))] + [repr(float(col[i])) for col in columns.values()]))
    return "\n".join(lines) + "\n"


# verbs: each returns (json_payload, csv_text, flagged)


def _do_apply(cfg: dict, args: argparse.Namespace) -> tuple[dict, str, bool]:
    _check_keys(cfg, {"op", "alpha", "v", "mesh", "convention", "oracle"}, "apply")
    op = _require(cfg, "op")
    ops: dict[str, Callable[..., GridFn]] = {
        "J": frac_integral_left,
        "J_right": frac_integral_right,
        "caputo": caputo,
        "rl": riemann_liouville,
        "invert": invert_frac_integral,
    }
    if op not in ops and op != "reflect":
        raise SchemaError(f"unknown op {op!r}; expected one of {sorted([*ops, 'reflect'])}")
    mesh = Mesh.from_dict(_require(cfg, "mesh"))
    conv = _convention(cfg)
    v, power = _grid_input(_require(cfg, "v"), mesh, conv, args.seed)
    if op == "reflect":
        out = reflect(v)
        alpha = None
    else:
        alpha = _num(cfg, "alpha")
        out = ops[op](v, FracOrder(alpha))
    resolved = {"op": op, "alpha": alpha, "mesh": mesh.to_dict(), "convention": conv, "v": cfg["v"]}
    payload: dict[str, Any] = {"config": resolved, "result": out.to_dict()}
    columns = {"value": out.values}
    oracle = cfg.get("oracle")
    if oracle is not None:
        if oracle != "power_rule" or op != "J" or power is None:
            raise OracleMissingError("oracle 'power_rule' needs op 'J' and a power-law input")
        c, mu = power
        exact = c * power_rule(mu, alpha) * mesh.nodes ** (mu + alpha)
        err = np.abs(out.values - exact)
        columns.update(exact=exact, abs_error=err)
        payload["max_error"] = float(err.max())
        resolved["oracle"] = oracle
    return payload, _grid_csv(mesh.nodes, columns), False


def _solve_oracle(name: str, prob: Any, mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form solution and the mask of nodes where it is compared."""
    from .ivp import PowerSum

    t = mesh.nodes
    a = prob.alpha.alpha
    everywhere = np.ones(t.size, dtype=bool)
    if name in ("power_law", "section1"):
        f = prob.forcing.f if prob.forcing.kind == "regular" else None
        if prob.b is not None or prob.multiterm or not isinstance(f, PowerSum) or len(f.terms) != 1:
            raise OracleMissingError("the power-law oracle needs b = 0 and a single power forcing c t^(-gamma)")
        c, mu = f.terms[0]
        return prob.a + c * power_rule(mu, a) * t ** (mu + a), everywhere
    if name == "mittag_leffler":
        b = prob.b.func if prob.b is not None else None
        if (
            not isinstance(b, PowerSum)
            or len(b.terms) != 1
            or b.terms[0][1] != 0
            or prob.multiterm
            or prob.forcing.kind != "none"
        ):
            raise OracleMissingError("the Mittag-Leffler oracle needs a constant b and no forcing")
        lam = b.terms[0][0]
        return prob.a * mittag_leffler(a, lam * t**a), everywhere
    if name == "dirac":
        if prob.forcing.kind != "dirac" or prob.b is not None:
            raise OracleMissingError("the impulse oracle needs dirac forcing and b = 0")
        t0, wt = prob.forcing.t0, prob.forcing.weight
        after = t > t0
        exact = np.full(t.size, prob.a)
        exact[after] += wt * (t[after] - t0) ** (a - 1) / math.gamma(a)
        return exact, after
    raise OracleMissingError(f"no oracle named {name!r}")


def _do_solve(cfg: dict, args: argparse.Namespace) -> tuple[dict, str, bool]:
    prob, mesh = problem_from_dict(cfg)
    scheme = cfg.get("scheme", "auto")
    if scheme not in ("auto", "linear", "cell"):
        raise SchemaError(f"unknown scheme {scheme!r}")
    if prob.b is not None and not prob.b.bounded:
        report: SolveReport = solve_singular_coeff(prob, mesh, force=args.force, check_membership=True)
    else:
        report = solve(prob, mesh, scheme=scheme, force=args.force)
    resolved = prob.to_dict()
    resolved.update(mesh=mesh.to_dict(), scheme=report.scheme)
    payload: dict[str, Any] = {"config": resolved, "report": report.to_dict(), "u": report.u.values.tolist()}
    exact = None
    oracle = cfg.get("oracle")
    if oracle is not None:
        exact, mask = _solve_oracle(oracle, prob, mesh)
        payload["max_error"] = float(np.max(np.abs(report.u.values - exact)[mask]))
        resolved["oracle"] = oracle
    return payload, report.to_csv(exact), bool(report.flags)


def _do_norm(cfg: dict, args: argparse.Namespace) -> tuple[dict, str, bool]:
    _check_keys(cfg, {"norm", "p", "alpha", "u", "mesh", "convention", "levels"}, "norm")
    kind = _require(cfg, "norm")
    mesh = Mesh.from_dict(_require(cfg, "mesh"))
    conv = _convention(cfg)
    source = _require(cfg, "u")
    p = cfg.get("p", 2.0)
    resolved: dict[str, Any] = {"norm": kind, "p": p, "mesh": mesh.to_dict(), "convention": conv, "u": source}
    flagged = False
    if kind == "membership":
        alpha = _num(cfg, "alpha")
        levels = int(cfg.get("levels", 4))
        _grid_input(source, mesh, conv, args.seed)
        rep = membership_diagnostic(lambda m: _grid_input(source, m, conv, args.seed)[0], alpha, _num(cfg, "p"), mesh, levels)
        resolved.update(alpha=alpha, levels=levels)
        flagged = rep.divergent
        payload = {"config": resolved, "membership": rep.to_dict()}
        rows = [f"{n},{nm!r}" for n, nm in zip(rep.mesh_sizes, rep.norms)]
        return payload, "N,norm\n" + "\n".join(rows) + "\n", flagged
    u, _ = _grid_input(source, mesh, conv, args.seed)
    if kind == "lp":
        value = lp_norm(u, p)
    elif kind == "slobodecki":
        alpha = _num(cfg, "alpha")
        resolved["alpha"] = alpha
        value = slobodecki_norm(u, SlobodeckiParams(FracOrder(alpha), float(p)))
    elif kind == "wap":
        alpha = _num(cfg, "alpha")
        resolved["alpha"] = alpha
        value = wap_norm(u, alpha, p)
    else:
        raise SchemaError(f"unknown norm {kind!r}")
    return {"config": resolved, "value": value}, f"name,value\n{kind},{value!r}\n", flagged


def _do_study(cfg: dict, args: argparse.Namespace) -> tuple[dict, str, bool]:
    _check_keys(cfg, {"target", "mesh_sizes", "params"}, "study")
    target = _require(cfg, "target")
    sizes = _require(cfg, "mesh_sizes")
    if not isinstance(sizes, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in sizes):
        raise SchemaError("'mesh_sizes' must be a list of integers")
    params = dict(cfg.get("params", {}))
    if args.seed is not None:
        params["seed"] = args.seed
    study = convergence_study(target, sizes, params)
    payload = {"config": {"target": target, "mesh_sizes": sizes, "params": params}, "study": study.to_dict()}
    return payload, study.to_csv(), False


def _do_suite(cfg: dict, args: argparse.Namespace) -> tuple[dict, str, bool]:
    _check_keys(cfg, {"N", "profile", "seed"}, "suite")
    N = cfg.get("N", 1024)
    if not isinstance(N, int) or isinstance(N, bool) or N < 16:
        raise SchemaError("'N' must be an integer >= 16")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    profile = cfg.get("profile", "default")
    rep = identity_suite(seed, N, profile)
    payload = {"config": {"N": N, "profile": profile, "seed": seed}, "suite": rep.to_dict()}
    rows = ["name,kind,discrepancy,tolerance,passed"]
    rows += [f"{r.name},{r.kind},{r.discrepancy!r},{r.tolerance!r},{r.passed}" for r in rep.results]
    return payload, "\n".join(rows) + "\n", not rep.passed


HANDLERS = {"apply": _do_apply, "solve": _do_solve, "norm": _do_norm, "study": _do_study, "suite": _do_suite}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracalc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fracalc {__version__}")
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--input", type=Path, help="JSON problem or configuration file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), default="both")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--strict", action="store_true", help="exit 3 when a diagnostic is flagged")
    parser.add_argument("--force", action="store_true", help="compute outside the proven parameter regime")
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        thread_count()
        if args.input is None:
            if args.verb != "suite":
                raise SchemaError(f"verb {args.verb!r} needs --input")
            cfg: dict = {}
            stem = "suite"
        else:
            try:
                cfg = json.loads(args.input.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise SchemaError(f"cannot read {args.input}: {exc}") from exc
            if not isinstance(cfg, dict):
                raise SchemaError("input file must hold a JSON object")
            stem = args.input.stem
        payload, csv_text, flagged = HANDLERS[args.verb](cfg, args)
    except FracalcError as exc:
        print(f"fracalc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    payload["config"]["backend"] = BACKEND
    payload["config"]["seed"] = args.seed
    payload["flagged"] = flagged
    args.out.mkdir(parents=True, exist_ok=True)
    base = args.out / f"{stem}.{args.verb}"
    if args.format in ("json", "both"):
        _write_atomic(base.with_suffix(base.suffix + ".json"), _dumps(payload))
    if args.format in ("csv", "both"):
        _write_atomic(base.with_suffix(base.suffix + ".csv"), csv_text)
    if flagged:
        print(f"fracalc: diagnostic flagged for {args.verb}", file=sys.stderr)
        if args.strict:
            return EXIT_FLAGGED
    return EXIT_OK


def main() -> None:
    sys.exit(run())
