"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --sizes 512 2048 8192 --repeat 3
"""

from __future__ import annotations

import argparse
import time
from typing import Callable

import numpy as np

from fracalc import _kernels_py as py
from fracalc._weights import toeplitz_cell, toeplitz_linear

try:
    from fracalc import _ckernels as cy
except ImportError:  # pragma: no cover - depends on the build
    cy = None


def best_of(fn: Callable[[], object], repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(N: int, alpha: float) -> dict[str, Callable[[object], Callable[[], object]]]:
    rng = np.random.default_rng(0)
    v = rng.uniform(-1, 1, N + 1)
    t = (np.arange(N + 1) / N) ** 2.0
    coef, end = toeplitz_linear(alpha, N, 1.0 / N)
    coefs = toeplitz_cell(alpha, N, 1.0 / N)[None, :]
    ends = np.zeros((1, N))
    outer = np.full((1, N + 1), 0.5)
    inner = np.ones((1, N + 1))
    rhs = v.copy()
    rhs[0] = 0.0
    alphas = np.array([alpha])
    return {
        "left_uniform": lambda k: lambda: k.left_uniform(coef, end, v),
        "left_graded": lambda k: lambda: k.left_general(t, v, alpha, True),
        "solve_uniform": lambda k: lambda: k.solve_uniform(coefs, ends, outer, inner, rhs, 1.0, False),
        "solve_graded": lambda k: lambda: k.solve_general(t, alphas, outer, inner, rhs, 1.0, False),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[512, 2048, 4096])
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print(f"{'kernel':<14} {'N':>6} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}")
    for N in args.sizes:
        for name, make in cases(N, args.alpha).items():
            t_py = best_of(make(py), args.repeat)
            if cy is None:
                print(f"{name:<14} {N:>6} {t_py:>11.4f} {'n/a':>11} {'n/a':>8}")
                continue
            t_cy = best_of(make(cy), args.repeat)
            print(f"{name:<14} {N:>6} {t_py:>11.4f} {t_cy:>11.4f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
