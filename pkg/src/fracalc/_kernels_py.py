"""Pure numpy kernels; the reference implementation and import-time fallback.

Arrays are float64 of length ``N + 1`` indexed by node. Cell data use
``v[k]`` for the cell ``(t[k-1], t[k]]``.
"""

from __future__ import annotations

import numpy as np

from ._weights import cell_weights, linear_weights

NAME = "python"


def left_uniform(coef: np.ndarray, end: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``out[i] = sum_{j=1..i} coef[i-j] v[j] + end[i-1] v[0]``."""
    N = v.size - 1
    out = np.zeros(N + 1)
    out[1:] = np.convolve(coef, v[1:])[:N] + end * v[0]
    return out


def right_uniform(coef: np.ndarray, end: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``out[i] = sum_{j=i..N-1} coef[j-i] x[j] + end[N-1-i] x[N]``."""
    N = x.size - 1
    out = np.zeros(N + 1)
    out[:N] = np.convolve(coef, x[N - 1 :: -1])[:N][::-1] + end[::-1] * x[N]
    return out


def left_general(t: np.ndarray, v: np.ndarray, alpha: float, linear: bool) -> np.ndarray:
    N = t.size - 1
    h = np.diff(t)
    out = np.zeros(N + 1)
    for i in range(1, N + 1):
        x = t[i] - t[1 : i + 1]
        if linear:
            near, far = linear_weights(x, h[:i], alpha)
            out[i] = near @ v[1 : i + 1] + far @ v[:i]
        else:
            out[i] = cell_weights(x, h[:i], alpha) @ v[1 : i + 1]
    return out


def right_general(t: np.ndarray, v: np.ndarray, alpha: float, linear: bool) -> np.ndarray:
    N = t.size - 1
    h = np.diff(t)
    out = np.zeros(N + 1)
    for i in range(N):
        x = t[i:N] - t[i]
        if linear:
            near, far = linear_weights(x, h[i:], alpha)
            out[i] = near @ v[i:N] + far @ v[i + 1 :]
        else:
            out[i] = cell_weights(x, h[i:], alpha) @ v[i + 1 :]
    return out


def solve_uniform(
    coefs: np.ndarray,
    ends: np.ndarray,
    outer: np.ndarray,
    inner: np.ndarray,
    rhs: np.ndarray,
    identity: float,
    linear: bool,
) -> np.ndarray:
    """Solve ``identity*w[i] - sum_l outer[l,i] (W_l (inner[l]*w))[i] = rhs[i]``.

    ``W_l`` is the Toeplitz operator of :func:`left_uniform` with
    ``coefs[l], ends[l]``. In cell mode ``w[0]`` is left at zero.
    """
    L, N = coefs.shape
    w = np.zeros(N + 1)
    iw = np.zeros((L, N + 1))
    if linear:
        w[0] = rhs[0] / identity
        iw[:, 0] = inner[:, 0] * w[0]
    for i in range(1, N + 1):
        s = rhs[i]
        diag = identity
        for l in range(L):
            acc = coefs[l, i - 1 : 0 : -1] @ iw[l, 1:i]
            if linear:
                acc += ends[l, i - 1] * iw[l, 0]
            s += outer[l, i] * acc
            diag -= outer[l, i] * coefs[l, 0] * inner[l, i]
        w[i] = s / diag
        iw[:, i] = inner[:, i] * w[i]
    return w


def solve_general(
    t: np.ndarray,
    alphas: np.ndarray,
    outer: np.ndarray,
    inner: np.ndarray,
    rhs: np.ndarray,
    identity: float,
    linear: bool,
) -> np.ndarray:
    """As :func:`solve_uniform` with weights built from arbitrary nodes."""
    N = t.size - 1
    L = alphas.size
    h = np.diff(t)
    w = np.zeros(N + 1)
    iw = np.zeros((L, N + 1))
    if linear:
        w[0] = rhs[0] / identity
        iw[:, 0] = inner[:, 0] * w[0]
    for i in range(1, N + 1):
        x = t[i] - t[1 : i + 1]
        s = rhs[i]
        diag = identity
        for l in range(L):
            a = float(alphas[l])
            if linear:
                near, far = linear_weights(x, h[:i], a)
                acc = near[:-1] @ iw[l, 1:i] + far @ iw[l, :i]
                d = near[-1]
            else:
                cw = cell_weights(x, h[:i], a)
                acc = cw[:-1] @ iw[l, 1:i]
                d = cw[-1]
            s += outer[l, i] * acc
            diag -= outer[l, i] * d * inner[l, i]
        w[i] = s / diag
        iw[:, i] = inner[:, i] * w[i]
    return w

