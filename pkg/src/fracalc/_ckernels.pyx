# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels with the same contract as ``_kernels_py``."""

import numpy as np

from libc.math cimport expm1, log1p, pow, tgamma

NAME = "cython"


cdef inline double _powdiff(double x, double h, double beta) noexcept nogil:
    cdef double top = x + h
    if x <= 0.0:
        return pow(top, beta)
    return pow(top, beta) * -expm1(beta * log1p(-h / top))


cdef inline void _linear(double x, double h, double a, double g,
                         double* near, double* far) noexcept nogil:
    # both power differences share top^a and log1p(-h/top)
    cdef double top = x + h
    cdef double pa = pow(top, a)
    cdef double p1, p2, r
    if x <= 0.0:
        p1 = pa / a
        p2 = pa * top / (a + 1.0)
    else:
        r = log1p(-h / top)
        p1 = -pa * expm1(a * r) / a
        p2 = -pa * top * expm1((a + 1.0) * r) / (a + 1.0)
    near[0] = (top * p1 - p2) / (h * g)
    far[0] = (p2 - x * p1) / (h * g)


def left_uniform(const double[::1] coef, const double[::1] end, const double[::1] v):
    cdef Py_ssize_t N = v.shape[0] - 1
    out_arr = np.zeros(N + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double s
    with nogil:
        for i in range(1, N + 1):
            s = end[i - 1] * v[0]
            for j in range(1, i + 1):
                s = s + coef[i - j] * v[j]
            out[i] = s
    return out_arr


def right_uniform(const double[::1] coef, const double[::1] end, const double[::1] x):
    cdef Py_ssize_t N = x.shape[0] - 1
    out_arr = np.zeros(N + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double s
    with nogil:
        for i in range(N):
            s = end[N - 1 - i] * x[N]
            for j in range(i, N):
                s = s + coef[j - i] * x[j]
            out[i] = s
    return out_arr


def left_general(const double[::1] t, const double[::1] v, double alpha, bint linear):
    cdef Py_ssize_t N = t.shape[0] - 1
    out_arr = np.zeros(N + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double s, x, h, near, far
    cdef double g = tgamma(alpha)
    cdef double g1 = tgamma(alpha + 1.0)
    with nogil:
        for i in range(1, N + 1):
            s = 0.0
            for j in range(1, i + 1):
                x = t[i] - t[j]
                h = t[j] - t[j - 1]
                if linear:
                    _linear(x, h, alpha, g, &near, &far)
                    s = s + near * v[j] + far * v[j - 1]
                else:
                    s = s + _powdiff(x, h, alpha) / g1 * v[j]
            out[i] = s
    return out_arr


def right_general(const double[::1] t, const double[::1] v, double alpha, bint linear):
    cdef Py_ssize_t N = t.shape[0] - 1
    out_arr = np.zeros(N + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double s, x, h, near, far
    cdef double g = tgamma(alpha)
    cdef double g1 = tgamma(alpha + 1.0)
    with nogil:
        for i in range(N):
            s = 0.0
            for j in range(i + 1, N + 1):
                x = t[j - 1] - t[i]
                h = t[j] - t[j - 1]
                if linear:
                    _linear(x, h, alpha, g, &near, &far)
                    s = s + near * v[j - 1] + far * v[j]
                else:
                    s = s + _powdiff(x, h, alpha) / g1 * v[j]
            out[i] = s
    return out_arr


def solve_uniform(const double[:, ::1] coefs, const double[:, ::1] ends,
                  const double[:, ::1] outer, const double[:, ::1] inner,
                  const double[::1] rhs, double identity, bint linear):
    cdef Py_ssize_t L = coefs.shape[0]
    cdef Py_ssize_t N = coefs.shape[1]
    w_arr = np.zeros(N + 1)
    iw_arr = np.zeros((L, N + 1))
    cdef double[::1] w = w_arr
    cdef double[:, ::1] iw = iw_arr
    cdef Py_ssize_t i, j, l
    cdef double s, diag, acc
    with nogil:
        if linear:
            w[0] = rhs[0] / identity
            for l in range(L):
                iw[l, 0] = inner[l, 0] * w[0]
        for i in range(1, N + 1):
            s = rhs[i]
            diag = identity
            for l in range(L):
                acc = 0.0
                for j in range(1, i):
                    acc = acc + coefs[l, i - j] * iw[l, j]
                if linear:
                    acc = acc + ends[l, i - 1] * iw[l, 0]
                s = s + outer[l, i] * acc
                diag = diag - outer[l, i] * coefs[l, 0] * inner[l, i]
            w[i] = s / diag
            for l in range(L):
                iw[l, i] = inner[l, i] * w[i]
    return w_arr


def solve_general(const double[::1] t, const double[::1] alphas,
                  const double[:, ::1] outer, const double[:, ::1] inner,
                  const double[::1] rhs, double identity, bint linear):
    cdef Py_ssize_t N = t.shape[0] - 1
    cdef Py_ssize_t L = alphas.shape[0]
    w_arr = np.zeros(N + 1)
    iw_arr = np.zeros((L, N + 1))
    g_arr = np.array([tgamma(alphas[l]) for l in range(L)])
    g1_arr = np.array([tgamma(alphas[l] + 1.0) for l in range(L)])
    cdef double[::1] w = w_arr
    cdef double[:, ::1] iw = iw_arr
    cdef double[::1] g = g_arr
    cdef double[::1] g1 = g1_arr
    cdef Py_ssize_t i, j, l
    cdef double s, diag, acc, x, h, a, near, far, d
    with nogil:
        if linear:
            w[0] = rhs[0] / identity
            for l in range(L):
                iw[l, 0] = inner[l, 0] * w[0]
        for i in range(1, N + 1):
            s = rhs[i]
            diag = identity
            for l in range(L):
                a = alphas[l]
                acc = 0.0
                for j in range(1, i + 1):
                    x = t[i] - t[j]
                    h = t[j] - t[j - 1]
                    if linear:
                        _linear(x, h, a, g[l], &near, &far)
                        acc = acc + far * iw[l, j - 1]
                        if j < i:
                            acc = acc + near * iw[l, j]
                        else:
                            d = near
                    else:
                        if j < i:
                            acc = acc + _powdiff(x, h, a) / g1[l] * iw[l, j]
                        else:
                            d = _powdiff(x, h, a) / g1[l]
                s = s + outer[l, i] * acc
                diag = diag - outer[l, i] * d * inner[l, i]
            w[i] = s / diag
            for l in range(L):
                iw[l, i] = inner[l, i] * w[i]
    return w_arr
