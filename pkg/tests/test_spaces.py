from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracalc import (
    CELL,
    LINEAR,
    DomainError,
    FracOrder,
    GridFn,
    IntegerOrderError,
    Mesh,
    SlobodeckiParams,
    embedding_scan,
    frac_integral_left,
    lp_norm,
    slobodecki_norm,
    slobodecki_seminorm,
    wap_norm,
)
from fracalc.spaces import embedding_ratio


def power_distance_integral(e: float) -> float:
    """Integral of |x - y|^e over the unit square."""
    return 2.0 / ((e + 1.0) * (e + 2.0))


def brute_seminorm(u: GridFn, sigma: float, p: float) -> float:
    """Adaptive quadrature in (d, x) with y = x + d, split at every kink."""
    t, v = u.mesh.nodes, u.values
    gaps = np.unique(np.abs(t[:, None] - t[None, :]).ravel())

    def inner(d):
        kinks = np.unique(np.concatenate([t, t - d]))
        kinks = kinks[(kinks > 0) & (kinks < 1 - d)]
        g = lambda x: abs(np.interp(x + d, t, v) - np.interp(x, t, v)) ** p  # noqa: E731
        return integrate.quad(g, 0.0, 1.0 - d, points=kinks, limit=200, epsabs=1e-14, epsrel=1e-12)[0]

    total = 0.0
    for lo, hi in zip(gaps[:-1], gaps[1:]):
        total += integrate.quad(
            lambda d: inner(d) / d ** (1 + sigma * p), lo, hi, limit=200, epsabs=1e-13, epsrel=1e-11
        )[0]
    return (2.0 * total) ** (1 / p)


def test_identity_function_half_order_p2_is_one():
    u = GridFn(Mesh.uniform(512), Mesh.uniform(512).nodes)
    assert slobodecki_seminorm(u, 0.5, 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sigma,p", [(0.3, 2.0), (0.7, 1.5), (0.5, 3.0), (0.2, 1.0)])
def test_identity_function_closed_form(sigma, p):
    m = Mesh.graded(64, 1.7)
    exact = power_distance_integral(p - 1 - sigma * p) ** (1 / p)
    assert slobodecki_seminorm(GridFn(m, m.nodes), sigma, p) == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("sigma,p", [(0.3, 2.0), (0.6, 1.5)])
def test_piecewise_linear_matches_brute_force(sigma, p):
    m = Mesh.graded(5, 1.5)
    u = GridFn(m, np.sin(3.0 * m.nodes))
    assert slobodecki_seminorm(u, sigma, p) == pytest.approx(brute_seminorm(u, sigma, p), rel=1e-6)


def test_constants_have_zero_seminorm():
    m = Mesh.uniform(32)
    for conv in (LINEAR, CELL):
        assert slobodecki_seminorm(GridFn.constant(m, 3.0, conv), 0.4, 2) == 0.0


@given(st.floats(-5, 5), st.floats(-3, 3))
def test_homogeneous_and_shift_invariant(c, shift):
    m = Mesh.uniform(12)
    base = GridFn(m, np.cos(2.0 * m.nodes))
    moved = GridFn(m, c * base.values + shift)
    ref = slobodecki_seminorm(base, 0.45, 1.7)
    assert slobodecki_seminorm(moved, 0.45, 1.7) == pytest.approx(abs(c) * ref, rel=1e-10, abs=1e-13)


def test_cell_data_gives_lower_bound_that_tightens():
    exact = 1.0  # u = t, sigma = 0.5, p = 2
    prev = 0.0
    for N in (16, 64, 256):
        m = Mesh.uniform(N)
        u = GridFn.from_antiderivative(m, lambda t: 0.5 * t**2)
        val = slobodecki_seminorm(u, 0.5, 2)
        assert prev < val < exact
        prev = val


def test_higher_order_uses_derivatives():
    m = Mesh.uniform(256)
    u = GridFn(m, 0.5 * m.nodes**2)
    # the first derivative is t, so the seminorm approaches that of t from below
    val = slobodecki_seminorm(u, 1.5, 2)
    assert 0.9 < val < 1.0
    full = slobodecki_norm(u, 1.5, 2)
    lower = lp_norm(u, 2) ** 2 + lp_norm(GridFn(m, m.nodes), 2) ** 2
    assert full**2 == pytest.approx(lower + val**2, rel=1e-2)


def test_norm_adds_lp_part():
    m = Mesh.uniform(64)
    u = GridFn(m, m.nodes)
    expected = (lp_norm(u, 2) ** 2 + slobodecki_seminorm(u, 0.5, 2) ** 2) ** 0.5
    assert slobodecki_norm(u, SlobodeckiParams(FracOrder(0.5), 2)) == pytest.approx(expected, rel=1e-14)


def test_parameter_validation():
    with pytest.raises(IntegerOrderError):
        SlobodeckiParams(FracOrder(1.0), 2)
    with pytest.raises(DomainError):
        SlobodeckiParams(FracOrder(0.5), math.inf)
    with pytest.raises(DomainError):
        SlobodeckiParams(FracOrder(0.5), 0.5)
    with pytest.raises(DomainError):
        slobodecki_seminorm(GridFn.zeros(Mesh.uniform(4)), 0.5)


@given(st.floats(0.1, 0.95), st.sampled_from([1.0, 2.0, 3.5]), st.integers(0, 2**31))
def test_wap_norm_is_isometry(alpha, p, seed):
    m = Mesh.graded(32, 1.5)
    w = GridFn(m, np.random.default_rng(seed).uniform(-1, 1, m.N + 1), CELL)
    assert wap_norm(frac_integral_left(w, alpha), alpha, p) == pytest.approx(lp_norm(w, p), rel=1e-9)


def test_wap_norm_rejects_infinite_p():
    with pytest.raises(DomainError):
        wap_norm(GridFn.zeros(Mesh.uniform(4)), 0.5, math.inf)


def test_embedding_scan_reproducible():
    m = Mesh.uniform(64)
    a = embedding_scan(0.6, 0.1, 2.0, 4, m, seed=11)
    b = embedding_scan(0.6, 0.1, 2.0, 4, m, seed=11)
    c = embedding_scan(0.6, 0.1, 2.0, 4, m, seed=12)
    assert a == b and a.ratios != c.ratios
    assert a.max_ratio == max(a.ratios) and len(a.ratios) == 4
    d = a.to_dict()
    assert d["seed"] == 11 and d["N"] == 64 and d["sample_count"] == 4


def test_embedding_scan_thread_count_does_not_change_result(monkeypatch):
    m = Mesh.uniform(32)
    monkeypatch.setenv("FRACALC_THREADS", "1")
    one = embedding_scan(0.5, 0.2, 1.5, 3, m, seed=5)
    monkeypatch.setenv("FRACALC_THREADS", "3")
    three = embedding_scan(0.5, 0.2, 1.5, 3, m, seed=5)
    assert one.ratios == three.ratios


def test_embedding_ratio_stays_bounded_under_refinement():
    ratios = []
    for N in (256, 512, 1024):
        rep = embedding_scan(0.6, 0.2, 2.0, 3, Mesh.uniform(N), seed=3)
        ratios.append(rep.max_ratio)
    assert max(ratios) < 10.0
    assert ratios[2] / ratios[0] < 2.0


def test_embedding_ratio_of_constant():
    m = Mesh.uniform(128)
    assert embedding_ratio(GridFn.constant(m, 1.0), 0.5, 0.1, 2.0) > 0


def test_embedding_scan_validation():
    m = Mesh.uniform(8)
    with pytest.raises(DomainError):
        embedding_scan(0.5, 0.6, 2.0, 2, m)
    with pytest.raises(DomainError):
        embedding_scan(0.5, 0.1, 2.0, 0, m)
