from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracalc.errors import AsymmetricMeshError, ConventionError, DomainError, IntegerOrderError
from fracalc.frac_ops import (
    caputo,
    convolution_weights,
    derivative,
    frac_integral_left,
    frac_integral_right,
    invert_frac_integral,
    membership_diagnostic,
    reflect,
    riemann_liouville,
)
from fracalc.grid import CELL, LINEAR, GridFn, Mesh, lp_norm
from fracalc.order import FracOrder

orders = st.floats(0.05, 2.5)
vals17 = arrays(np.float64, 17, elements=st.floats(-10, 10))


def test_fracorder_decomposition():
    o = FracOrder(2.3)
    assert o.m == 3 and o.sigma == pytest.approx(0.3)
    assert FracOrder(2.0).sigma == 1.0 and FracOrder(2.0).is_integer
    with pytest.raises(DomainError):
        FracOrder(0.0)
    with pytest.raises(IntegerOrderError):
        FracOrder(1.0).require_fractional()


@pytest.mark.parametrize("conv", [CELL, LINEAR])
@pytest.mark.parametrize("mesh", [Mesh.uniform(12), Mesh.graded(12, 2.0)])
def test_weights_causal_and_positive(mesh, conv):
    W = convolution_weights(mesh, 0.4, conv).matrix
    assert np.all(np.triu(W, 1) == 0)
    assert np.all(W >= 0)
    assert np.all(np.diag(W)[1:] > 0)


def test_weights_toeplitz_on_uniform_mesh():
    W = convolution_weights(Mesh.uniform(10), 0.6, CELL).matrix[1:, 1:]
    for d in range(10):
        diag = np.diag(W, -d)
        assert np.allclose(diag, diag[0], rtol=1e-13, atol=0)


def test_dense_weights_agree_with_operator(rng):
    for mesh in (Mesh.uniform(20), Mesh.graded(20, 3.0)):
        for conv in (CELL, LINEAR):
            v = GridFn(mesh, rng.uniform(-1, 1, 21), conv)
            W = convolution_weights(mesh, 0.35, conv).matrix
            assert np.allclose(W @ v.values, frac_integral_left(v, 0.35).values, atol=1e-14)


def test_left_integral_zero_and_constant():
    m = Mesh.graded(200, 2.0)
    assert np.all(frac_integral_left(GridFn.zeros(m), 0.3).values == 0)
    for conv in (CELL, LINEAR):
        out = frac_integral_left(GridFn.constant(m, 1.0, conv), 0.3)
        assert np.allclose(out.values, m.nodes**0.3 / math.gamma(1.3), rtol=1e-13, atol=1e-15)


def test_left_integral_order_one_on_cell_midpoints():
    errs = []
    for N in (64, 128, 256, 512):
        m = Mesh.uniform(N)
        v = GridFn.from_function(m, lambda t: np.sqrt(t), CELL)
        exact = math.gamma(1.5) / math.gamma(2.0) * m.nodes
        errs.append(np.max(np.abs(frac_integral_left(v, 0.5).values - exact)))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 0.9)


def test_left_integral_alpha_one_linear_is_exact():
    m = Mesh.graded(30, 1.5)
    out = frac_integral_left(GridFn(m, m.nodes), 1.0)
    assert np.allclose(out.values, m.nodes**2 / 2, rtol=1e-13, atol=1e-16)


def test_left_integral_integer_order_two():
    m = Mesh.uniform(40)
    out = frac_integral_left(GridFn(m, m.nodes), 2.0)
    assert np.allclose(out.values, m.nodes**3 / 6, atol=1e-15)


def test_right_integral_examples():
    m = Mesh.uniform(100, T=2.0)
    assert np.all(frac_integral_right(GridFn.zeros(m), 0.4).values == 0)
    for conv in (CELL, LINEAR):
        out = frac_integral_right(GridFn.constant(m, 1.0, conv), 0.4)
        assert np.allclose(out.values, (2.0 - m.nodes) ** 0.4 / math.gamma(1.4), atol=1e-14)
    g = Mesh.graded(100, 2.0)
    out = frac_integral_right(GridFn.constant(g, 1.0), 0.4)
    assert np.allclose(out.values, (1.0 - g.nodes) ** 0.4 / math.gamma(1.4), atol=1e-14)


def test_right_integral_linear_data_exact():
    # substituting s = t + y: int_0^(1-t) y^(a-1) (t + y) dy / Gamma(a)
    m = Mesh.graded(50, 2.0)
    t = m.nodes
    exact = (1 - t) ** 0.7 * t / math.gamma(1.7) + (1 - t) ** 1.7 / (1.7 * math.gamma(0.7))
    assert np.allclose(frac_integral_right(GridFn(m, t), 0.7).values, exact, atol=1e-14)


@given(vals17, st.floats(0.1, 2.0), st.sampled_from([CELL, LINEAR]))
def test_reflection_identity(v, a, conv):
    f = GridFn(Mesh.uniform(16), v, conv)
    lhs = frac_integral_right(f, a).values
    rhs = reflect(frac_integral_left(reflect(f), a)).values
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * max(1.0, np.abs(v).max()))


def test_reflect_examples():
    m = Mesh.uniform(10)
    t = GridFn(m, m.nodes)
    assert np.allclose(reflect(t).values, 1 - m.nodes)
    c = GridFn.constant(m, 3.0)
    assert reflect(c) == c
    f = GridFn(m, np.arange(11.0), CELL)
    assert reflect(reflect(f)) == f and reflect(reflect(t)) == t
    with pytest.raises(AsymmetricMeshError):
        reflect(GridFn.zeros(Mesh.graded(10, 2.0)))


def test_caputo_examples():
    m = Mesh.uniform(256)
    assert np.all(caputo(GridFn.constant(m, 5.0), 0.4).values == 0)
    out = caputo(GridFn(m, 2.0 * m.nodes), 0.4)
    assert np.allclose(out.values, 2.0 * m.nodes**0.6 / math.gamma(1.6), atol=1e-13)


def test_caputo_of_power_converges_to_constant():
    errs = []
    for N in (256, 1024, 4096):
        m = Mesh.graded(N, 2.0)
        out = caputo(GridFn(m, m.nodes**0.5), 0.5)
        away = m.nodes >= 0.25
        errs.append(np.max(np.abs(out.values[away] - math.gamma(1.5))))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-4


def test_caputo_requires_linear_and_fractional():
    m = Mesh.uniform(8)
    with pytest.raises(ConventionError):
        caputo(GridFn.zeros(m, CELL), 0.5)
    with pytest.raises(DomainError):
        caputo(GridFn.zeros(m), 1.0)


def test_riemann_liouville_of_constant():
    m = Mesh.uniform(512)
    out = riemann_liouville(GridFn.constant(m, 2.0), 0.4)
    # cell averages of 2 t^(-0.4) / Gamma(0.6), from its antiderivative
    F = 2.0 * m.nodes**0.6 / (0.6 * math.gamma(0.6))
    assert np.allclose(out.values[1:], np.diff(F) / m.widths, rtol=1e-11)
    mid = 0.5 * (m.nodes[1:] + m.nodes[:-1])
    away = mid >= 0.1
    pointwise = 2.0 * mid[away] ** -0.4 / math.gamma(0.6)
    assert np.max(np.abs(out.values[1:][away] - pointwise)) < 1e-4


def test_riemann_liouville_zero_and_integer():
    m = Mesh.uniform(16)
    assert np.all(riemann_liouville(GridFn.zeros(m), 0.7).values == 0)
    with pytest.raises(IntegerOrderError):
        riemann_liouville(GridFn.zeros(m), 2.0)


def test_riemann_liouville_inverts_integral():
    errs = []
    for N in (256, 1024, 4096):
        m = Mesh.uniform(N)
        w = GridFn(m, np.sin(np.pi * m.nodes))
        back = riemann_liouville(frac_integral_left(w, 0.5), 0.5)
        errs.append(np.max(np.abs(back.values - w.values)[1:]))
    assert errs[0] > errs[1] > errs[2]


def test_riemann_liouville_order_above_one():
    errs = []
    for N in (128, 256, 512):
        m = Mesh.uniform(N)
        w = GridFn(m, np.sin(np.pi * m.nodes))
        back = riemann_liouville(frac_integral_left(w, 1.5), 1.5)
        inner = (m.nodes > 0.1) & (m.nodes < 0.9)
        errs.append(np.max(np.abs(back.values - w.values)[inner]))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-2


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7, 2.0])
@pytest.mark.parametrize("mesh", [Mesh.uniform(300), Mesh.graded(300, 2.5)])
def test_inversion_roundtrip(alpha, mesh, rng):
    w = GridFn(mesh, rng.uniform(-1, 1, mesh.N + 1), CELL)
    back = invert_frac_integral(frac_integral_left(w, alpha), alpha)
    # at alpha = 2 rounding grows polynomially in N
    assert np.max(np.abs(back.values - w.values)) <= (1e-10 if alpha < 2 else 1e-9)


def test_inversion_refuses_ill_conditioned_orders():
    with pytest.raises(DomainError):
        invert_frac_integral(GridFn.zeros(Mesh.uniform(8)), 2.5)


def test_inversion_of_power_recovers_one():
    # cell weights integrate a constant exactly, so the inverse is exact too
    for mesh in (Mesh.uniform(256), Mesh.graded(256, 2.5)):
        w = invert_frac_integral(GridFn(mesh, mesh.nodes**0.4 / math.gamma(1.4)), 0.4)
        assert np.max(np.abs(w.values[1:] - 1.0)) < 1e-12


def test_inversion_of_smooth_power_converges():
    errs = []
    for N in (64, 256, 1024):
        m = Mesh.uniform(N)
        w = invert_frac_integral(GridFn(m, m.nodes**1.4 / math.gamma(2.4)), 0.4)
        mid = 0.5 * (m.nodes[1:] + m.nodes[:-1])
        errs.append(np.max(np.abs(w.values[1:] - mid)))
    assert errs[0] > errs[1] > errs[2]


def test_inversion_of_constant_approximates_singular_profile():
    errs = []
    for N in (256, 1024, 4096):
        m = Mesh.uniform(N)
        w = invert_frac_integral(GridFn.constant(m, 1.0), 0.5)
        # exact cell averages of t^(-1/2) / Gamma(1/2)
        avg = np.diff(m.nodes**0.5) / (0.5 * math.gamma(0.5)) / m.widths
        far = m.nodes[1:] > 0.1
        errs.append(np.max(np.abs(w.values[1:] - avg)[far]))
    # first order in h away from the singularity
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5 and errs[2] < 2e-3


@pytest.mark.parametrize("p,divergent", [(1.5, False), (1.9, False), (2.2, True), (3.0, True)])
def test_membership_of_constants(p, divergent):
    rep = membership_diagnostic(lambda m: GridFn.constant(m, 1.0), 0.5, p, Mesh.uniform(128))
    assert rep.divergent is divergent
    assert rep.mesh_sizes == (128, 256, 512, 1024)


def test_membership_of_smooth_function():
    rep = membership_diagnostic(lambda m: GridFn(m, m.nodes), 0.5, 3.0, Mesh.uniform(128))
    assert not rep.divergent


@given(vals17, vals17, st.floats(-3, 3), st.floats(0.1, 2.0))
def test_left_integral_linear_in_data(v, w, c, a):
    m = Mesh.graded(16, 1.5)
    f, g = GridFn(m, v), GridFn(m, w)
    lhs = frac_integral_left(f * c + g, a).values
    rhs = c * frac_integral_left(f, a).values + frac_integral_left(g, a).values
    assert np.allclose(lhs, rhs, atol=1e-11 * (1 + abs(c)) * 10)


@given(arrays(np.float64, 17, elements=st.floats(0, 10)), orders, st.sampled_from([CELL, LINEAR]))
def test_positivity(v, a, conv):
    out = frac_integral_left(GridFn(Mesh.graded(16, 2.0), v, conv), a)
    assert np.all(out.values >= 0)


@given(vals17, st.floats(0.05, 2.0), st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_isometry_and_injectivity(v, a, p):
    m = Mesh.graded(16, 1.8)
    w = GridFn(m, v, CELL)
    back = invert_frac_integral(frac_integral_left(w, a), a)
    assert np.allclose(back.values, w.values, atol=1e-9 * max(1.0, np.abs(v).max()))
    assert lp_norm(back, p) == pytest.approx(lp_norm(w, p), rel=1e-9, abs=1e-12)


def test_semigroup_converges(rng):
    from fracalc.verify import step_function

    for a, b in [(0.3, 0.4), (0.4, 0.7), (0.7, 0.3)]:
        errs = []
        for N in (256, 1024):
            m = Mesh.uniform(N)
            v = step_function(m, 7)
            lhs = frac_integral_left(frac_integral_left(v, b), a)
            errs.append(np.max(np.abs(lhs.values - frac_integral_left(v, a + b).values)))
        assert errs[1] < errs[0]


def test_commutation_with_derivative():
    errs = []
    for N in (128, 512, 2048):
        m = Mesh.uniform(N)
        v = GridFn(m, m.nodes * np.cos(2 * m.nodes))  # v(0) = 0
        lhs = derivative(frac_integral_left(v, 0.6)).values[1:]
        rhs = frac_integral_left(derivative(v), 0.6).as_cell().values[1:]
        errs.append(np.max(np.abs(lhs - rhs)))
    assert errs[0] > errs[1] > errs[2]


def test_reconstruction_identity():
    alpha, eps = 0.5, 0.2
    errs = []
    for N in (256, 1024, 4096):
        m = Mesh.uniform(N)
        u = GridFn(m, m.nodes ** (alpha + eps + 0.1))
        back = frac_integral_left(derivative(frac_integral_left(u, 1 - alpha)), alpha)
        errs.append(np.max(np.abs(back.values - u.values)))
    assert errs[0] > errs[1] > errs[2]
