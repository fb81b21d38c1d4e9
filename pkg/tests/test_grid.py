from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracalc.errors import ConventionError, DomainError, MeshMismatchError, SchemaError
from fracalc.grid import CELL, LINEAR, GridFn, Mesh, default_grading, lp_exponent, lp_norm, refine

values = arrays(np.float64, 33, elements=st.floats(-1e3, 1e3))


def test_mesh_invariants():
    m = Mesh.graded(50, 2.5, T=3.0)
    assert m.nodes[0] == 0.0 and m.nodes[-1] == 3.0
    assert np.all(np.diff(m.nodes) > 0)
    j = np.arange(51)
    assert np.allclose(m.nodes, 3.0 * (j / 50) ** 2.5, rtol=1e-15, atol=0)


def test_mesh_validation():
    for bad in (dict(N=0), dict(N=4, T=-1.0), dict(N=4, kind="random"), dict(N=4, kind="graded", r=0.5)):
        with pytest.raises(DomainError):
            Mesh(**bad)


def test_default_grading():
    assert default_grading(0.25) == 4.0
    assert default_grading(2.0) == 1.0


def test_refine_examples():
    m = refine(Mesh.uniform(4, T=2.0), 2)
    assert m.N == 8 and np.allclose(m.nodes, 2.0 * np.arange(9) / 8)
    g = refine(Mesh.graded(4, 2.0), 2)
    assert g.kind == "graded" and g.r == 2.0
    assert np.allclose(g.nodes, (np.arange(9) / 8) ** 2)
    assert np.array_equal(refine(refine(g, 2), 2).nodes, refine(g, 4).nodes)
    with pytest.raises(DomainError):
        refine(g, 1)


def test_lp_norm_examples():
    m = Mesh.uniform(64)
    for p in (1, 1.5, 2, 7, math.inf):
        assert lp_norm(GridFn.constant(m, 1.0), p) == pytest.approx(1.0, rel=1e-14)
        assert lp_norm(GridFn.zeros(m), p) == 0.0


def test_lp_norm_linear_t_converges_second_order():
    exact = 1 / math.sqrt(3)
    errs = []
    for N in (16, 32, 64, 128):
        m = Mesh.uniform(N)
        errs.append(abs(lp_norm(GridFn(m, m.nodes), 2) - exact))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.9)


def test_lp_norm_cell_is_exact_for_cell_data():
    m = Mesh.graded(10, 2.0)
    v = GridFn(m, np.arange(11.0), CELL)
    assert lp_norm(v, 1) == pytest.approx(np.dot(m.widths, np.arange(1, 11.0)))


def test_lp_norm_monotone_under_refinement():
    exact = (1 / 4) ** (1 / 3)  # ||t||_3 on [0, 1]
    errs = [abs(lp_norm(GridFn(Mesh.uniform(N), Mesh.uniform(N).nodes), 3) - exact) for N in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


@given(values, st.floats(-50, 50), st.sampled_from([1.0, 2.0, 3.5, math.inf]))
def test_lp_norm_homogeneous(v, c, p):
    f = GridFn(Mesh.uniform(32), v)
    assert lp_norm(f * c, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12, abs=1e-300)


@given(values, values, st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]), st.sampled_from([LINEAR, CELL]))
def test_lp_norm_triangle(v, w, p, conv):
    m = Mesh.graded(32, 1.7)
    f, g = GridFn(m, v, conv), GridFn(m, w, conv)
    assert lp_norm(f + g, p) <= lp_norm(f, p) + lp_norm(g, p) + 1e-12 * (1 + lp_norm(f, p) + lp_norm(g, p))


def test_lp_exponent():
    assert lp_exponent("inf") == math.inf
    with pytest.raises(DomainError):
        lp_exponent(0.5)


def test_gridfn_invariants():
    m = Mesh.uniform(4)
    with pytest.raises(DomainError):
        GridFn(m, np.ones(4))
    with pytest.raises(DomainError):
        GridFn(m, [0, 1, np.nan, 2, 3])
    f = GridFn(m, np.arange(5.0))
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_gridfn_combination_rules():
    a = GridFn(Mesh.uniform(4), np.ones(5))
    with pytest.raises(MeshMismatchError):
        a + GridFn(Mesh.uniform(5), np.ones(6))
    with pytest.raises(ConventionError):
        a + GridFn(Mesh.uniform(4), np.ones(5), CELL)
    assert np.array_equal((2 * a - 1).values, np.ones(5))


def test_cell_convention_mirrors_first_value():
    f = GridFn(Mesh.uniform(3), [9.0, 1.0, 2.0, 3.0], CELL)
    assert f.values[0] == 1.0


def test_serialization_roundtrip():
    m = Mesh.graded(12, 2.5, T=2.0)
    f = GridFn(m, np.sin(m.nodes))
    assert GridFn.from_dict(f.to_dict()) == f
    back = GridFn.from_csv(f.to_csv())
    assert back.mesh == m and np.array_equal(back.values, f.values)
    assert f.to_csv().splitlines()[0] == "t,value"
    u = GridFn(Mesh.uniform(5), np.arange(6.0))
    assert GridFn.from_csv(u.to_csv()).mesh == u.mesh


def test_serialization_rejects_bad_input():
    with pytest.raises(SchemaError):
        GridFn.from_csv("x,y\n0,1\n")
    with pytest.raises(SchemaError):
        GridFn.from_csv("t,value\n0,1\n0.3,1\n0.4,2\n1.0,3\n")
    with pytest.raises(SchemaError):
        Mesh.from_dict({"N": "ten"})


def test_from_antiderivative_is_exact_cell_average():
    m = Mesh.uniform(4)
    f = GridFn.from_antiderivative(m, lambda t: t**2)
    assert np.allclose(f.values[1:], (m.nodes[1:] + m.nodes[:-1]))
