import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexstab.errors import DomainError
from vortexstab.grid import (SectorField, divergence, divergence_residual, divfree_basis, make_grid,
                             project_divfree, smooth_divfree_field, weighted_inner)


def test_quadrature_of_measure():
    g = make_grid(64, 20.0)
    assert g.integrate(np.ones(64)) == pytest.approx(200.0, rel=1e-13)
    # int_0^inf e^{-r^2} r dr = 1/2 (tail beyond 20 negligible)
    assert g.integrate(np.exp(-g.r_nodes ** 2)) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("n", [96, 128, 192])
def test_derivative_examples(n):
    g = make_grid(n, 30.0)
    r = g.r_nodes
    assert np.max(np.abs(g.D @ r ** 2 - 2 * r)) < 1e-8
    assert np.max(np.abs(g.Dstar @ r - 2)) < 1e-8
    f = np.exp(-r * r)
    assert np.max(np.abs(g.D @ f + 2 * r * f)) < 1e-8


def test_divergence_against_symbolic(g128):
    # m = 1, k = 0: u_theta = i r e^{-r^2}  ->  div = (i/r) i r e^{-r^2} = -e^{-r^2}
    # plus u_r = r^2 e^{-r^2}: (1/r)(r^3 e^{-r^2})' = (3 r - 2 r^3) e^{-r^2}
    r = g128.r_nodes
    e = np.exp(-r * r)
    f = SectorField(1, 0.0, r * r * e + 0j, 1j * r * e, np.zeros_like(r, complex))
    exact = (3 * r - 2 * r ** 3) * e - e
    assert np.max(np.abs(divergence(f, g128) - exact)) < 1e-10


def test_quadrature_converges_spectrally():
    errs = []
    for n in (16, 32, 64):
        g = make_grid(n, 30.0)
        errs.append(abs(g.integrate(np.exp(-g.r_nodes ** 2)) - 0.5))
    assert errs[1] < errs[0] / 10 and (errs[2] < errs[1] / 10 or errs[2] < 1e-14)


def test_nodes_and_weights_are_positive(g96):
    assert np.all(np.diff(g96.r_nodes) > 0)
    assert 0 < g96.r_nodes[0] and g96.r_nodes[-1] < g96.r_max
    assert np.all(g96.weights > 0)


def test_interpolation_reproduces_smooth_function(g96):
    x = np.linspace(0.0, 30.0, 301)
    f = lambda r: np.exp(-r * r) * np.cos(r)
    np.testing.assert_allclose(g96.interp_matrix(x) @ f(g96.r_nodes), f(x), atol=1e-10)
    assert g96.end_row() @ (g96.r_nodes / 30.0) == pytest.approx(1.0, rel=1e-12)


def test_summation_by_parts(g64, rng):
    # int (Dstar u) v r dr = -int u (D v) r dr for fields vanishing at R
    r = g64.r_nodes
    u = r * np.exp(-r * r) * (1 + rng.normal())
    v = np.exp(-0.5 * r * r)
    lhs = g64.integrate((g64.Dstar @ u) * v)
    rhs = -g64.integrate(u * (g64.D @ v))
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("n,r_max", [(8, 30.0), (15, 30.0), (64, 0.0), (64, -1.0)])
def test_invalid_grids(n, r_max):
    with pytest.raises(DomainError):
        make_grid(n, r_max)


def test_divergence_examples(g128):
    r = g128.r_nodes
    f = np.exp(-r * r)
    z = np.zeros_like(r)
    assert np.max(np.abs(divergence(SectorField(0, 0.0, z, f, z), g128))) == 0.0
    k = 2.0
    ur = -(1j * k / (2 * r)) * (-np.expm1(-r * r))
    d = divergence(SectorField(0, k, ur, z, f + 0j), g128)
    assert np.max(np.abs(d)) < 1e-7


@pytest.mark.parametrize("m,k", [(0, 0.0), (0, 1.0), (1, 0.0), (2, 1.5), (-3, 0.5)])
def test_smooth_fields_are_divergence_free(g128, rng, m, k):
    f = smooth_divfree_field(g128, m, k, rng)
    assert divergence_residual(f, g128) < 1e-8


@pytest.mark.parametrize("m,k", [(0, 1.0), (1, 0.0), (2, 1.5), (-1, 2.0)])
def test_projection_properties(g64, rng, m, k):
    n = g64.n
    f = SectorField(m, k, *(rng.normal(size=(3, n)) + 1j * rng.normal(size=(3, n))))
    p = project_divfree(f, g64)
    # divergence-free and idempotent
    assert divergence_residual(p, g64) < 1e-10
    pp = project_divfree(p, g64)
    assert (pp - p).norm(g64) < 1e-10 * p.norm(g64)
    # orthogonal: Pythagoras in the plain inner product
    q = f - p
    assert abs(weighted_inner(g64, q, p)) < 1e-10 * f.norm(g64) ** 2
    assert f.norm(g64) ** 2 == pytest.approx(p.norm(g64) ** 2 + q.norm(g64) ** 2, rel=1e-12)
    # zero maps to zero
    assert project_divfree(SectorField.zeros(n, m, k), g64).norm(g64) == 0.0


def test_projection_keeps_divergence_free_fields(g64):
    B = divfree_basis(g64, 2, 1.0, extended=False)
    c = np.arange(1, B.dim + 1) / B.dim
    f = B.field(c)
    assert (project_divfree(f, g64) - f).norm(g64) < 1e-11 * f.norm(g64)


@pytest.mark.parametrize("m,k", [(1, 0.0), (0, 0.0), (3, 2.0)])
def test_basis_is_orthonormal(g64, m, k):
    B = divfree_basis(g64, m, k)
    G = B.Q.conj().T @ B.gram @ B.Q
    np.testing.assert_allclose(G, np.eye(B.dim), atol=1e-10)
    # Q = T Q_real with a real Q_real
    assert np.isrealobj(B.Q_real)


def test_exterior_weight_only_in_planar_sectors(g64):
    assert divfree_basis(g64, 2, 0.0).exterior == pytest.approx(30.0 ** 2 / 2)
    assert divfree_basis(g64, 2, 1.0).exterior == 0.0
    assert divfree_basis(g64, 0, 0.0).exterior == 0.0


def test_sector_field_arithmetic(g64, rng):
    n = g64.n
    a = SectorField(1, 1.0, *rng.normal(size=(3, n)))
    b = SectorField(1, 1.0, *rng.normal(size=(3, n)))
    s = a + b
    np.testing.assert_allclose(s.stack(), a.stack() + b.stack())
    np.testing.assert_allclose((2.0 * a).stack(), 2 * a.stack())
    back = SectorField.from_stack(a.stack(), 1, 1.0)
    np.testing.assert_array_equal(back.u_theta, a.u_theta)
    c = a.copy()
    c.u_r[0] = 99.0
    assert a.u_r[0] != 99.0
    with pytest.raises(DomainError):
        a + SectorField(2, 1.0, *rng.normal(size=(3, n)))


def test_size_mismatch(g64):
    with pytest.raises(DomainError):
        divergence(SectorField.zeros(32, 0, 1.0), g64)


@settings(max_examples=25, deadline=None)
@given(m=st.integers(-4, 4), k=st.floats(0.0, 4.0), seed=st.integers(0, 2 ** 31))
def test_projection_contracts(m, k, seed):
    g = make_grid(48, 30.0)
    rng = np.random.default_rng(seed)
    f = SectorField(m, k, *(rng.normal(size=(3, 48)) + 1j * rng.normal(size=(3, 48))))
    p = project_divfree(f, g)
    assert p.norm(g) <= f.norm(g) * (1 + 1e-12)
    assert divergence_residual(p, g) < 1e-9
