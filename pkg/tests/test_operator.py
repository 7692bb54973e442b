import numpy as np
import pytest

from vortexstab.errors import AssemblyError
from vortexstab.grid import SectorField, divergence_residual, make_grid, smooth_divfree_field
from vortexstab.operator import (assemble_Am, assemble_Bmk, assemble_Lmk, divergence_preservation,
                                 load_dump, pressure_route_agreement, pressure_route_divergence,
                                 resolved_band)


def _flip(f):
    """u_theta -> -u_theta, mapping sector (m, k) to (-m, k)."""
    return SectorField(-f.m, f.k, f.u_r.copy(), -f.u_theta, f.u_z.copy())


def test_axisymmetric_advection_kills_fields_without_radial_part(lo, g64, rng):
    n = g64.n
    A0 = assemble_Am(lo, 0, g64)
    u = np.concatenate([np.zeros(n), rng.normal(size=2 * n)])
    assert np.all(A0 @ u == 0)


def test_advection_squared_on_axial_component(lo, g64, rng):
    n, m = g64.n, 3
    A = assemble_Am(lo, m, g64)
    uz = rng.normal(size=n) + 1j * rng.normal(size=n)
    u = np.concatenate([np.zeros(2 * n), uz])
    om = lo.omega(g64.r_nodes)
    np.testing.assert_allclose((A @ (A @ u))[2 * n:], (-1j * m * om) ** 2 * uz, rtol=1e-14)


def test_restricted_advection_spectrum(lo, g96):
    op = assemble_Lmk(lo, 2, 1.0, g96)
    ev = np.linalg.eigvals(op.A)
    assert np.max(np.abs(ev.real)) < 1e-10
    assert np.all(ev.imag > -2 - 1e-10) and np.all(ev.imag < 1e-10)


def test_nonlocal_part_vanishes_in_trivial_sector(lo, g64):
    op = assemble_Lmk(lo, 0, 0.0, g64)
    assert np.max(np.abs(op.B)) < 1e-13
    assert np.max(np.abs(assemble_Bmk(lo, 0, 0.0, g64))) < 1e-13
    assert np.all(op.L @ np.zeros(op.dimension) == 0)


@pytest.mark.parametrize("m,k", [(1, 1.0), (2, 0.0), (0, 2.0), (-3, 0.5)])
def test_divergence_is_preserved(lo, g96, m, k):
    op = assemble_Lmk(lo, m, k, g96)
    assert divergence_preservation(op, rng=1) < 1e-9
    # the pressure-route B produces divergence-free fields as well (resolved fields)
    assert pressure_route_divergence(lo, m, k, g96, rng=1) < 1e-9


@pytest.mark.parametrize("m,k", [(1, 1.0), (2, 0.0), (-1, 0.0), (3, 2.0)])
def test_matrix_free_apply_agrees(lo, g96, rng, m, k):
    op = assemble_Lmk(lo, m, k, g96)
    c = rng.normal(size=op.dimension) + 1j * rng.normal(size=op.dimension)
    assert np.linalg.norm(op.apply(c) - op.L @ c) <= 1e-12 * np.linalg.norm(op.L @ c)


def test_operator_norm_is_grid_stable(lo):
    norms = [np.linalg.norm(assemble_Lmk(lo, 1, 1.0, make_grid(n, 30.0)).L, 2) for n in (64, 128)]
    assert np.isfinite(norms).all()
    assert norms[1] == pytest.approx(norms[0], rel=0.05)


@pytest.mark.parametrize("m,k", [(1, 1.0), (2, 0.0), (3, 0.5)])
def test_sign_flip_conjugation(lo, g64, rng, m, k):
    op, opm = assemble_Lmk(lo, m, k, g64), assemble_Lmk(lo, -m, k, g64)
    u = op.to_field(op.coords(smooth_divfree_field(g64, m, k, rng)))
    lhs = opm.to_field(opm.L @ opm.coords(_flip(u)))
    rhs = _flip(op.to_field(op.L @ op.coords(u)))
    assert (lhs + rhs).norm(g64) <= 1e-10 * rhs.norm(g64)
    # spectra are negatives of each other
    a = np.sort_complex(op.eigvals())
    b = np.sort_complex(-opm.eigvals())
    assert np.max(np.abs(a - b)) < 1e-8


@pytest.mark.parametrize("m,k", [(1, 1.0), (0, 1.0), (2, 2.0), (2, 0.0), (-3, 0.5)])
def test_pressure_route_matches_leray(lo, g96, m, k):
    op = assemble_Lmk(lo, m, k, g96)
    assert pressure_route_agreement(op, lo, rng=2) < 1e-6


def test_pressure_route_is_not_an_assembly_option(lo, g64):
    with pytest.raises(ValueError):
        assemble_Lmk(lo, 1, 1.0, g64, b_method="pressure")
    # the raw column assembly still exists for inspection
    assert assemble_Bmk(lo, 1, 1.0, g64, method="pressure").shape == assemble_Lmk(lo, 1, 1.0, g64).B.shape


def test_singular_values_of_B_decay(lo):
    svc = assemble_Lmk(lo, 1, 1.0, make_grid(64, 30.0)).singular_values_B()
    svf = assemble_Lmk(lo, 1, 1.0, make_grid(96, 30.0)).singular_values_B()
    nb = resolved_band(svc, svf)
    assert nb >= 5
    assert svf[nb] < 0.1 * svf[0]
    assert np.all(np.diff(svf) <= 1e-12)


def test_resolved_band_counts_leading_agreement():
    assert resolved_band([3, 2, 1, 0.5], [3, 2.05, 1.5, 0.5]) == 2
    assert resolved_band([1, 1], [1, 1]) == 2


def test_real_generator(lo, g64):
    op = assemble_Lmk(lo, 2, 1.0, g64)
    assert np.isrealobj(op.M_real)
    np.testing.assert_allclose(op.L, 1j * op.M_real, atol=1e-15)
    ev = op.eigvals()
    # spectrum closed under lambda -> -conj(lambda)
    assert np.max(np.min(np.abs(ev[:, None] + np.conj(ev)[None, :]), axis=1)) < 1e-10


def test_dump_and_load(lo, g64, tmp_path):
    op = assemble_Lmk(lo, 1, 1.0, g64)
    shape = op.dump(tmp_path / "L.bin")
    np.testing.assert_array_equal(load_dump(tmp_path / "L.bin", shape[0]), op.L)
    op.dump(tmp_path / "B.csv", which="B", fmt="csv")
    pairs = np.loadtxt(tmp_path / "B.csv", delimiter=",")
    np.testing.assert_array_equal(pairs[:, 0::2] + 1j * pairs[:, 1::2], op.B)


def test_mismatched_field_is_rejected(lo, g64):
    op = assemble_Lmk(lo, 1, 1.0, g64)
    with pytest.raises(AssemblyError):
        op.coords(SectorField.zeros(64, 2, 1.0))
    with pytest.raises(AssemblyError):
        op.coords(SectorField.zeros(96, 1, 1.0))


def test_eigenvectors_give_divergence_free_fields(ks, g64):
    op = assemble_Lmk(ks, 2, 0.5, g64)
    lam, V = op.eig()
    for j in range(0, op.dimension, max(1, op.dimension // 6)):
        assert divergence_residual(op.to_field(V[:, j]), g64) < 1e-9
