import numpy as np
import pytest
from scipy.integrate import quad

from vortexstab.errors import DomainError
from vortexstab.grid import SectorField, make_grid, smooth_divfree_field
from vortexstab.pressure import (energy_bound, energy_ratio, far_field_check, pressure_bvp,
                                 pressure_green, pressure_operator, residual)

METHODS = [pressure_green, pressure_bvp]


def _bump(g, m, k):
    """Gaussian-bump divergence-free field (deterministic)."""
    return smooth_divfree_field(g, m, k, rng=7)


@pytest.mark.parametrize("solve", METHODS)
def test_zero_velocity_gives_zero_pressure(lo, g64, solve):
    sol = solve(lo, SectorField.zeros(64, 1, 1.0), g64)
    assert np.all(sol.p == 0) and np.all(sol.dp == 0)
    assert energy_ratio(sol, SectorField.zeros(64, 1, 1.0), g64) == 0.0


@pytest.mark.parametrize("solve", METHODS)
def test_axisymmetric_planar_pressure(lo, g128, solve):
    r = g128.r_nodes
    z = np.zeros_like(r, complex)
    f = SectorField(0, 0.0, z, r * np.exp(-r * r) + 0j, z)
    sol = solve(lo, f, g128)

    def exact(rv):
        v, _ = quad(lambda s: lo.omega(s) * s * np.exp(-s * s), rv, np.inf, epsabs=1e-14, epsrel=1e-13)
        return -2 * v

    ref = np.array([exact(rv) for rv in r])
    assert np.max(np.abs(sol.p - ref)) < 1e-7


@pytest.mark.parametrize("solve", METHODS)
def test_residual_small_for_smooth_field(lo, g128, rng, solve):
    f = smooth_divfree_field(g128, 1, 1.0, rng)
    sol = solve(lo, f, g128)
    assert sol.residual_norm < 1e-6
    assert residual(lo, f, g128, sol.p) == pytest.approx(sol.residual_norm, rel=1e-6, abs=1e-12)
    assert sol.sector == (1, 1.0)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
@pytest.mark.parametrize("k", [0.0, 0.5, 1.0, 2.0])
def test_methods_agree(lo, g96, m, k):
    f = _bump(g96, m, k)
    a = pressure_green(lo, f, g96).p
    b = pressure_bvp(lo, f, g96).p
    assert g96.norm(a - b) <= 1e-6 * g96.norm(b)


def test_bvp_algebraic_decay_planar(lo, g128):
    f = _bump(g128, 2, 0.0)
    sol = pressure_bvp(lo, f, g128)
    r = g128.r_nodes
    outer = r > 3.0
    pr2 = np.abs(sol.p[outer]) * r[outer] ** 2
    # p r^2 is constant once the forcing is gone
    assert np.max(pr2) / np.min(pr2[r[outer] < 29.0]) < 1.05


def test_bvp_exponential_decay_axial(lo, g128):
    f = _bump(g128, 0, 2.0)
    sol = pressure_bvp(lo, f, g128)
    r = g128.r_nodes
    sel = (r > 6.0) & (r < 12.0)
    rate = -np.polyfit(r[sel], np.log(np.abs(sol.p[sel])), 1)[0]
    assert rate == pytest.approx(2.0, rel=0.1)
    assert abs(sol.p[-1]) < 1e-6 * np.max(np.abs(sol.p))


@pytest.mark.parametrize("m", [2, 3])
def test_neumann_property_a_posteriori(lo, g128, m):
    sol = pressure_bvp(lo, _bump(g128, m, 1.0), g128)
    assert sol.diagnostics["axis"] == "dirichlet"
    assert abs(sol.diagnostics["axis_slope"]) < 1e-3 * np.max(np.abs(sol.dp))


@pytest.mark.parametrize("solve", METHODS)
def test_linearity(lo, g64, rng, solve):
    u = smooth_divfree_field(g64, 1, 0.5, rng)
    v = smooth_divfree_field(g64, 1, 0.5, rng)
    a, b = 0.3 - 1.2j, 2.0 + 0.5j
    lhs = solve(lo, a * u + b * v, g64).p
    rhs = a * solve(lo, u, g64).p + b * solve(lo, v, g64).p
    assert g64.norm(lhs - rhs) <= 1e-10 * g64.norm(rhs)


def test_operator_matches_single_solves(lo, g64, rng):
    f = smooth_divfree_field(g64, 2, 1.0, rng)
    for method, solve in (("bvp", pressure_bvp), ("green", pressure_green)):
        P, dP = pressure_operator(lo, g64, 2, 1.0, method)
        uv = np.concatenate([f.u_r, f.u_theta])
        sol = solve(lo, f, g64)
        np.testing.assert_allclose(P @ uv, sol.p, atol=1e-12 * np.max(np.abs(sol.p)))


def test_continuity_in_k(lo, g96):
    m, k1 = 1, 1.0
    r = g96.r_nodes
    e = np.exp(-r * r)
    # fixed (u_r, u_theta); the pressure map itself does not need div u = 0
    ur, ut = r * e + 0j, 1j * r * e * (1 + r)
    p1 = pressure_bvp(lo, SectorField(m, k1, ur, ut, 0 * ur), g96).p
    diffs = []
    for j in range(1, 8):
        k2 = k1 * (1 + 2.0 ** -j)
        p2 = pressure_bvp(lo, SectorField(m, k2, ur, ut, 0 * ur), g96).p
        diffs.append(g96.norm(p2 - p1))
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    # roughly linear in k2 - k1: six halvings shrink the gap by ~2^6
    assert diffs[-1] < 0.05 * diffs[0]


@pytest.mark.parametrize("m,k", [(0, 1.0), (1, 1.0), (2, 0.0), (3, 2.0)])
def test_energy_ratio_bounded_and_grid_stable(lo, m, k):
    vals = []
    for n in (64, 128):
        g = make_grid(n, 30.0)
        f = _bump(g, m, k)
        vals.append(energy_ratio(pressure_bvp(lo, f, g), f, g))
    assert np.isfinite(vals).all()
    assert vals[1] == pytest.approx(vals[0], rel=0.05)
    assert vals[1] <= energy_bound(lo)


@pytest.mark.parametrize("m,k", [(2, 0.0), (1, 1.0), (3, 0.5)])
def test_far_field_inequality(ks, g128, rng, m, k):
    f = smooth_divfree_field(g128, m, k, rng)
    lhs, rhs = far_field_check(ks, pressure_bvp(ks, f, g128), f, g128)
    assert lhs <= rhs


def test_far_field_needs_weighted_sector(lo, g64):
    f = _bump(g64, 1, 0.0)
    with pytest.raises(DomainError):
        far_field_check(lo, pressure_bvp(lo, f, g64), f, g64)


def test_undersampled_kernel_is_flagged(lo, g64):
    f = _bump(g64, 1, 4.0)
    with pytest.warns(RuntimeWarning, match="undersampled"):
        sol = pressure_green(lo, f, g64)
    assert sol.diagnostics["undersampled"]
    assert not pressure_green(lo, _bump(g64, 1, 1.0), g64).diagnostics["undersampled"]


def test_large_argument_bessel_products_do_not_overflow(lo):
    g = make_grid(128, 30.0)
    f = _bump(g, 1, 40.0)  # |k| r_max = 1200: unscaled I would overflow
    with pytest.warns(RuntimeWarning):
        sol = pressure_green(lo, f, g)
    assert np.all(np.isfinite(sol.p)) and np.all(np.isfinite(sol.dp))
