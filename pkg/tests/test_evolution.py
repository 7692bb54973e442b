import numpy as np
import pytest

from vortexstab.errors import DomainError
from vortexstab.evolution import (MIN_FIT_POINTS, advection_bound, evolve_advection, evolve_full,
                                  fit_growth, reversibility_error)
from vortexstab.grid import SectorField, make_grid, smooth_divfree_field
from vortexstab.operator import assemble_Lmk


def _field(g, m, k, rng):
    n = g.n
    return SectorField(m, k, *(rng.normal(size=(3, n)) + 1j * rng.normal(size=(3, n))))


def test_advection_identity_at_zero(lo, g64, rng):
    f = _field(g64, 2, 1.0, rng)
    np.testing.assert_array_equal(evolve_advection(f, lo, 0.0, g64).stack(), f.stack())


def test_advection_group_law(lo, g64, rng):
    f = _field(g64, 3, 0.5, rng)
    a = evolve_advection(evolve_advection(f, lo, 1.7, g64), lo, -4.2, g64)
    b = evolve_advection(f, lo, 1.7 - 4.2, g64)
    assert (a - b).norm(g64) <= 1e-12 * f.norm(g64)


@pytest.mark.parametrize("name", ["lo", "ks"])
def test_advection_growth_bound(request, g64, rng, name):
    prof = request.getfixturevalue(name)
    c = advection_bound(prof, g64)
    for _ in range(3):
        f = _field(g64, int(rng.integers(-4, 5)), 1.0, rng)
        for t in np.linspace(-50, 50, 41):
            assert evolve_advection(f, prof, t, g64).norm(g64) <= (1 + c * abs(t)) * f.norm(g64) * (1 + 1e-12)


def test_advection_axial_component_is_unitary(lo, g64, rng):
    f = _field(g64, 2, 1.0, rng)
    u = evolve_advection(f, lo, 13.0, g64)
    np.testing.assert_allclose(np.abs(u.u_z), np.abs(f.u_z), rtol=1e-14)
    np.testing.assert_allclose(np.abs(u.u_r), np.abs(f.u_r), rtol=1e-14)


def test_advection_trace_grows_linearly(lo, g64, rng):
    f = _field(g64, 1, 1.0, rng)
    t = np.linspace(0, 200, 256)
    norms = [evolve_advection(f, lo, tj, g64).norm(g64) for tj in t]
    rate, deg, _ = fit_growth(t, norms)
    assert abs(rate) < 0.01
    assert deg == pytest.approx(1.0, abs=0.1)


@pytest.fixture(scope="module")
def lo_trace():
    from vortexstab.profile import lamb_oseen

    g = make_grid(96, 30.0)
    op = assemble_Lmk(lamb_oseen(), 1, 1.0, g)
    u0 = op.to_field(op.coords(smooth_divfree_field(g, 1, 1.0, 11)))
    return op, u0, evolve_full(op, u0, np.linspace(0, 50, 256))


def test_trace_starts_at_initial_norm(lo_trace):
    op, u0, tr = lo_trace
    assert tr.norms[0] == pytest.approx(u0.norm(op.grid), rel=1e-13)
    assert tr.sector == (1, 1.0) and tr.times.size == 256


def test_trace_is_subexponential(lo_trace):
    op, u0, tr = lo_trace
    assert tr.fitted_exp_rate < 0.02
    assert not tr.flags
    assert np.all(tr.norms > 0)


def test_exponential_and_stepping_agree(lo_trace):
    assert lo_trace[2].diagnostics["rk_difference"] < 1e-6


def test_divergence_preserved_along_trace(lo_trace):
    assert lo_trace[2].diagnostics["divergence"] < 1e-7


def test_component_norms_add_up(lo_trace):
    op, u0, tr = lo_trace
    np.testing.assert_allclose(np.sqrt(np.sum(tr.component_norms ** 2, axis=1)), tr.norms, rtol=1e-10)


def test_reversibility(lo_trace):
    op, u0, _ = lo_trace
    assert reversibility_error(op, u0, 10.0) < 1e-6


def test_nonuniform_and_single_time(lo, g64, rng):
    op = assemble_Lmk(lo, 2, 0.5, g64)
    u0 = op.to_field(op.coords(smooth_divfree_field(g64, 2, 0.5, rng)))
    t = np.array([0.0, 0.3, 1.0, 4.0])
    tr = evolve_full(op, u0, t)
    uni = evolve_full(op, u0, np.linspace(0.0, 4.0, 41))
    assert tr.norms[-1] == pytest.approx(uni.norms[-1], rel=1e-10)
    assert "too short to fit" in tr.flags
    one = evolve_full(op, u0, [0.0])
    assert one.norms[0] == pytest.approx(u0.norm(g64), rel=1e-13)


@pytest.mark.parametrize("t", [[], [1.0, 0.5], [[0.0, 1.0]]])
def test_bad_time_grids(lo, g64, t):
    op = assemble_Lmk(lo, 1, 1.0, g64)
    with pytest.raises(DomainError):
        evolve_full(op, SectorField.zeros(64, 1, 1.0), t)


def test_fit_constant_trace():
    rate, deg, res = fit_growth(np.linspace(0, 10, 32), np.full(32, 3.0))
    assert abs(rate) < 1e-14 and abs(deg) < 1e-14


def test_fit_exponential_trace():
    t = np.linspace(0, 50, 256)
    rate, deg, (r_exp, r_poly) = fit_growth(t, np.exp(0.1 * t))
    assert rate == pytest.approx(0.1, abs=1e-3)
    assert r_exp < r_poly


def test_fit_polynomial_trace():
    t = np.linspace(0, 50, 256)
    rate, deg, (r_exp, r_poly) = fit_growth(t, (1 + t) ** 2)
    assert deg == pytest.approx(2.0, abs=0.1)
    assert r_poly < r_exp


def test_fit_errors():
    with pytest.raises(DomainError):
        fit_growth(np.arange(MIN_FIT_POINTS - 1.0), np.ones(MIN_FIT_POINTS - 1))
    y = np.ones(20)
    y[4] = np.nan
    with pytest.raises(DomainError):
        fit_growth(np.arange(20.0), y)
    with pytest.raises(DomainError):
        fit_growth(np.arange(20.0), np.r_[np.ones(19), np.inf])


@pytest.mark.parametrize("name", ["lo", "ks"])
@pytest.mark.parametrize("m,k", [(1, 0.5), (2, 2.0)])
def test_no_exponential_growth(request, name, m, k):
    prof = request.getfixturevalue(name)
    g = make_grid(64, 30.0)
    op = assemble_Lmk(prof, m, k, g)
    u0 = op.to_field(op.coords(smooth_divfree_field(g, m, k, 3)))
    tr = evolve_full(op, u0, np.linspace(0, 50, 128), cross_check=False)
    assert tr.fitted_exp_rate < 0.05
