import numpy as np
import pytest

from vortexstab.errors import CriticalLayerError, DomainError
from vortexstab.grid import make_grid
from vortexstab.operator import assemble_Lmk
from vortexstab.spectral import (compute_spectrum, critical_layer_parameters, critical_layer_profile,
                                 distance_to_band, eigenfunction_radial, essential_interval,
                                 hausdorff_to_band, match_sets, scalar_eig_residual)


def test_essential_interval_examples():
    assert essential_interval(0) == (0j, 0j)
    assert essential_interval(2) == (0j, -2j)
    assert essential_interval(-3) == (0j, 3j)


def test_band_distances():
    assert distance_to_band(-0.5j, 1) == 0.0
    assert distance_to_band(0.3 - 0.5j, 1) == pytest.approx(0.3)
    assert distance_to_band(-1.5j, 1) == pytest.approx(0.5)
    assert distance_to_band(0.5j, -1) == 0.0
    assert hausdorff_to_band(np.array([0j, -1j]), 1) == pytest.approx(0.5, abs=1e-3)
    assert hausdorff_to_band(-1j * np.linspace(0, 1, 4001), 1) < 1e-12


def test_match_sets():
    a = np.array([1, 2j, -1])
    assert match_sets(a, a[::-1]) == 0.0
    assert match_sets(a, a + 1e-3) == pytest.approx(1e-3)
    with pytest.raises(DomainError):
        match_sets(a, a[:2])


@pytest.mark.parametrize("name,m,k", [("lo", 1, 1.0), ("ks", 2, 0.5)])
def test_persistent_eigenvalues_on_axis(request, name, m, k):
    prof = request.getfixturevalue(name)
    res = compute_spectrum(prof, m, k, 64, 96)
    assert len(res.persistent()) > 0
    assert res.max_abs_real() < 1e-3
    assert not res.flags
    assert res.grid_pair == (64, 96) and res.essential == (0j, -1j * m)
    for e in res.eigenvalues:
        assert np.isfinite(e.residual)
        if e.persistent:
            assert np.min(np.abs(res.coarse - e.value)) <= 1e-3


def test_trivial_sector_spectrum_is_zero(lo):
    res = compute_spectrum(lo, 0, 0.0, 64, 96)
    assert np.max(np.abs(res.all_values())) < 1e-10


def test_violating_profile_is_flagged(lo):
    from vortexstab.profile import nonmonotone_example

    res = compute_spectrum(nonmonotone_example(), 1, 1.0, 32, 48)
    assert res.flags and "h1_wprime_negative" in res.flags[0]


def test_spectral_symmetries(lo):
    a = compute_spectrum(lo, 2, 1.0, 64, 96).persistent()
    b = compute_spectrum(lo, 2, -1.0, 64, 96).persistent()
    c = compute_spectrum(lo, -2, 1.0, 64, 96).persistent()
    assert match_sets(a, b) < 1e-8
    assert match_sets(a, -c) < 1e-8
    assert match_sets(a, -np.conj(a)) < 1e-8


def test_json_roundtrip(ks):
    import json

    res = compute_spectrum(ks, 1, 1.0, 48, 64)
    d = json.loads(res.to_json())
    assert d["sector"] == [1, 1.0] and len(d["eigenvalues"]) == len(res.eigenvalues)


@pytest.mark.parametrize("m,k", [(1, 1.0), (0, 1.0), (2, 1.0)])
def test_scalar_equation_accepts_eigenfunctions(lo, g96, m, k):
    res = compute_spectrum(lo, m, k, 64, 96)
    cand = res.discrete_candidates()
    assert cand.size
    op = assemble_Lmk(lo, m, k, g96)
    lam, V = op.eig()
    j = int(np.argmin(np.abs(lam - cand[0])))
    ur = eigenfunction_radial(op, V[:, j])
    assert scalar_eig_residual(lo, m, k, lam[j] + 1e-6, ur, g96) < 1e-2


def test_scalar_equation_rejects_random_data(lo, g96, rng):
    ur = rng.normal(size=96) + 1j * rng.normal(size=96)
    s = 1.0 + 1j * rng.uniform(-2, 2)
    assert scalar_eig_residual(lo, 1, 1.0, s, ur, g96) > 0.1
    assert scalar_eig_residual(lo, 1, 1.0, s, np.zeros(96), g96) == 0.0


def test_scalar_equation_errors(lo, g64):
    with pytest.raises(DomainError):
        scalar_eig_residual(lo, 0, 0.0, 1.0, np.ones(64), g64)
    r3 = g64.r_nodes[3]
    s = -1j * lo.omega(np.array([r3]))[0]  # gamma = s + i Omega vanishes at node 3
    with pytest.raises(CriticalLayerError) as exc:
        scalar_eig_residual(lo, 1, 1.0, s, np.ones(64), g64)
    assert exc.value.node == 3


def test_critical_layer_residual_and_decay():
    kappa, nu, c = 1.5, 0.3, 1.0
    y = np.linspace(0.5, 10.0, 40)
    U, res = critical_layer_profile(kappa, nu, c, y)
    assert np.nanmax(res) < 1e-4
    (u1, u10), _ = critical_layer_profile(kappa, nu, c, [1.0, 10.0])
    model = np.exp(-kappa * 9.0) / np.sqrt(abs(10 + 1j * c) / abs(1 + 1j * c))
    ratio = abs(u10) / abs(u1)
    # sqrt(z) K_nu(kappa z) ~ sqrt(pi / (2 kappa)) e^{-kappa z}: modulus depends on Re z only
    assert 0.5 < ratio / np.exp(-kappa * 9.0) < 2.0
    assert np.isfinite(model)


def test_critical_layer_growth_needs_continuation():
    with pytest.raises(DomainError):
        critical_layer_profile(1.5, 0.3, 1.0, [-8.0])
    (u_neg, u0), res = critical_layer_profile(1.5, 0.3, 1.0, [-8.0, 0.0], allow_continuation=True)
    assert abs(u_neg) > 1e3 * abs(u0)
    assert np.nanmax(res) < 1e-4


def test_critical_layer_bad_parameters():
    with pytest.raises(DomainError):
        critical_layer_profile(-1.0, 0.3, 1.0, [1.0])
    with pytest.raises(DomainError):
        critical_layer_profile(1.0, 0.3, 0.0, [1.0])


def test_critical_layer_parameters(lo):
    kappa, nu, c, J = critical_layer_parameters(lo, 1.2, 1.0, 0.5)
    assert kappa == pytest.approx(np.sqrt(1 / 1.44 + 1))
    assert nu ** 2 == pytest.approx(0.25 - J)
    assert c == pytest.approx(-0.5 / lo.omega_p(1.2)) and c > 0
    U, res = critical_layer_profile(kappa, nu, c, np.linspace(0.5, 5, 10))
    assert np.nanmax(res) < 1e-4
