"""Spectra of the sector operators.

* :func:`essential_interval` -- the advection band {-i m b : b in [0, 1]}.
* :func:`compute_spectrum` -- dense eigenvalues on two grids, paired to
  separate refinement-persistent eigenvalues from discretization scatter.
* :func:`scalar_eig_residual` -- residual of the second-order equation
  satisfied by the radial velocity of an eigenfunction.
* :func:`critical_layer_profile` -- the Bessel-type solution
  (y + ic)^{1/2} K_nu(kappa (y + ic)) of the critical-layer limit equation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as la
from scipy.optimize import linear_sum_assignment

from .errors import CriticalLayerError, DomainError, SolverError
from .grid import make_grid
from .operator import assemble_Lmk
from .specfun import bessel_K_continued, bessel_K_general

PAIRING_TOL = 1e-3
BAND_MARGIN = 5e-2
OFF_AXIS_SHIFT = 1e-6


def essential_interval(m: int) -> tuple[complex, complex]:
    """Endpoints (0, -i m) of the essential spectrum (Omega(0) = 1 normalization)."""
    return (0j, complex(0.0, -float(m)))


def distance_to_band(z, m: int) -> np.ndarray:
    """Euclidean distance from z to the segment [0, -i m]."""
    z = np.asarray(z, dtype=complex)
    lo, hi = min(0.0, -m), max(0.0, -m)
    dy = np.maximum(0.0, np.maximum(lo - z.imag, z.imag - hi))
    return np.hypot(z.real, dy)


def hausdorff_to_band(z, m: int, samples: int = 4001) -> float:
    """Hausdorff distance between a finite set z and the segment [0, -i m]."""
    z = np.asarray(z, dtype=complex).ravel()
    d1 = float(np.max(distance_to_band(z, m))) if z.size else 0.0
    seg = -1j * m * np.linspace(0.0, 1.0, samples)
    d2 = float(np.max(np.min(np.abs(seg[:, None] - z[None, :]), axis=1))) if z.size else float("inf")
    return max(d1, d2)


@dataclass
class Eigen:
    value: complex
    residual: float
    persistent: bool
    band: bool
    partner_distance: float


@dataclass
class SpectrumResult:
    sector: tuple
    essential: tuple
    eigenvalues: list
    grid_pair: tuple
    flags: list = field(default_factory=list)
    coarse: np.ndarray | None = None

    def persistent(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues if e.persistent], dtype=complex)

    def discrete_candidates(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues if e.persistent and not e.band], dtype=complex)

    def all_values(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues], dtype=complex)

    def max_abs_real(self, persistent_only=True) -> float:
        v = self.persistent() if persistent_only else self.all_values()
        return float(np.max(np.abs(v.real))) if v.size else 0.0

    def to_dict(self) -> dict:
        return {
            "sector": [self.sector[0], self.sector[1]],
            "essential": [[z.real, z.imag] for z in self.essential],
            "grid_pair": list(self.grid_pair),
            "flags": list(self.flags),
            "eigenvalues": [
                {"re": e.value.real, "im": e.value.imag, "residual": e.residual,
                 "persistent": e.persistent, "band": e.band}
                for e in self.eigenvalues
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _eig(op):
    try:
        lam, V = op.eig()
    except la.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SolverError(f"eigensolver failed in sector ({op.m},{op.k}): {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise SolverError(f"non-finite eigenvalues in sector ({op.m},{op.k})")
    return lam, V


def eigen_residuals(op, lam, V) -> np.ndarray:
    """||(L - lambda) v|| / ||v|| for each eigenpair (coordinates are orthonormal)."""
    R = op.L @ V - V * lam[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(V, axis=0)


def compute_spectrum(prof, m: int, k: float, n_coarse: int = 64, n_fine: int = 96,
                     r_max: float = 30.0, tol: float = PAIRING_TOL,
                     band_margin: float = BAND_MARGIN, check_profile: bool = True) -> SpectrumResult:
    """Eigenvalues of L_{m,k} on two grids with persistence pairing.

    Reported values are those of the fine grid; an eigenvalue is persistent
    if some coarse-grid eigenvalue lies within ``tol``.  Eigenvalues within
    ``band_margin`` of the essential band are labelled ``band``.
    """
    flags = []
    if check_profile:
        from .profile import check_assumptions

        rep = check_assumptions(prof)
        if not rep.passed:
            flags.append("profile assumptions violated: " +
                         ", ".join(c.name for c in rep.violations()))
    opc = assemble_Lmk(prof, m, k, make_grid(n_coarse, r_max))
    opf = assemble_Lmk(prof, m, k, make_grid(n_fine, r_max))
    lc = opc.eigvals()
    if not np.all(np.isfinite(lc)):
        raise SolverError(f"non-finite eigenvalues in sector ({m},{k})")
    lf, V = _eig(opf)
    res = eigen_residuals(opf, lf, V)
    if lc.size:
        dist = np.min(np.abs(lf[:, None] - lc[None, :]), axis=1)
    else:
        dist = np.full(lf.shape, np.inf)
    band = distance_to_band(lf, m) <= band_margin
    order = np.lexsort((lf.real, lf.imag))
    eig = [Eigen(complex(lf[j]), float(res[j]), bool(dist[j] <= tol), bool(band[j]), float(dist[j]))
           for j in order]
    return SpectrumResult(sector=(m, k), essential=essential_interval(m), eigenvalues=eig,
                          grid_pair=(n_coarse, n_fine), flags=flags, coarse=lc)


def match_sets(a, b) -> float:
    """Largest distance in the optimal one-to-one matching of two equal-size sets."""
    a = np.asarray(a, complex).ravel()
    b = np.asarray(b, complex).ravel()
    if a.size != b.size:
        raise DomainError(f"sets have different sizes ({a.size} vs {b.size})")
    if a.size == 0:
        return 0.0
    C = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(C)
    return float(np.max(C[i, j]))


# ---------------------------------------------------------------------------
# scalar equation

def scalar_coefficients(prof, m, k, s, r):
    """Coefficients (A, A', potential) of the scalar radial equation at radii r.

    -(A (d*u))' + V u with A = r^2/(m^2 + k^2 r^2) and
    V = 1 + k^2 A Phi/gamma^2 + (i m r/gamma) d/dr(W/(m^2 + k^2 r^2)).
    """
    om, omp, w = prof.evaluate(r)
    wp = prof.w_p(r)
    gam = s + 1j * m * om
    den = m * m + k * k * r * r
    A = r * r / den
    Ap = 2 * r * m * m / den ** 2
    dWd = wp / den - 2 * k * k * r * w / den ** 2
    V = 1 + k * k * A * (2 * om * w) / gam ** 2 + 1j * m * r / gam * dWd
    return A, Ap, V, gam


def scalar_eig_residual(prof, m, k, s, u_r, g) -> float:
    """Relative weighted-norm residual of the homogeneous scalar equation."""
    if m == 0 and k == 0:
        raise DomainError("scalar equation needs (m, k) != (0, 0)")
    u_r = np.asarray(u_r, dtype=complex)
    nrm = g.norm(u_r)
    if nrm == 0.0:
        return 0.0
    r = g.r_nodes
    ag = np.abs(s + 1j * m * prof.omega(r))
    bad = np.nonzero(ag <= 1e-12 * max(ag.max(), 1e-300))[0]
    if bad.size:
        j = int(bad[0])
        raise CriticalLayerError(f"gamma vanishes at node {j} (r = {r[j]:.6g})", node=j, radius=float(r[j]))
    A, Ap, V, gam = scalar_coefficients(prof, m, k, s, r)
    ds = g.Dstar @ u_r
    res = -(g.D @ (A * ds)) + V * u_r
    return g.norm(res) / nrm


def eigenfunction_radial(op, v) -> np.ndarray:
    """Nodal u_r of the coordinate vector v."""
    return (op.basis.Q @ v)[: op.grid.n]


# ---------------------------------------------------------------------------
# critical layer

def critical_layer_parameters(prof, r_bar: float, delta: float, a: float):
    """(kappa, nu, c, J) for the limit equation at radius r_bar.

    kappa^2 = 1/r_bar^2 + delta^2, nu^2 = 1/4 - J(r_bar) delta^2 (principal
    root), c = -a / Omega'(r_bar).
    """
    J = float(prof.J(np.array([r_bar]))[0])
    kappa = float(np.sqrt(1.0 / r_bar ** 2 + delta ** 2))
    nu = complex(np.sqrt(complex(0.25 - J * delta ** 2)))
    c = float(-a / prof.omega_p(np.array([r_bar]))[0])
    return kappa, nu, c, J


def critical_layer_profile(kappa: float, nu: complex, c: float, y_samples, h: float = 1e-3,
                           allow_continuation: bool = False):
    """U(y) = (y + ic)^{1/2} K_nu(kappa (y + ic)) and its equation residual.

    Returns (U, residual) where residual[j] is the relative finite-difference
    residual |-U'' + (kappa^2 - (1/4 - nu^2)/(y + ic)^2) U| / |U| at the
    interior samples (step h).  Arguments with Re <= 0 (y < 0) require
    ``allow_continuation``, which switches to the analytic continuation of
    K_nu across the imaginary axis.
    """
    if not kappa > 0 or not c > 0:
        raise DomainError("kappa and c must be positive")
    y = np.asarray(y_samples, dtype=float)
    K = bessel_K_continued if allow_continuation else bessel_K_general

    def U(yv):
        z = yv + 1j * c
        if not allow_continuation and kappa * yv <= 0:
            raise DomainError(f"argument kappa (y + ic) leaves the right half-plane at y = {yv}")
        return np.sqrt(z) * K(nu, kappa * z)

    vals = np.array([U(v) for v in y], dtype=complex)
    jd = 0.25 - complex(nu) ** 2  # J delta^2
    res = np.full(y.shape, np.nan)
    for j, yv in enumerate(y):
        try:
            up, um = U(yv + h), U(yv - h)
        except DomainError:
            continue
        d2 = (up - 2 * vals[j] + um) / h ** 2
        z = yv + 1j * c
        r = -d2 + (kappa ** 2 - jd / z ** 2) * vals[j]
        res[j] = abs(r) / abs(vals[j])
    return vals, res
