"""Resolvent of the sector operators.

(s - L_{m,k}) u = f is solved either densely in divergence-free coordinates
or through the second-order equation for u_r,

    -(A d*u_r)' + [1 + k^2 A Phi/gamma^2 + (i m r/gamma) (W/(m^2+k^2 r^2))'] u_r = F,

with A = r^2/(m^2 + k^2 r^2), gamma = s + i m Omega and F built from f; u_theta
and u_z are then reconstructed algebraically.  Resolvent norms are the
inverse smallest singular values of s - L.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as la

from .errors import ConditioningError, CriticalLayerError, DomainError, VortexStabError
from .grid import RadialGrid, SectorField, _check_size
from .operator import SectorOperator, assemble_Lmk
from .specfun import bessel_ik_array

#: dimension up to which norms are computed by a full SVD
SVD_MAX_DIM = 256


@dataclass
class ResolventSample:
    s: complex
    m: int
    k: float
    norm_estimate: float
    method: str
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return self.s.real

    @property
    def b(self):
        """b = -Im(s)/m (s = a - i m b); None for m = 0."""
        return -self.s.imag / self.m if self.m else None

    @property
    def tau(self) -> float:
        return self.s.imag


# ---------------------------------------------------------------------------
# dense route

def solve_resolvent_full(op: SectorOperator, s: complex, f: SectorField, info: dict | None = None) -> SectorField:
    """Dense solve of (s - L) u = f in divergence-free coordinates.

    ``info`` (optional dict) receives the backward error and the smallest
    singular value of s - L.
    """
    s = complex(s)
    fc = op.coords(f)
    M = s * np.eye(op.dimension) - op.L
    smin = float(la.svdvals(M)[-1]) if op.dimension <= SVD_MAX_DIM else None
    scale = abs(s) + float(np.max(np.abs(op.L))) * op.dimension
    if smin is not None and smin < 1e-13 * scale:
        raise ConditioningError(f"s = {s} is numerically on the spectrum (sigma_min = {smin:.3e})",
                                distance=smin)
    try:
        x = la.solve(M, fc)
    except la.LinAlgError as exc:
        raise ConditioningError(f"singular resolvent system at s = {s}", distance=0.0) from exc
    nf = np.linalg.norm(fc)
    if info is not None:
        info["backward_error"] = float(np.linalg.norm(M @ x - fc) / nf) if nf else 0.0
        info["sigma_min"] = smin
    return op.to_field(x)


# ---------------------------------------------------------------------------
# scalar route

def _outer_ratio_ur(m, k, R):
    """u_r'/u_r at r_max for the decaying homogeneous behaviour."""
    if k != 0:
        x = abs(k) * R
        _, ke, _, kep = bessel_ik_array(m, x, scaled=True)
        # u_r ~ K_m'(|k| r); K'' = -K'/x + (1 + m^2/x^2) K
        return abs(k) * (-1.0 / x + (1.0 + m * m / x ** 2) * ke[0] / kep[0])
    return -(abs(m) + 1.0) / R


def solve_resolvent_scalar(prof, m: int, k: float, s: complex, f: SectorField, g: RadialGrid) -> SectorField:
    """Resolvent through the scalar equation for u_r plus reconstruction.

    Axis condition u_r'(0) = 0 for |m| = 1 and u_r(0) = 0 otherwise; at r_max
    the decaying behaviour (K_m'(|k| r) for k != 0, r^{-|m|-1} for k = 0) is
    imposed through a Robin condition.
    """
    _check_size(f, g)
    s = complex(s)
    if (f.m, f.k) != (m, k):
        raise DomainError("forcing belongs to another sector")
    if m == 0 and k == 0:
        return SectorField(0, 0.0, np.zeros(g.n, complex), f.u_theta / s, f.u_z / s)
    n = g.n
    r = g.r_nodes
    ra, Da = g.augmented()
    om, omp, w = prof.evaluate(r)
    wp = prof.w_p(r)
    gam = s + 1j * m * om
    ag = np.abs(gam)
    bad = np.nonzero(ag <= 1e-12 * ag.max())[0]
    if bad.size:
        j = int(bad[0])
        raise CriticalLayerError(f"gamma nearly vanishes at node {j} (r = {r[j]:.6g})",
                                 node=j, radius=float(r[j]))
    den = m * m + k * k * r * r
    A = r * r / den
    Ap = 2 * r * m * m / den ** 2
    Phi = 2 * om * w
    dWd = wp / den - 2 * k * k * r * w / den ** 2
    N = n + 2
    Da2 = Da @ Da
    E = np.eye(N)[1:-1]
    ri = r[:, None]
    op_rows = -(A[:, None] * (Da2[1:-1] + Da[1:-1] / ri - E / ri ** 2) + Ap[:, None] * (Da[1:-1] + E / ri))
    op_rows = op_rows + np.diag(1 + k * k * A * Phi / gam ** 2 + 1j * m * r / gam * dWd) @ E
    fr, ft, fz = f.u_r, f.u_theta, f.u_z
    F = (fr / gam
         + A * (2j * k * om / gam ** 2 + 2 * k * m / (gam * den)) * (-1j * k * ft + 1j * m / r * fz)
         + 1j * m / (gam * r) * A * (g.Dstar @ ft)
         + 1j * k / gam * A * (g.D @ fz))
    M = np.zeros((N, N), complex)
    rhs = np.zeros(N, complex)
    M[1:-1] = op_rows
    rhs[1:-1] = F
    if abs(m) == 1:
        M[0] = Da[0]
    else:
        M[0, 0] = 1.0
    M[-1] = Da[-1]
    M[-1, -1] -= _outer_ratio_ur(m, k, g.r_max)
    sol = la.solve(M, rhs)
    ur = sol[1:-1]
    dsur = (Da @ sol)[1:-1] + ur / r
    ut = (1j * m * A / r) * dsur - (k * k * A / gam) * (w * ur - ft) - (m * k * A / (gam * r)) * fz
    uz = 1j * k * A * dsur + (m * k * A / (gam * r)) * (w * ur - ft) + (m * m * A / (gam * r * r)) * fz
    return SectorField(m, k, ur, ut, uz)


# ---------------------------------------------------------------------------
# norms

def _inverse_power_norm(M, tol=1e-10, maxit=500, seed=0):
    """||M^{-1}|| by inverse iteration on M^H M (power method on (M^H M)^{-1})."""
    lu = la.lu_factor(M)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=M.shape[0]) + 1j * rng.normal(size=M.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for it in range(maxit):
        y = la.lu_solve(lu, x)
        z = la.lu_solve(lu, y, trans=2)
        new = math.sqrt(np.linalg.norm(z))
        x = z / np.linalg.norm(z)
        if abs(new - est) <= tol * new:
            return new, it + 1
        est = new
    return est, maxit


def resolvent_norm(op: SectorOperator, s: complex, method: str = "auto") -> float:
    """||(s - L)^{-1}|| in the orthonormal divergence-free coordinates."""
    return resolvent_sample(op, s, method).norm_estimate


def resolvent_sample(op: SectorOperator, s: complex, method: str = "auto") -> ResolventSample:
    s = complex(s)
    M = s * np.eye(op.dimension) - op.L
    if method == "auto":
        method = "svd" if op.dimension <= SVD_MAX_DIM else "power"
    diag = {}
    if method == "svd":
        sv = la.svdvals(M)
        smin = float(sv[-1])
        diag["sigma_min"] = smin
        diag["condition"] = float(sv[0] / smin) if smin > 0 else float("inf")
        if smin <= 1e-14 * sv[0]:
            raise ConditioningError(f"s = {s} is numerically on the spectrum", distance=smin)
        val = 1.0 / smin
    elif method == "power":
        val, its = _inverse_power_norm(M)
        diag["iterations"] = its
    else:
        raise ValueError(method)
    return ResolventSample(s=s, m=op.m, k=op.k, norm_estimate=float(val), method=method, diagnostics=diag)


# ---------------------------------------------------------------------------
# vertical-line scans

def default_tau(m: int, step: float = 0.25) -> np.ndarray:
    """Default imaginary parts [-2|m| - 4, 4] covering the shifted band."""
    return np.arange(-2 * abs(m) - 4, 4 + step / 2, step)


@dataclass
class ScanResult:
    a: float
    samples: list
    max_norm: float
    argmax: tuple
    per_m_max: dict
    trend_exponent: float
    failures: int

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "max_norm": self.max_norm,
            "argmax": {"m": self.argmax[0], "k": self.argmax[1], "tau": self.argmax[2]},
            "per_m_max": {str(m): v for m, v in self.per_m_max.items()},
            "trend_exponent": self.trend_exponent,
            "failures": self.failures,
            "samples": len(self.samples),
        }


def trend_exponent(per_m_max: dict) -> float:
    """Slope of log(max norm) against log(1 + |m|) (0 if fewer than two m)."""
    ms = sorted(per_m_max)
    if len(ms) < 2:
        return 0.0
    x = np.log1p(np.abs(np.array(ms, float)))
    y = np.log(np.array([per_m_max[m] for m in ms]))
    return float(np.polyfit(x, y, 1)[0])


def _scan_sector(prof, a, m, k, taus, g):
    out = []
    try:
        op = assemble_Lmk(prof, m, k, g)
    except VortexStabError as exc:
        return [ResolventSample(complex(a, t), m, k, float("nan"), "svd", status=f"error: {exc}") for t in taus]
    for t in taus:
        s = complex(a, t)
        try:
            out.append(resolvent_sample(op, s))
        except VortexStabError as exc:
            out.append(ResolventSample(s, m, k, float("nan"), "svd", status=f"error: {exc}"))
    return out


def scan_vertical_line(prof, a: float, m_list, k_list, tau_list=None, g: RadialGrid | None = None,
                       workers: int | None = None) -> ScanResult:
    """Resolvent norms on the line Re s = a for all (m, k, tau).

    ``tau_list`` None selects :func:`default_tau` per m.  Sectors are
    processed by a thread pool of ``workers`` (default: environment variable
    VORTEXSTAB_WORKERS or 1); results are merged in (m, k, tau) order so the
    outcome does not depend on the worker count.
    """
    if not a > 0:
        raise DomainError("scan needs a > 0 (negative a follows by symmetry)")
    from .grid import make_grid

    g = g or make_grid(64)
    workers = int(workers or os.environ.get("VORTEXSTAB_WORKERS", "1") or 1)
    tasks = [(int(m), float(k)) for m in m_list for k in k_list]
    taus = {m: (np.asarray(tau_list, float) if tau_list is not None else default_tau(m)) for m, _ in tasks}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda mk: _scan_sector(prof, a, mk[0], mk[1], taus[mk[0]], g), tasks))
    else:
        results = [_scan_sector(prof, a, m, k, taus[m], g) for m, k in tasks]
    samples = [smp for block in results for smp in block]
    samples.sort(key=lambda x: (x.m, x.k, x.s.imag))
    good = [x for x in samples if x.status == "ok" and np.isfinite(x.norm_estimate)]
    per_m = {}
    for x in good:
        per_m[x.m] = max(per_m.get(x.m, 0.0), x.norm_estimate)
    best = max(good, key=lambda x: x.norm_estimate) if good else None
    return ScanResult(
        a=float(a), samples=samples,
        max_norm=best.norm_estimate if best else float("nan"),
        argmax=(best.m, best.k, best.s.imag) if best else (None, None, None),
        per_m_max=per_m, trend_exponent=trend_exponent(per_m),
        failures=len(samples) - len(good),
    )


def axisymmetric_envelope(a: float) -> float:
    """Shape 1/a + 1/a^4 of the m = 0 resolvent bound."""
    return 1.0 / a + 1.0 / a ** 4


def fit_envelope_constant(scans) -> float:
    """Smallest C0 with norm <= C0 (1/a + 1/a^4) for all m = 0 samples of the scans."""
    ratios = [x.norm_estimate / axisymmetric_envelope(sc.a)
              for sc in scans for x in sc.samples if x.m == 0 and x.status == "ok"]
    if not ratios:
        raise DomainError("no m = 0 samples to fit")
    return float(max(ratios))


# ---------------------------------------------------------------------------
# symmetries

def symmetry_map(f: SectorField, which: str) -> SectorField:
    """Isometries between sectors.

    I1: (u_r, -u_theta, u_z) into (-m, k);  I2: (u_r, u_theta, -u_z) into
    (m, -k);  I3: complex conjugate into (-m, -k).
    """
    if which == "I1":
        return SectorField(-f.m, f.k, f.u_r.copy(), -f.u_theta, f.u_z.copy())
    if which == "I2":
        return SectorField(f.m, -f.k, f.u_r.copy(), f.u_theta.copy(), -f.u_z)
    if which == "I3":
        return SectorField(-f.m, -f.k, np.conj(f.u_r), np.conj(f.u_theta), np.conj(f.u_z))
    raise DomainError(f"unknown symmetry {which!r}")


def mapped_spectral_parameter(s: complex, which: str) -> complex:
    """Spectral parameter s' with (s' - L') (I u) = +/- I f, see :func:`symmetry_map`.

    I1: (s - L_{m,k}) u = f  <=>  (-s - L_{-m,k}) I1 u = -I1 f;
    I2: same s;  I3: conj(s).
    """
    return {"I1": -s, "I2": s, "I3": np.conj(s)}[which]
