"""Sector pressure p = P_{m,k}[u].

The pressure solves

    -(1/r)(r p')' + (m^2/r^2 + k^2) p = 2im ((r Omega)'/r) u_r - 2 d*(Omega u_theta),

with d* = d/dr + 1/r, regular at the axis and decaying at infinity.  Two
independent solvers are provided:

* :func:`pressure_green` integrates the Green's function of the left-hand
  side (modified Bessel kernels I_m(|k| r_<) K_m(|k| r_>) for k != 0, power
  kernels (r_</r_>)^{|m|} for k = 0, m != 0).  The derivative in the second
  forcing term is moved onto the kernel, so only u_r and u_theta are sampled.
* :func:`pressure_bvp` collocates the equation on the grid augmented with
  both endpoints and imposes boundary conditions there.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as la

from .errors import DomainError
from .grid import RadialGrid, SectorField, _check_size
from .specfun import bessel_ik_array

#: |k| r_max / n above which the Green's-function quadrature is flagged
UNDERSAMPLING_LIMIT = 1.0


@dataclass
class PressureSolution:
    p: np.ndarray
    dp: np.ndarray
    method: str
    residual_norm: float
    sector: tuple
    diagnostics: dict = field(default_factory=dict)


def forcing(prof, f: SectorField, g: RadialGrid) -> np.ndarray:
    """Right-hand side 2im (d*Omega) u_r - 2 d*(Omega u_theta) at the nodes."""
    r = g.r_nodes
    om, omp, w = prof.evaluate(r)
    dstar_om = (w - om) / r  # ((r Omega)')/r = (W - Omega)/r
    return 2j * f.m * dstar_om * f.u_r - 2.0 * (g.Dstar @ (om * f.u_theta))


def _nodal_operator(g: RadialGrid, m, k) -> np.ndarray:
    """-(D^2 + D/r) + m^2/r^2 + k^2 on nodal values (interpolant of degree n-1)."""
    r = g.r_nodes
    return -(g.D @ g.D + g.D / r[:, None]) + np.diag(m * m / r ** 2 + k * k)


def residual(prof, f: SectorField, g: RadialGrid, p) -> float:
    """Weighted-norm residual of the pressure equation relative to the forcing."""
    F = forcing(prof, f, g)
    res = _nodal_operator(g, f.m, f.k) @ p - F
    nf = g.norm(F)
    return g.norm(res) / nf if nf > 0 else g.norm(res)


# ---------------------------------------------------------------------------
# Green's-function route

def _kernels(m, k, s):
    """Scaled (e^{-x} I_m, e^{-x} I_m', e^{x} K_m, e^{x} K_m') at x = |k| s.

    The compensating exponentials are combined by the caller with those of
    the evaluation point, so every factor stays below one.
    """
    ie, ke, iep, kep = bessel_ik_array(m, np.abs(k) * s, scaled=True)
    return ie, iep, ke, kep


@functools.lru_cache(maxsize=32)
def _gl(q):
    return np.polynomial.legendre.leggauss(q)


def _green_matrices(prof, g: RadialGrid, m: int, k: float, q: int):
    """Matrices (P_r, P_t, dP_r, dP_t) with p = P_r u_r + P_t u_theta at nodes.

    For every node r_i the integrals over (0, r_i) and (r_i, R) are computed
    separately, so the kernel kink at s = r_i never sits inside a panel.  The
    inner panel uses Gauss points in the grid coordinate x; the outer panel
    uses the logarithmic variable s = r_i (R/r_i)^tau.  Field values at the
    quadrature points come from the nodal interpolant.
    """
    n = g.n
    r = g.r_nodes
    R = g.r_max
    t, wt = _gl(q)
    mu = abs(m)
    kap = abs(k)
    # inner panels: x in (-1, x_i)
    xi = g.x_nodes
    xs = (-1.0 + (xi[:, None] + 1.0) * (t[None, :] + 1.0) / 2.0)  # n x q
    s_in = g.x_to_r(xs)
    ds_in = (xi[:, None] + 1.0) / 2.0 * wt[None, :] * g.stretch * (1.0 + g.b) / (g.b - xs) ** 2
    # outer panels: s = r_i (R/r_i)^tau, tau in (0, 1)
    lg = np.log(R / r)
    tau = (t + 1.0) / 2.0
    s_out = r[:, None] * np.exp(lg[:, None] * tau[None, :])
    ds_out = s_out * lg[:, None] * (wt[None, :] / 2.0)

    def weights_matrix(s, ds, k1, k2):
        """Sum over quadrature of kernel * coefficient * interpolation rows."""
        S = s.ravel()
        om, omp, w = prof.evaluate(S)
        c1 = (w - om)           # (s Omega)'
        c2 = S * om              # s Omega
        E = g.interp_matrix(S)   # (n q) x n
        a1 = (k1.ravel() * c1 * ds.ravel())[:, None] * E
        a2 = (k2.ravel() * c2 * ds.ravel())[:, None] * E
        return a1.reshape(n, q, n).sum(axis=1), a2.reshape(n, q, n).sum(axis=1)

    if k != 0:
        ie_s, iep_s, _, _ = _kernels(m, kap, s_in)
        _, _, ke_s, kep_s = _kernels(m, kap, s_out)
        e_in = np.exp(-kap * (r[:, None] - s_in))    # <= 1
        e_out = np.exp(-kap * (s_out - r[:, None]))  # <= 1
        In1, In2 = weights_matrix(s_in, ds_in, ie_s * e_in, iep_s * e_in)
        Out1, Out2 = weights_matrix(s_out, ds_out, ke_s * e_out, kep_s * e_out)
        ier, ker, iepr, kepr = bessel_ik_array(m, kap * r, scaled=True)
        # p = 2im P1 + 2|k| P2, P = K(kr) * inner + I(kr) * outer
        P1 = ker[:, None] * In1 + ier[:, None] * Out1
        P2 = ker[:, None] * In2 + ier[:, None] * Out2
        dP1 = kap * (kepr[:, None] * In1 + iepr[:, None] * Out1)
        dP2 = kap * (kepr[:, None] * In2 + iepr[:, None] * Out2)
        # the s-derivative kernel jumps at s = r; the Wronskian turns the jump
        # into the local term 2 Omega u_theta
        jump = np.diag(2.0 * prof.omega(r))
        return 2j * m * P1, 2 * kap * P2, 2j * m * dP1, 2 * kap * dP2 + jump
    if m != 0:
        rin = s_in / r[:, None]    # (s/r) <= 1
        rout = r[:, None] / s_out  # (r/s) <= 1
        In1, In2 = weights_matrix(s_in, ds_in, rin ** mu, rin ** mu / s_in)
        Out1, Out2 = weights_matrix(s_out, ds_out, rout ** mu, rout ** mu / s_out)
        rr = r[:, None]
        # G = (r_</r_>)^mu / (2 mu); dG/ds = (1/2) s^{mu-1} r^{-mu} (s<r), -(1/2) r^mu s^{-mu-1} (s>r)
        P1 = (In1 + Out1) / (2 * mu)
        P2 = In2 - Out2
        dP1 = (-mu * In1 + mu * Out1) / (2 * mu) / rr
        dP2 = (-mu * In2 - mu * Out2) / rr
        jump = np.diag(2.0 * prof.omega(r))
        return 2j * m * P1, P2, 2j * m * dP1, dP2 + jump
    # m = k = 0: p = -2 int_r^R Omega u_theta ds, p' = 2 Omega u_theta
    _, Out2 = weights_matrix(s_out, ds_out, np.zeros_like(s_out), 1.0 / s_out)
    om = prof.omega(r)
    Z = np.zeros((n, n))
    return Z, -2.0 * Out2, Z, np.diag(2.0 * om)


def pressure_green(prof, f: SectorField, g: RadialGrid, q: int | None = None) -> PressureSolution:
    """Pressure from the Green's-function representation.

    ``q`` is the number of Gauss points per panel (default max(2n, 64)).
    Integrals stop at r_max: the fields used here decay, and the omitted
    tail is of the size of the forcing at r_max times the kernel there,
    reported as ``tail_estimate``.
    """
    _check_size(f, g)
    q = int(q or max(2 * g.n, 64))
    Pr, Pt, dPr, dPt = _green_matrices(prof, g, f.m, f.k, q)
    p = Pr @ f.u_r + Pt @ f.u_theta
    dp = dPr @ f.u_r + dPt @ f.u_theta
    diag = {"quadrature_points": q}
    und = abs(f.k) * g.r_max / g.n
    diag["undersampled"] = bool(und > UNDERSAMPLING_LIMIT)
    if diag["undersampled"]:
        warnings.warn(f"Green's-function kernel undersampled (|k| r_max / n = {und:.3g})",
                      RuntimeWarning, stacklevel=2)
    om = prof.omega(np.array([g.r_max]))[0]
    diag["tail_estimate"] = float(abs(g.r_max * om) * (abs(f.u_r[-1]) + abs(f.u_theta[-1])))
    return PressureSolution(p=p, dp=dp, method="green",
                            residual_norm=residual(prof, f, g, p),
                            sector=(f.m, f.k), diagnostics=diag)


# ---------------------------------------------------------------------------
# boundary-value route

def _outer_robin(m, k, R):
    """Ratio p'/p imposed at r_max (decaying solution of the homogeneous problem)."""
    if k != 0:
        _, ke, _, kep = bessel_ik_array(m, abs(k) * R, scaled=True)
        return float(abs(k) * kep[0] / ke[0])
    if m != 0:
        return -abs(m) / R
    return None


@functools.lru_cache(maxsize=64)
def _bvp_factor(n, r_max, stretch, m, k):
    from .grid import _augmented

    ra, Da = _augmented(n, r_max, stretch)
    N = n + 2
    ri = ra[1:-1]
    M = np.zeros((N, N))
    Da2 = Da @ Da
    M[1:-1] = -(Da2[1:-1] + Da[1:-1] / ri[:, None])
    M[1:-1, 1:-1] += np.diag(m * m / ri ** 2 + k * k)
    if m != 0:
        M[0, 0] = 1.0           # Dirichlet at the axis
    else:
        M[0] = Da[0]            # Neumann at the axis
    ratio = _outer_robin(m, k, r_max)
    if ratio is None:
        M[-1, -1] = 1.0         # gauge p(r_max) = 0
    else:
        M[-1] = Da[-1]
        M[-1, -1] -= ratio
    lu = la.lu_factor(M)
    return lu, Da


def pressure_bvp(prof, f: SectorField, g: RadialGrid) -> PressureSolution:
    """Pressure from a collocated two-point boundary-value problem.

    Axis: p = 0 for m != 0, p' = 0 for m = 0.  Outer end r_max:
    p'/p = |k| K_m'(|k|R)/K_m(|k|R) (k != 0), R p' + |m| p = 0 (k = 0, m != 0),
    p = 0 for m = k = 0 (the additive constant is fixed by decay).
    """
    _check_size(f, g)
    m, k = f.m, f.k
    lu, Da = _bvp_factor(g.n, g.r_max, g.stretch, int(m), float(k))
    rhs = np.zeros(g.n + 2, complex)
    F = forcing(prof, f, g)
    rhs[1:-1] = F
    sol = la.lu_solve(lu, rhs)
    p = sol[1:-1]
    dp = (Da @ sol)[1:-1]
    diag = {"axis": "dirichlet" if m != 0 else "neumann",
            "outer": "robin" if (k != 0 or m != 0) else "gauge p(r_max)=0"}
    if abs(m) >= 2:
        diag["axis_slope"] = complex(dp[0])
    nf = g.norm(F)
    # residual of the collocated equation (exact in exact arithmetic)
    ra, _ = g.augmented()
    ri = ra[1:-1]
    Da2 = Da @ Da
    M_int_res = -(Da2[1:-1] + Da[1:-1] / ri[:, None]) @ sol + (m * m / ri ** 2 + k * k) * p - F
    res = g.norm(M_int_res) / nf if nf > 0 else g.norm(M_int_res)
    return PressureSolution(p=p, dp=dp, method="bvp", residual_norm=float(res),
                            sector=(m, k), diagnostics=diag)


def pressure_operator(prof, g: RadialGrid, m: int, k: float, method="bvp"):
    """Matrices (P, dP) mapping stacked (u_r, u_theta) to p and p' at the nodes."""
    if method == "green":
        Pr, Pt, dPr, dPt = _green_matrices(prof, g, m, k, max(2 * g.n, 64))
        return np.hstack([Pr, Pt]), np.hstack([dPr, dPt])
    lu, Da = _bvp_factor(g.n, g.r_max, g.stretch, int(m), float(k))
    r = g.r_nodes
    om, omp, w = prof.evaluate(r)
    F = np.hstack([np.diag(2j * m * (w - om) / r), -2.0 * g.Dstar @ np.diag(om)])
    rhs = np.zeros((g.n + 2, 2 * g.n), complex)
    rhs[1:-1] = F
    sol = la.lu_solve(lu, rhs)
    return sol[1:-1], (Da @ sol)[1:-1]


# ---------------------------------------------------------------------------
# energy diagnostics

def energy_ratio(sol: PressureSolution, f: SectorField, g: RadialGrid) -> float:
    """(||p'||^2 + ||m p/r||^2 + ||k p||^2) / (||u_r||^2 + ||u_theta||^2)."""
    den = g.norm(f.u_r) ** 2 + g.norm(f.u_theta) ** 2
    if den == 0.0:
        return 0.0
    m, k = sol.sector
    r = g.r_nodes
    num = g.norm(sol.dp) ** 2 + g.norm(m * sol.p / r) ** 2 + g.norm(k * sol.p) ** 2
    return float(num / den)


def energy_bound(prof, r_max=50.0) -> float:
    """Constant 4||(r Omega)'||_inf^2 + 4||Omega||_inf^2 bounding energy_ratio."""
    r = np.linspace(1e-6, r_max, 200001)
    om, omp, w = prof.evaluate(r)
    return float(4 * np.max(np.abs(w - om)) ** 2 + 4 * np.max(np.abs(om)) ** 2)


def far_field_check(prof, sol: PressureSolution, f: SectorField, g: RadialGrid, r_max=50.0):
    """Both sides of the weighted (r^2) energy inequality.

    Returns (lhs, rhs) with lhs = ||r p'||^2 + ||m p||^2 + ||k r p||^2 and
    rhs = 3||p||^2 + C (||u_r||^2 + ||u_theta||^2), where
    C = (4/3) max(4||r (r Omega)'||_inf^2, 20||r Omega||_inf^2).
    """
    m, k = sol.sector
    if k == 0 and abs(m) < 2:
        raise DomainError("weighted estimate needs k != 0 or |m| >= 2")
    r = g.r_nodes
    rs = np.linspace(1e-6, r_max, 200001)
    om, omp, w = prof.evaluate(rs)
    C = (4.0 / 3.0) * max(4 * np.max(np.abs(rs * (w - om))) ** 2, 20 * np.max(np.abs(rs * om)) ** 2)
    lhs = g.norm(r * sol.dp) ** 2 + g.norm(m * sol.p) ** 2 + g.norm(k * r * sol.p) ** 2
    rhs = 3 * g.norm(sol.p) ** 2 + C * (g.norm(f.u_r) ** 2 + g.norm(f.u_theta) ** 2)
    return float(lhs), float(rhs)
