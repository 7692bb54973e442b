"""Time evolution in a sector.

* :func:`evolve_advection` -- the explicit advection group e^{tA}:
  u_r -> e^{-im Omega t} u_r, u_theta -> e^{-im Omega t}(u_theta + r Omega' t u_r),
  u_z -> e^{-im Omega t} u_z.
* :func:`evolve_full` -- e^{tL} u0 by the matrix exponential, cross-checked
  with an adaptive Runge-Kutta integration.
* :func:`fit_growth` -- exponential rate and polynomial degree of a norm trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply
from scipy.linalg import expm

from .errors import DomainError, SolverError
from .grid import RadialGrid, SectorField, divergence_residual
from .operator import SectorOperator

#: norms beyond this multiple of ||u0|| are flagged as a potential instability
OVERFLOW_FACTOR = 1e12
MIN_FIT_POINTS = 16


@dataclass
class EvolutionTrace:
    times: np.ndarray
    norms: np.ndarray
    fitted_exp_rate: float
    fitted_poly_degree: float
    sector: tuple
    component_norms: np.ndarray | None = None
    fit_residuals: tuple = (float("nan"), float("nan"))
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def evolve_advection(f: SectorField, prof, t: float, g: RadialGrid) -> SectorField:
    """Exact advection group applied to a nodal sector field."""
    r = g.r_nodes
    om, omp, _ = prof.evaluate(r)
    ph = np.exp(-1j * f.m * om * t)
    return SectorField(f.m, f.k, ph * f.u_r, ph * (f.u_theta + r * omp * t * f.u_r), ph * f.u_z)


def advection_bound(prof, g: RadialGrid) -> float:
    """||r Omega'||_inf on the grid nodes (growth constant of e^{tA})."""
    r = g.r_nodes
    return float(np.max(np.abs(r * prof.omega_p(r))))


def _fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), rms


def fit_growth(trace_or_times, norms=None):
    """(exp_rate, poly_degree, (rms_exp, rms_poly)) fitted on the tail half.

    exp_rate: slope of log ||u|| against t; poly_degree: slope of log ||u||
    against log t (only t > 0 used).
    """
    if norms is None:
        times, norms = trace_or_times.times, trace_or_times.norms
    else:
        times = trace_or_times
    t = np.asarray(times, float)
    y = np.asarray(norms, float)
    if t.size < MIN_FIT_POINTS:
        raise DomainError(f"need at least {MIN_FIT_POINTS} samples to fit (got {t.size})")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise DomainError("norms must be finite and positive")
    tail = t >= t[0] + 0.5 * (t[-1] - t[0])
    ly = np.log(y[tail])
    rate, r1 = _fit(t[tail], ly)
    pos = tail & (t > 0)
    deg, r2 = _fit(np.log(t[pos]), np.log(y[pos])) if pos.sum() >= 2 else (0.0, 0.0)
    return rate, deg, (r1, r2)


def evolve_full(op: SectorOperator, u0: SectorField, t_grid, cross_check: bool = True,
                rk_tol: float = 1e-11) -> EvolutionTrace:
    """u(t) = exp(tL) u0 on the requested times.

    Uniform time grids use a single expm_multiply sweep (scaling and
    squaring); others use one dense exponential per time.  With
    ``cross_check`` the trace is recomputed by adaptive Runge-Kutta
    (Dormand-Prince) and the largest relative difference is recorded in
    ``diagnostics['rk_difference']``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be a nonempty increasing sequence")
    c0 = op.coords(u0)
    L = op.L
    uniform = t.size > 2 and np.allclose(np.diff(t), t[1] - t[0], rtol=1e-12, atol=1e-14)
    if t.size == 1:
        C = (expm(t[0] * L) @ c0)[None, :]
    elif uniform:
        C = expm_multiply(L, c0, start=t[0], stop=t[-1], num=t.size, endpoint=True)
    else:
        C = np.array([expm(tj * L) @ c0 for tj in t])
    norms = np.linalg.norm(C, axis=1)
    flags = []
    n0 = np.linalg.norm(c0)
    if not np.all(np.isfinite(norms)) or np.any(norms > OVERFLOW_FACTOR * max(n0, 1e-300)):
        flags.append("overflow")
    diag = {}
    if cross_check and t.size > 1 and "overflow" not in flags:
        sol = solve_ivp(lambda _, y: L @ y, (t[0], t[-1]), c0.astype(complex), method="DOP853",
                        t_eval=t, rtol=rk_tol, atol=rk_tol * max(n0, 1e-300))
        if not sol.success:
            raise SolverError(f"time stepping failed: {sol.message}")
        diff = np.linalg.norm(sol.y.T - C, axis=1) / np.maximum(norms, 1e-300)
        diag["rk_difference"] = float(np.max(diff))
    g = op.grid
    n = g.n
    U = C @ op.basis.Q.T
    comp = np.stack([np.sqrt(U[:, i * n:(i + 1) * n].__abs__() ** 2 @ g.weights) for i in range(3)], axis=1)
    fields = [0, t.size // 2, t.size - 1]
    diag["divergence"] = float(max(divergence_residual(SectorField.from_stack(U[j], op.m, op.k), g) for j in fields))
    if t.size >= MIN_FIT_POINTS and "overflow" not in flags:
        rate, deg, res = fit_growth(t, norms)
    else:
        rate, deg, res = 0.0, 0.0, (float("nan"), float("nan"))
        if t.size < MIN_FIT_POINTS:
            flags.append("too short to fit")
    return EvolutionTrace(times=t, norms=norms, fitted_exp_rate=rate, fitted_poly_degree=deg,
                          sector=(op.m, op.k), component_norms=comp, fit_residuals=res,
                          flags=flags, diagnostics=diag)


def reversibility_error(op: SectorOperator, u0: SectorField, t: float = 10.0) -> float:
    """||exp(-tL) exp(tL) u0 - u0|| / ||u0||."""
    c0 = op.coords(u0)
    c1 = expm(-t * op.L) @ (expm(t * op.L) @ c0)
    return float(np.linalg.norm(c1 - c0) / np.linalg.norm(c0))
