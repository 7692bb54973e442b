"""Vortex profiles: angular velocity Omega(r), vorticity W(r) and derived
quantities, plus numerical checks of the structural assumptions.

Two profile families are provided in closed form (Lamb-Oseen and
Kaufmann-Scully).  Arbitrary profiles can be built from a sampled vorticity
W(r) with :func:`omega_from_w`; Omega is then recovered from

    Omega(r) = r^{-2} int_0^r W(s) s ds ,   Omega' = (W - 2 Omega)/r .

All profiles are normalized by W(0) = 2, Omega(0) = 1 (the built-ins
satisfy this exactly; tabulated input is checked, not rescaled).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PPoly, make_interp_spline

from .errors import AssumptionViolation, DomainError

#: below this radius removable singularities are evaluated by Taylor series
SERIES_RADIUS = 1e-3
#: values below this magnitude are treated as underflowed when checking signs
UNDERFLOW = 1e-280


class VortexProfile:
    """A columnar vortex profile.

    Subclasses implement ``omega``, ``omega_p``, ``omega_pp``, ``w`` and
    ``w_p``; everything else is derived.
    """

    name = "profile"
    form = "closed_form"
    gamma_total = 1.0

    def __init__(self):
        self.warnings: list[str] = []

    # -- primitive quantities (overridden) ---------------------------------
    def omega(self, r):
        raise NotImplementedError

    def omega_p(self, r):
        raise NotImplementedError

    def omega_pp(self, r):
        raise NotImplementedError

    def w(self, r):
        raise NotImplementedError

    def w_p(self, r):
        raise NotImplementedError

    # -- derived -----------------------------------------------------------
    def evaluate(self, r):
        """(Omega, Omega', W) at the radii r."""
        r = np.asarray(r, dtype=float)
        return self.omega(r), self.omega_p(r), self.w(r)

    def phi(self, r):
        """Rayleigh function Phi = 2 Omega W."""
        return 2.0 * self.omega(r) * self.w(r)

    def phi_p(self, r):
        return 2.0 * (self.omega_p(r) * self.w(r) + self.omega(r) * self.w_p(r))

    def J(self, r):
        """Richardson-type function J = Phi / Omega'^2 (r > 0)."""
        op = self.omega_p(r)
        return self.phi(r) / op ** 2

    def J_p(self, r):
        """J' = (Phi' Omega' - 2 Phi Omega'') / Omega'^3."""
        op = self.omega_p(r)
        return (self.phi_p(r) * op - 2.0 * self.phi(r) * self.omega_pp(r)) / op ** 3

    def r_omega_p_sup(self, r_max=50.0, n=20001) -> float:
        """sup_r |r Omega'(r)| estimated on a fine sample of (0, r_max]."""
        r = np.linspace(r_max / n, r_max, n)
        return float(np.max(np.abs(r * self.omega_p(r))))

    def __repr__(self):
        return f"<VortexProfile {self.name} ({self.form})>"


class LambOseen(VortexProfile):
    """Gaussian vortex: Omega = (1 - e^{-r^2})/r^2, W = 2 e^{-r^2}."""

    name = "lamb_oseen"

    def omega(self, r):
        r = np.asarray(r, dtype=float)
        r2 = r * r
        small = r < SERIES_RADIUS
        safe = np.where(small, 1.0, r2)
        out = -np.expm1(-safe) / safe
        ser = 1.0 - r2 / 2.0 + r2 * r2 / 6.0 - r2 ** 3 / 24.0
        return np.where(small, ser, out)

    def omega_p(self, r):
        r = np.asarray(r, dtype=float)
        small = r < SERIES_RADIUS
        safe = np.where(small, 1.0, r)
        out = (self.w(safe) - 2.0 * self.omega(safe)) / safe
        ser = -r + 2.0 * r ** 3 / 3.0 - r ** 5 / 4.0
        return np.where(small, ser, out)

    def omega_pp(self, r):
        r = np.asarray(r, dtype=float)
        small = r < SERIES_RADIUS
        safe = np.where(small, 1.0, r)
        out = (self.w_p(safe) - 3.0 * self.omega_p(safe)) / safe
        ser = -1.0 + 2.0 * r ** 2 - 1.25 * r ** 4
        return np.where(small, ser, out)

    def w(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 * np.exp(-r * r)

    def w_p(self, r):
        r = np.asarray(r, dtype=float)
        return -4.0 * r * np.exp(-r * r)


class KaufmannScully(VortexProfile):
    """Algebraic vortex: Omega = 1/(1 + r^2), W = 2/(1 + r^2)^2."""

    name = "kaufmann_scully"

    def omega(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 / (1.0 + r * r)

    def omega_p(self, r):
        r = np.asarray(r, dtype=float)
        return -2.0 * r / (1.0 + r * r) ** 2

    def omega_pp(self, r):
        r = np.asarray(r, dtype=float)
        return (6.0 * r * r - 2.0) / (1.0 + r * r) ** 3

    def w(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 / (1.0 + r * r) ** 2

    def w_p(self, r):
        r = np.asarray(r, dtype=float)
        return -8.0 * r / (1.0 + r * r) ** 3

    def J(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r * r) / (r * r)

    def J_p(self, r):
        r = np.asarray(r, dtype=float)
        return -2.0 / r ** 3


def lamb_oseen() -> VortexProfile:
    return LambOseen()


def kaufmann_scully() -> VortexProfile:
    return KaufmannScully()


BUILTINS: dict[str, Callable[[], VortexProfile]] = {
    "lamb_oseen": lamb_oseen,
    "kaufmann_scully": kaufmann_scully,
}


# ---------------------------------------------------------------------------
# tabulated profiles

class TabulatedProfile(VortexProfile):
    """Profile reconstructed from samples of W.

    The samples are reflected to negative radii (W is even, s W(s) odd) and
    interpolated by quintic splines; the exact antiderivative of the odd
    spline, started at the axis, gives r^2 Omega without cancellation.
    Beyond the last sample the vorticity is continued by a C/r^4 tail fitted
    on the last tenth of the table (decay compatible with r^3 W' -> 0);
    the tail contribution is added to Gamma analytically.
    """

    form = "tabulated"

    def __init__(self, r_table, w_table, name="tabulated"):
        super().__init__()
        self.name = name
        r = np.asarray(r_table, dtype=float)
        wv = np.asarray(w_table, dtype=float)
        if r[0] > 0:
            r = np.concatenate([[0.0], r])
            wv = np.concatenate([[wv[0]], wv])
        self.r_table = r
        self.w_table = wv
        self.r_end = float(r[-1])
        rr = np.concatenate([-r[:0:-1], r])
        k = 5 if r.size >= 6 else 3
        self._w = make_interp_spline(rr, np.concatenate([wv[:0:-1], wv]), k=k)
        self._wp = self._w.derivative()
        g = PPoly.from_spline(make_interp_spline(rr, np.concatenate([-(r * wv)[:0:-1], r * wv]), k=k))
        i0 = int(np.searchsorted(g.x, 0.0))
        self._G = PPoly(g.c[:, i0:], g.x[i0:]).antiderivative()
        self._w0 = float(wv[0])
        self._w2 = float(self._w.derivative(2)(0.0))
        # C / r^4 tail fitted on the last tenth of the sampled range
        sel = r >= 0.9 * self.r_end
        rr_, ww = r[sel], wv[sel]
        denom = np.sum(rr_ ** -8)
        self.tail_c = float(max(np.sum(ww * rr_ ** -4) / denom, 0.0)) if denom > 0 else 0.0
        self.gamma_inner = float(self._G(self.r_end))
        self.gamma_total = self.gamma_inner + self.tail_c / (2.0 * self.r_end ** 2)
        if abs(self._w0 - 2.0) > 1e-6:
            self.warnings.append(f"normalization W(0)=2 not met (W(0)={self._w0:.6g})")

    def _circ(self, r):
        """int_0^r W(s) s ds including the analytic tail beyond the table."""
        r = np.asarray(r, dtype=float)
        val = self._G(np.minimum(r, self.r_end))
        beyond = r > self.r_end
        if np.any(beyond):
            rb = np.where(beyond, r, self.r_end)
            extra = self.tail_c * (0.5 / self.r_end ** 2 - 0.5 / rb ** 2)
            val = val + np.where(beyond, extra, 0.0)
        return val

    def w(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_end, self._w(np.minimum(r, self.r_end)),
                        self.tail_c / np.maximum(r, self.r_end) ** 4)

    def w_p(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_end, self._wp(np.minimum(r, self.r_end)),
                        -4.0 * self.tail_c / np.maximum(r, self.r_end) ** 5)

    # near the axis: Omega = W0/2 + W''(0) r^2/8 + O(r^4)
    def omega(self, r):
        r = np.asarray(r, dtype=float)
        small = r < SERIES_RADIUS
        safe = np.where(small, 1.0, r)
        return np.where(small, 0.5 * self._w0 + self._w2 * r * r / 8.0,
                        self._circ(safe) / safe ** 2)

    def omega_p(self, r):
        r = np.asarray(r, dtype=float)
        small = r < SERIES_RADIUS
        safe = np.where(small, 1.0, r)
        out = (self.w(safe) - 2.0 * self.omega(safe)) / safe
        return np.where(small, self._w2 * r / 4.0, out)

    def omega_pp(self, r):
        r = np.asarray(r, dtype=float)
        small = r < SERIES_RADIUS
        safe = np.where(small, 1.0, r)
        out = (self.w_p(safe) - 3.0 * self.omega_p(safe)) / safe
        return np.where(small, self._w2 / 4.0 + 0.0 * r, out)


def omega_from_w(r_table, w_table, name="tabulated", strict=True) -> TabulatedProfile:
    """Build a profile from sampled vorticity values.

    With ``strict`` (default) negative or increasing samples raise
    :class:`AssumptionViolation` naming the first offending radius; with
    ``strict=False`` the profile is built anyway and the problem is left to
    :func:`check_assumptions`.
    """
    r = np.asarray(r_table, dtype=float)
    wv = np.asarray(w_table, dtype=float)
    if r.ndim != 1 or r.shape != wv.shape or r.size < 4:
        raise DomainError("w_table needs matching 1-D arrays with at least 4 samples")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise DomainError("radii must be nonnegative and strictly increasing")
    if strict:
        neg = np.nonzero(wv < 0)[0]
        if neg.size:
            raise AssumptionViolation(
                f"H1: negative vorticity at r={r[neg[0]]:.6g}")
        inc = np.nonzero(np.diff(wv) > 1e-12 * max(1.0, float(np.max(np.abs(wv)))))[0]
        if inc.size:
            raise AssumptionViolation(
                f"H1 (W' < 0): vorticity increases near r={r[inc[0]]:.6g}")
    return TabulatedProfile(r, wv, name=name)


def read_w_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column CSV (r, W); a non-numeric header row is skipped."""
    rs, ws = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rs.append(float(row[0]))
                ws.append(float(row[1]))
            except (ValueError, IndexError):
                if rs:
                    raise DomainError(f"malformed row in {path}: {row!r}")
    if not rs:
        raise DomainError(f"no data rows in {path}")
    return np.array(rs), np.array(ws)


def nonmonotone_example(n=2048, r_end=30.0) -> TabulatedProfile:
    """Counterexample: W = 2 e^{-r^2} (1 + 3r^2)/(1 + r^2) grows near the axis."""
    r = np.linspace(0.0, r_end, n)
    wv = 2.0 * np.exp(-r * r) * (1.0 + 3.0 * r * r) / (1.0 + r * r)
    return omega_from_w(r, wv, name="nonmonotone", strict=False)


# ---------------------------------------------------------------------------
# assumption checks

@dataclass
class ClauseResult:
    name: str
    status: str  # 'pass' | 'fail' | 'indeterminate' | 'reported'
    margin: float = float("nan")
    detail: str = ""
    location: float | None = None

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "reported")


@dataclass
class AssumptionReport:
    profile: str
    h1_pass: bool
    h2_pass: bool
    clauses: list[ClauseResult]
    worst_margin: float
    samples: list[tuple[float, float]] = field(default_factory=list)
    far_field: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.h1_pass and self.h2_pass

    def violations(self) -> list[ClauseResult]:
        return [c for c in self.clauses if not c.passed]

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "h1_pass": self.h1_pass,
            "h2_pass": self.h2_pass,
            "worst_margin": self.worst_margin,
            "clauses": [
                {"name": c.name, "status": c.status, "margin": c.margin,
                 "detail": c.detail, "location": c.location}
                for c in self.clauses
            ],
            "far_field": self.far_field,
            "samples": [list(s) for s in self.samples],
        }


def _decay_exponent(r, v):
    """Least-squares slope of log|v| against log r (NaN if unusable)."""
    ok = np.abs(v) > UNDERFLOW
    if ok.sum() < 3:
        return float("-inf")
    return float(np.polyfit(np.log(r[ok]), np.log(np.abs(v[ok])), 1)[0])


def _sign_clause(name, r, v, w_scale):
    """v < 0 wherever representable; exact zeros in an underflow tail are noted."""
    with np.errstate(invalid="ignore"):
        bad_eval = ~np.isfinite(v)
    if bad_eval.any():
        j = int(np.nonzero(bad_eval)[0][0])
        return ClauseResult(name, "indeterminate", detail="non-finite value",
                            location=float(r[j]))
    representable = w_scale > UNDERFLOW
    pos = np.nonzero((v >= 0) & representable)[0]
    ntail = int(np.sum(~representable))
    margin = float(-np.max(v[representable])) if representable.any() else float("nan")
    if pos.size:
        j = int(pos[0])
        return ClauseResult(name, "fail", margin=margin,
                            detail=f"{name} violated at r={r[j]:.6g} (value {v[j]:.3e})",
                            location=float(r[j]))
    detail = f"{ntail} samples in underflow tail" if ntail else ""
    return ClauseResult(name, "pass", margin=margin, detail=detail)


def check_assumptions(p: VortexProfile, r_samples=None) -> AssumptionReport:
    """Evaluate H1/H2 clauses on a sample of radii.

    Default sample: 400 log-spaced radii on [1e-3, 50].
    """
    r = np.logspace(-3, math.log10(50.0), 400) if r_samples is None else np.asarray(r_samples, float)
    if np.any(r <= 0):
        raise DomainError("samples must be positive")
    clauses: list[ClauseResult] = []
    w = p.w(r)
    wp = p.w_p(r)
    # H1: W'(0) = 0 -- only reported (slope of W' at the three smallest samples)
    slope = float(np.polyfit(r[:3], wp[:3], 1)[0])
    clauses.append(ClauseResult("h1_wprime_axis", "reported", margin=float(abs(wp[0])),
                                detail=f"W'(r) at smallest samples {wp[:3].tolist()}, fitted slope {slope:.4g}"))
    clauses.append(_sign_clause("h1_wprime_negative", r, wp, np.abs(w)))
    # r^3 W' -> 0 : decreasing magnitude on the last decade
    tail = r >= r[-1] / 10.0
    expo = _decay_exponent(r[tail], r[tail] ** 3 * wp[tail])
    r3 = np.abs(r ** 3 * wp)
    ok = expo < 0 and r3[-1] < 1e-2 * max(np.max(r3), 1e-300)
    clauses.append(ClauseResult("h1_r3_wprime_decay", "pass" if ok else "fail", margin=-expo,
                                detail=f"fitted exponent of |r^3 W'| on last decade: {expo:.3g}",
                                location=None if ok else float(r[-1])))
    gam = float(p.gamma_total)
    clauses.append(ClauseResult("h1_gamma_finite",
                                "pass" if np.isfinite(gam) and gam > 0 else "fail",
                                margin=gam, detail=f"Gamma = {gam:.12g}"))
    phi = p.phi(r)
    neg = np.nonzero(~(phi > 0) & (np.abs(w) > UNDERFLOW))[0]
    clauses.append(ClauseResult("h1_rayleigh_positive", "fail" if neg.size else "pass",
                                margin=float(np.min(phi[np.abs(w) > UNDERFLOW])) if np.any(np.abs(w) > UNDERFLOW) else float("nan"),
                                location=float(r[neg[0]]) if neg.size else None))
    h1 = all(c.passed for c in clauses)
    # H2
    jp = p.J_p(r)
    c_j = _sign_clause("h2_jprime_negative", r, jp, np.abs(w))
    clauses.append(c_j)
    rjp = r * jp
    expo_j = _decay_exponent(r[tail], rjp[tail])
    ok_j = expo_j < 0
    clauses.append(ClauseResult("h2_r_jprime_decay", "pass" if ok_j else "fail", margin=-expo_j,
                                detail=f"fitted decay exponent of |r J'| on last decade: {expo_j:.3g}"))
    h2 = c_j.passed and ok_j
    margins = [c.margin for c in clauses if c.status in ("pass", "fail") and np.isfinite(c.margin)]
    # far-field flags at r = 50
    rf = np.array([50.0])
    far = {
        "r": 50.0,
        "r2_omega_over_gamma": float(rf[0] ** 2 * p.omega(rf)[0] / gam),
        "r3_omegap_over_m2gamma": float(rf[0] ** 3 * p.omega_p(rf)[0] / (-2 * gam)),
        "r4_omegapp_over_6gamma": float(rf[0] ** 4 * p.omega_pp(rf)[0] / (6 * gam)),
    }
    return AssumptionReport(
        profile=p.name, h1_pass=h1, h2_pass=h2, clauses=clauses,
        worst_margin=float(min(margins)) if margins else float("nan"),
        samples=[(float(a), float(b)) for a, b in zip(r[::40], wp[::40])],
        far_field=far,
    )
