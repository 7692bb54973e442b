"""Modified Bessel functions.

Integer orders with real positive argument are evaluated by a dedicated
kernel (compiled if available, NumPy otherwise).  Complex order and argument
are handled through the integral representation

    K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt ,   Re z > 0,

and, for the left half plane, through the connection formula with I_nu.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma_fn

from .errors import AccuracyError, DomainError, ScaledRepresentationError

if os.environ.get("VORTEXSTAB_PURE_PYTHON", "") not in ("", "0"):
    from ._bessel_fallback import ik_scaled as _ik_scaled
    BACKEND = "python"
else:
    try:
        from ._bessel_core import ik_scaled as _ik_scaled
        BACKEND = "compiled"
    except ImportError:  # extension not built
        from ._bessel_fallback import ik_scaled as _ik_scaled
        BACKEND = "python"

#: largest argument for which the unscaled I_m is representable
X_OVERFLOW = 700.0


@dataclass(frozen=True)
class BesselPair:
    """Values of I_m, K_m and their derivatives at one point.

    If ``scaled`` is true, ``I`` and ``I_prime`` carry a factor e^{-x} and
    ``K`` and ``K_prime`` a factor e^{x}; the Wronskian is unaffected.
    """

    order: int
    argument: float
    I: float
    K: float
    I_prime: float
    K_prime: float
    scaled: bool = False

    def wronskian(self) -> float:
        """K I' - K' I (equals 1/x)."""
        return self.K * self.I_prime - self.K_prime * self.I


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("modified Bessel functions need a finite argument x > 0")
    return x


def bessel_ik_array(m: int, x, scaled: bool = True):
    """Vectorized (I_m, K_m, I_m', K_m') on an array of positive reals.

    Negative orders are folded (I_{-m} = I_m, K_{-m} = K_m).  With
    ``scaled=True`` (default) the exponentially scaled values are returned.
    """
    x = _check_x(x)
    ie, ke, iep, kep = _ik_scaled(abs(int(m)), x)
    if scaled:
        return ie, ke, iep, kep
    if np.any(x > X_OVERFLOW):
        raise ScaledRepresentationError(
            f"I_{m}(x) overflows for x > {X_OVERFLOW}; request scaled values")
    ex = np.exp(x)
    return ie * ex, ke / ex, iep * ex, kep / ex


def bessel_IK(m: int, x: float) -> BesselPair:
    """I_m(x), K_m(x) and derivatives for integer m and x > 0."""
    x = float(_check_x(x))
    if x > X_OVERFLOW:
        raise ScaledRepresentationError(
            f"I_{m}({x}) is not representable; use bessel_IK_scaled")
    I, K, Ip, Kp = (float(np.ravel(v)[0]) for v in bessel_ik_array(m, x, scaled=False))
    return BesselPair(abs(int(m)), x, I, K, Ip, Kp, scaled=False)


def bessel_IK_scaled(m: int, x: float) -> BesselPair:
    """Exponentially scaled pair e^{-x}I_m, e^{x}K_m (any x > 0)."""
    x = float(_check_x(x))
    I, K, Ip, Kp = (float(np.ravel(v)[0]) for v in bessel_ik_array(m, x, scaled=True))
    return BesselPair(abs(int(m)), x, I, K, Ip, Kp, scaled=True)


# ---------------------------------------------------------------------------
# complex order / argument

def _truncation_point(nu: complex, z: complex, drop: float = 1e-18) -> float:
    """Upper limit T beyond which |exp(-z cosh t) cosh(nu t)| < drop * peak.

    Uses the bound |cosh(nu t)| <= cosh(Re(nu) t); with u = cosh t the
    exponent is -Re(z) u, so the integrand is double-exponentially small
    once Re(z) u exceeds the peak level by log(1/drop).
    """
    rz = z.real
    an = abs(nu.real)
    t = np.linspace(0.0, 60.0, 6001)
    with np.errstate(over="ignore"):
        logmag = -rz * np.cosh(t) + an * t + np.log1p(np.exp(-2 * an * t)) - math.log(2.0)
    peak = np.max(logmag)
    ipk = int(np.argmax(logmag))
    level = peak + math.log(drop)
    below = np.nonzero(logmag[ipk:] < level)[0]
    if below.size == 0:
        raise AccuracyError("integrand of K_nu does not decay on [0, 60]")
    return float(t[ipk + below[0]])


def bessel_K_general(nu: complex, z: complex, rtol: float = 1e-13, max_refinements: int = 14) -> complex:
    """K_nu(z) for complex nu and Re z > 0 via the cosh integral.

    The integrand is even and analytic in t, so the trapezoidal rule on the
    truncated interval converges geometrically; the step is halved until two
    successive estimates agree to ``rtol`` (at most ``max_refinements``
    halvings).  A failure to converge raises :class:`AccuracyError` with the
    last estimate.
    """
    nu = complex(nu)
    z = complex(z)
    if not z.real > 0:
        raise DomainError("bessel_K_general requires Re z > 0")
    T = _truncation_point(nu, z)

    def f(t):
        return np.exp(-z * np.cosh(t)) * np.cosh(nu * t)

    npan = 32
    prev = None
    err = float("inf")
    for _ in range(max(int(max_refinements), 1)):
        t = np.linspace(0.0, T, npan + 1)
        y = f(t)
        h = T / npan
        est = h * (0.5 * y[0] + y[1:-1].sum() + 0.5 * y[-1])
        if prev is not None:
            err = abs(est - prev)
            if err <= rtol * abs(est) or err < 1e-300:
                return complex(est)
        prev = est
        npan *= 2
    raise AccuracyError(f"K_nu quadrature did not converge (nu={nu}, z={z})",
                        estimate=complex(est), error=float(err))


def bessel_I_general(nu: complex, z: complex, tol: float = 1e-17) -> complex:
    """I_nu(z) by its power series (principal branch); moderate |z| only."""
    nu = complex(nu)
    z = complex(z)
    if z == 0:
        return complex(1.0 if nu == 0 else 0.0)
    half = 0.5 * z
    q = half * half
    term = np.exp(nu * np.log(half)) / _gamma_fn(nu + 1.0)
    total = term
    for j in range(1, 500):
        term = term * q / (j * (j + nu))
        total += term
        if abs(term) < tol * abs(total):
            return complex(total)
    raise AccuracyError("I_nu series did not converge", estimate=complex(total))


def bessel_K_continued(nu: complex, z: complex) -> complex:
    """K_nu(z) on the principal branch, including the left half plane.

    For Re z > 0 this is :func:`bessel_K_general`.  For Re z < 0 the
    connection formula K_nu(w) = e^{-/+ i pi nu} K_nu(-w) -/+ i pi I_nu(-w)
    (upper/lower half plane) is used; on the imaginary axis the combination
    pi/2 (I_{-nu} - I_nu)/sin(nu pi) is used (non-integer nu only).
    """
    nu = complex(nu)
    z = complex(z)
    if z.real > 0:
        return bessel_K_general(nu, z)
    if z.imag == 0:
        raise DomainError("K_nu is not defined on the branch cut z <= 0")
    if z.real < 0:
        w = -z
        if z.imag > 0:
            return np.exp(-1j * np.pi * nu) * bessel_K_general(nu, w) - 1j * np.pi * bessel_I_general(nu, w)
        return np.exp(1j * np.pi * nu) * bessel_K_general(nu, w) + 1j * np.pi * bessel_I_general(nu, w)
    s = np.sin(nu * np.pi)
    if abs(s) < 1e-6:
        raise DomainError("imaginary-axis evaluation needs non-integer order")
    return complex(0.5 * np.pi * (bessel_I_general(-nu, z) - bessel_I_general(nu, z)) / s)


# ---------------------------------------------------------------------------
# asymptotic diagnostics

@dataclass(frozen=True)
class AsymptoticReport:
    order: int
    regime: str
    samples: np.ndarray
    ratio_I: np.ndarray
    ratio_K: np.ndarray

    @property
    def max_dev_I(self) -> float:
        return float(np.max(np.abs(self.ratio_I - 1.0)))

    @property
    def max_dev_K(self) -> float:
        return float(np.max(np.abs(self.ratio_K - 1.0)))

    def deviation_at(self, r: float):
        """(|ratio_I - 1|, |ratio_K - 1|) at the sample closest to r."""
        j = int(np.argmin(np.abs(np.log(self.samples / r))))
        return abs(self.ratio_I[j] - 1.0), abs(self.ratio_K[j] - 1.0)


def asymptotic_check(m: int, regime: str, samples=None) -> AsymptoticReport:
    """Ratios of I_m, K_m to their leading small- or large-argument forms.

    regime 'zero':  I_m ~ (r/2)^m/m!,  K_m ~ ((m-1)!/2)(2/r)^m  (m >= 1),
                    I_0 ~ 1, K_0 ~ -log r.
    regime 'infinity':  I_m ~ e^r/sqrt(2 pi r),  K_m ~ sqrt(pi/2) e^{-r}/sqrt(r).
    """
    m = abs(int(m))
    if regime == "zero":
        r = np.logspace(-8, -2, 25) if samples is None else np.asarray(samples, float)
        I, K, _, _ = bessel_ik_array(m, r, scaled=False)
        if m == 0:
            aI = np.ones_like(r)
            aK = -np.log(r)
        else:
            aI = (r / 2.0) ** m / math.factorial(m)
            aK = 0.5 * math.factorial(m - 1) * (2.0 / r) ** m
        return AsymptoticReport(m, regime, r, I / aI, K / aK)
    if regime == "infinity":
        r = np.logspace(1, 4, 25) if samples is None else np.asarray(samples, float)
        ie, ke, _, _ = bessel_ik_array(m, r, scaled=True)
        # compare in scaled form: e^{-r} I vs 1/sqrt(2 pi r); e^{r} K vs sqrt(pi/(2r))
        return AsymptoticReport(m, regime, r, ie * np.sqrt(2 * np.pi * r),
                                ke / np.sqrt(np.pi / (2 * r)))
    raise DomainError(f"unknown regime {regime!r}")
