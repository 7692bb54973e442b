"""Pure NumPy kernel for exponentially scaled modified Bessel functions.

This is the reference implementation used when the compiled extension
``_bessel_core`` is not available.  Both implementations follow the same
algorithm, so they agree to rounding:

* K_0, K_1 from Temme's series for x <= 2 and from Steed's continued
  fraction (Temme's CF2) for x > 2;
* upward recurrence K_0, K_1 -> K_m (stable for K);
* the ratio I_m'/I_m from the continued fraction CF1 (modified Lentz);
* I_m from the Wronskian  K_m I_m' - K_m' I_m = 1/x.

All quantities are returned in scaled form: e^{-x} I_m, e^{x} K_m and the
same factors applied to the derivatives.
"""

import numpy as np

EULER_GAMMA = 0.57721566490153286061
EPS = 1e-16
FPMIN = 1e-300
MAXIT = 100000
X_SWITCH = 2.0


def _k01_small(x):
    """Temme series for K_0, K_1 (unscaled) on x <= 2."""
    x = np.asarray(x, dtype=float)
    d = -np.log(0.5 * x)
    ff = d - EULER_GAMMA
    s0 = ff.copy()
    p = np.full_like(x, 0.5)
    q = np.full_like(x, 0.5)
    c = np.ones_like(x)
    x2 = 0.25 * x * x
    s1 = p.copy()
    for i in range(1, 60):
        ff = (i * ff + p + q) / (i * i)
        c = c * x2 / i
        p = p / i
        q = q / i
        d0 = c * ff
        s0 = s0 + d0
        s1 = s1 + c * (p - i * ff)
        if np.all(np.abs(d0) < np.abs(s0) * EPS):
            break
    return s0, s1 * 2.0 / x


def _k01_large_scaled(x):
    """Steed/Temme CF2 for e^x K_0, e^x K_1 on x > 2."""
    x = np.asarray(x, dtype=float)
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    done = np.zeros(x.shape, dtype=bool)
    for i in range(2, MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(done, h, h + delh)
        dels = q * delh
        s = np.where(done, s, s + dels)
        done |= np.abs(dels / s) < EPS
        if done.all():
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _cf1(m, x):
    """Continued fraction for I_m'(x)/I_m(x)."""
    x = np.asarray(x, dtype=float)
    xi = 1.0 / x
    xi2 = 2.0 * xi
    h = np.maximum(m * xi, FPMIN)
    b = xi2 * m
    d = np.zeros_like(x)
    c = h.copy()
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(MAXIT):
        b = b + xi2
        d = 1.0 / (b + d)
        c = b + 1.0 / c
        dl = c * d
        h = np.where(done, h, h * dl)
        done |= np.abs(dl - 1.0) < EPS
        if done.all():
            break
    return h


def ik_scaled(m, x):
    """Return (e^{-x}I_m, e^{x}K_m, e^{-x}I_m', e^{x}K_m') for integer m >= 0.

    ``x`` may be any array of positive reals.
    """
    m = abs(int(m))
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    ke0 = np.empty_like(x)
    ke1 = np.empty_like(x)
    small = x <= X_SWITCH
    if small.any():
        xs = x[small]
        k0, k1 = _k01_small(xs)
        ex = np.exp(xs)
        ke0[small] = k0 * ex
        ke1[small] = k1 * ex
    if (~small).any():
        k0, k1 = _k01_large_scaled(x[~small])
        ke0[~small] = k0
        ke1[~small] = k1
    # upward recurrence for K
    if m == 0:
        km, kmp = ke0, -ke1
    else:
        kprev, kcur = ke0, ke1
        for j in range(1, m):
            kprev, kcur = kcur, kprev + (2.0 * j / x) * kcur
        km = kcur
        kmp = -kprev - (m / x) * kcur
    f = _cf1(m, x)
    ie = (1.0 / x) / (f * km - kmp)
    iep = f * ie
    return (ie.reshape(shape), km.reshape(shape),
            iep.reshape(shape), kmp.reshape(shape))
