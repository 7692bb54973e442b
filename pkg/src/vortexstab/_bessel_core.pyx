# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for exponentially scaled modified Bessel functions.

Same algorithm as ``_bessel_fallback`` (Temme series / Steed CF2 for K_0,
K_1, upward recurrence for K_m, CF1 plus the Wronskian for I_m), evaluated
element by element without temporaries.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, sqrt, fabs, M_PI

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double EPS = 1e-16
cdef double FPMIN = 1e-300
cdef int MAXIT = 100000


cdef void _k01(double x, double *ke0, double *ke1) nogil:
    cdef double d, ff, s0, s1, p, q, c, x2, d0, ex
    cdef double b, h, delh, q1, q2, a1, qq, cc, a, s, qnew, dels
    cdef int i
    if x <= 2.0:
        d = -log(0.5 * x)
        ff = d - EULER_GAMMA
        s0 = ff
        p = 0.5
        q = 0.5
        c = 1.0
        x2 = 0.25 * x * x
        s1 = p
        for i in range(1, 60):
            ff = (i * ff + p + q) / (i * i)
            c = c * x2 / i
            p = p / i
            q = q / i
            d0 = c * ff
            s0 = s0 + d0
            s1 = s1 + c * (p - i * ff)
            if fabs(d0) < fabs(s0) * EPS:
                break
        ex = exp(x)
        ke0[0] = s0 * ex
        ke1[0] = s1 * 2.0 / x * ex
        return
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    qq = a1
    cc = a1
    a = -a1
    s = 1.0 + qq * delh
    for i in range(2, MAXIT):
        a -= 2 * (i - 1)
        cc = -a * cc / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        qq += cc * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = qq * delh
        s += dels
        if fabs(dels / s) < EPS:
            break
    h = a1 * h
    ke0[0] = sqrt(M_PI / (2.0 * x)) / s
    ke1[0] = ke0[0] * (x + 0.5 - h) / x


cdef double _cf1(int m, double x) nogil:
    cdef double xi = 1.0 / x
    cdef double xi2 = 2.0 * xi
    cdef double h = m * xi
    cdef double b, d, c, dl
    cdef int i
    if h < FPMIN:
        h = FPMIN
    b = xi2 * m
    d = 0.0
    c = h
    for i in range(MAXIT):
        b += xi2
        d = 1.0 / (b + d)
        c = b + 1.0 / c
        dl = c * d
        h *= dl
        if fabs(dl - 1.0) < EPS:
            break
    return h


def ik_scaled(int m, x):
    """Return (e^{-x}I_m, e^{x}K_m, e^{-x}I_m', e^{x}K_m') for integer m >= 0."""
    if m < 0:
        m = -m
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] xv = arr.ravel()
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t idx
    cdef int j
    cdef double xx, k0, k1, kprev, kcur, knext, km, kmp, f, ie
    with nogil:
        for idx in range(n):
            xx = xv[idx]
            _k01(xx, &k0, &k1)
            if m == 0:
                km = k0
                kmp = -k1
            else:
                kprev = k0
                kcur = k1
                for j in range(1, m):
                    knext = kprev + (2.0 * j / xx) * kcur
                    kprev = kcur
                    kcur = knext
                km = kcur
                kmp = -kprev - (m / xx) * kcur
            f = _cf1(m, xx)
            ie = (1.0 / xx) / (f * km - kmp)
            o[0, idx] = ie
            o[1, idx] = km
            o[2, idx] = f * ie
            o[3, idx] = kmp
    return (out[0].reshape(shape), out[1].reshape(shape),
            out[2].reshape(shape), out[3].reshape(shape))
