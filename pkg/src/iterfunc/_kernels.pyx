# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gaussian kernel sums.

All routines take the sorted data ``x``, the matching weights ``w`` and the
cumulative weights ``cw`` (length n + 1, ``cw[0] = 0``). Points further than
``CUT`` bandwidths from the evaluation point are summed through ``cw``: their
normal CDF is 0 or 1 to within 1e-15.
"""
import numpy as np

from libc.math cimport erfc, exp, fabs
from libc.stdlib cimport free, malloc

cdef double CUT = 8.0
cdef double RSQRT2 = 0.70710678118654752440
cdef double RSQRT2PI = 0.39894228040143267794


cdef inline double _ncdf(double z) noexcept nogil:
    return 0.5 * erfc(-z * RSQRT2)


cdef inline Py_ssize_t _first_ge(const double[::1] x, Py_ssize_t n, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _first_gt(const double[::1] x, Py_ssize_t n, double v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _cdf1(const double[::1] x, const double[::1] w, const double[::1] cw,
                         Py_ssize_t n, double h, double q) noexcept nogil:
    cdef double reach = CUT * h
    cdef Py_ssize_t lo = _first_ge(x, n, q - reach)
    cdef Py_ssize_t hi = _first_gt(x, n, q + reach)
    cdef double s = cw[lo]
    cdef Py_ssize_t i
    for i in range(lo, hi):
        s += w[i] * _ncdf((q - x[i]) / h)
    return s / cw[n]


cdef inline void _all1(const double[::1] x, const double[::1] w, const double[::1] cw,
                       Py_ssize_t n, double h, double q,
                       double* F, double* f, double* df) noexcept nogil:
    cdef double reach = CUT * h
    cdef Py_ssize_t lo = _first_ge(x, n, q - reach)
    cdef Py_ssize_t hi = _first_gt(x, n, q + reach)
    cdef double sF = cw[lo], sf = 0.0, sd = 0.0, z, e
    cdef Py_ssize_t i
    for i in range(lo, hi):
        z = (q - x[i]) / h
        e = w[i] * exp(-0.5 * z * z)
        sF += w[i] * _ncdf(z)
        sf += e
        sd -= e * z
    F[0] = sF / cw[n]
    f[0] = sf * RSQRT2PI / (h * cw[n])
    df[0] = sd * RSQRT2PI / (h * h * cw[n])


def cdf(const double[::1] x, const double[::1] w, const double[::1] cw, double h,
        const double[::1] q):
    cdef Py_ssize_t n = x.shape[0], m = q.shape[0], j
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for j in range(m):
            o[j] = _cdf1(x, w, cw, n, h, q[j])
    return out


def density(const double[::1] x, const double[::1] w, const double[::1] cw, double h,
            const double[::1] q):
    """Return (cdf, density, density derivative) at each point."""
    cdef Py_ssize_t n = x.shape[0], m = q.shape[0], j
    F = np.empty(m)
    f = np.empty(m)
    d = np.empty(m)
    cdef double[::1] oF = F, of = f, od = d
    with nogil:
        for j in range(m):
            _all1(x, w, cw, n, h, q[j], &oF[j], &of[j], &od[j])
    return F, f, d


cdef inline double _hermite_guess(double a, double q0, double q1, double F0, double F1,
                                  double f0, double f1) noexcept nogil:
    # invert the cubic Hermite interpolant of F on [q0, q1]
    cdef double d = q1 - q0, t, t2, t3, H, dH
    cdef int k
    if F1 > F0:
        t = (a - F0) / (F1 - F0)
    else:
        t = 0.5
    for k in range(4):
        t2 = t * t
        t3 = t2 * t
        H = ((2 * t3 - 3 * t2 + 1) * F0 + (t3 - 2 * t2 + t) * d * f0
             + (-2 * t3 + 3 * t2) * F1 + (t3 - t2) * d * f1)
        dH = ((6 * t2 - 6 * t) * F0 + (3 * t2 - 4 * t + 1) * d * f0
              + (-6 * t2 + 6 * t) * F1 + (3 * t2 - 2 * t) * d * f1)
        if dH <= 0:
            break
        t -= (H - a) / dH
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    return q0 + t * d


cdef double _solve1(const double[::1] x, const double[::1] w, const double[::1] cw,
                    Py_ssize_t n, double h, double a, double A, double B,
                    double guess, double tol) noexcept nogil:
    # safeguarded Halley iteration; invariant F(A) < a <= F(B)
    cdef double xc = guess, F, f, df, g, den, step, xn
    cdef int it
    for it in range(200):
        _all1(x, w, cw, n, h, xc, &F, &f, &df)
        g = F - a
        if g >= 0:
            B = xc
        else:
            A = xc
        if B - A <= tol:
            return B
        xn = 0.5 * (A + B)
        if f > 0:
            den = 2.0 * f * f - g * df
            if den > 0:
                step = 2.0 * g * f / den
            else:
                step = g / f
            if fabs(step) <= 1e-2 * tol:
                if g >= 0:
                    return xc
                step = 2.0 * fabs(step)
                if step < 1e-3 * tol:
                    step = 1e-3 * tol
                return min(xc + step, B)
            if A < xc - step < B:
                xn = xc - step
        xc = xn
    return B


def quantile(const double[::1] x, const double[::1] w, const double[::1] cw, double h,
             const double[::1] alpha, double lo, double hi,
             const double[::1] tq, const double[::1] tF, const double[::1] tf,
             double tol):
    """Smallest q in [lo, hi] with F(q) >= alpha, to within ``tol``.

    ``tq`` is an increasing node table on [lo, hi] with the CDF values ``tF``
    and densities ``tf`` at the nodes; it supplies brackets and start values.
    """
    cdef Py_ssize_t n = x.shape[0], m = alpha.shape[0], nt = tq.shape[0]
    cdef Py_ssize_t j, k, a0, a1, mid
    cdef double a, g
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for j in range(m):
            a = alpha[j]
            if a <= tF[0]:
                o[j] = lo
                continue
            if a > tF[nt - 1]:
                o[j] = hi
                continue
            a0 = 0
            a1 = nt - 1
            while a1 - a0 > 1:
                mid = (a0 + a1) >> 1
                if tF[mid] < a:
                    a0 = mid
                else:
                    a1 = mid
            g = _hermite_guess(a, tq[a0], tq[a1], tF[a0], tF[a1], tf[a0], tf[a1])
            o[j] = _solve1(x, w, cw, n, h, a, tq[a0], tq[a1], g, tol)
    return out


def cv_scores(const double[::1] x, const double[::1] hs, const double[::1] grid,
              const double[::1] qw):
    """Leave-one-out integrated squared CDF error for each bandwidth.

    ``grid`` holds quadrature nodes with weights ``qw``. Unit weights only.
    """
    cdef Py_ssize_t n = x.shape[0], M = grid.shape[0], nh = hs.shape[0]
    cdef Py_ssize_t a, m, i, lo, hi
    cdef double h, t, reach, F, nF, s, c, diff, total
    cdef double dn = <double>n, dn1 = <double>(n - 1)
    out = np.empty(nh)
    cdef double[::1] o = out
    cdef double* buf = <double*>malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for a in range(nh):
                h = hs[a]
                reach = CUT * h
                total = 0.0
                for m in range(M):
                    t = grid[m]
                    lo = _first_ge(x, n, t - reach)
                    hi = _first_gt(x, n, t + reach)
                    s = <double>lo
                    for i in range(lo, hi):
                        c = _ncdf((t - x[i]) / h)
                        buf[i - lo] = c
                        s += c
                    F = s / dn
                    nF = dn * F
                    # points far below t: indicator 1 and kernel CDF 1
                    diff = dn * (1.0 - F) / dn1
                    s = lo * diff * diff
                    # points far above t: both 0
                    diff = nF / dn1
                    s += (n - hi) * diff * diff
                    for i in range(lo, hi):
                        c = buf[i - lo]
                        diff = (1.0 if x[i] <= t else 0.0) - (nF - c) / dn1
                        s += diff * diff
                    total += qw[m] * s
                o[a] = total / dn
    finally:
        free(buf)
    return out
