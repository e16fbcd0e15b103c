"""Pure numpy versions of the routines in ``_kernels.pyx``.

Same signatures and the same arithmetic, vectorised over evaluation points.
Sums run over every data point (no window), so results agree with the
compiled backend to rounding.
"""
import numpy as np
from scipy.special import ndtr

_RSQRT2PI = 0.39894228040143267794
_BLOCK = 256


def _blocks(q):
    for start in range(0, q.shape[0], _BLOCK):
        yield slice(start, start + _BLOCK)


def cdf(x, w, cw, h, q):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.empty(q.shape[0])
    for sl in _blocks(q):
        z = (q[sl, None] - x[None, :]) / h
        out[sl] = ndtr(z) @ w
    return out / cw[-1]


def density(x, w, cw, h, q):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    tot = cw[-1]
    F = np.empty(q.shape[0])
    f = np.empty(q.shape[0])
    d = np.empty(q.shape[0])
    for sl in _blocks(q):
        z = (q[sl, None] - x[None, :]) / h
        e = np.exp(-0.5 * z * z)
        F[sl] = ndtr(z) @ w / tot
        f[sl] = e @ w * _RSQRT2PI / (h * tot)
        d[sl] = -(e * z) @ w * _RSQRT2PI / (h * h * tot)
    return F, f, d


def _hermite_guess(a, q0, q1, F0, F1, f0, f1):
    d = q1 - q0
    span = F1 - F0
    t = np.where(span > 0, (a - F0) / np.where(span > 0, span, 1.0), 0.5)
    for _ in range(4):
        t2 = t * t
        t3 = t2 * t
        H = ((2 * t3 - 3 * t2 + 1) * F0 + (t3 - 2 * t2 + t) * d * f0
             + (-2 * t3 + 3 * t2) * F1 + (t3 - t2) * d * f1)
        dH = ((6 * t2 - 6 * t) * F0 + (3 * t2 - 4 * t + 1) * d * f0
              + (-6 * t2 + 6 * t) * F1 + (3 * t2 - 2 * t) * d * f1)
        ok = dH > 0
        t = np.where(ok, t - (H - a) / np.where(ok, dH, 1.0), t)
        t = np.clip(t, 0.0, 1.0)
    return q0 + t * d


def quantile(x, w, cw, h, alpha, lo, hi, tq, tF, tf, tol):
    alpha = np.asarray(alpha, dtype=float)
    tq = np.asarray(tq)
    tF = np.asarray(tF)
    tf = np.asarray(tf)
    out = np.empty(alpha.shape[0])
    below = alpha <= tF[0]
    above = alpha > tF[-1]
    out[below] = lo
    out[above] = hi
    idx = np.flatnonzero(~below & ~above)
    if idx.size == 0:
        return out
    a = alpha[idx]
    a1 = np.searchsorted(tF, a, side="left")
    a0 = a1 - 1
    A = tq[a0].copy()
    B = tq[a1].copy()
    xc = _hermite_guess(a, tq[a0], tq[a1], tF[a0], tF[a1], tf[a0], tf[a1])
    res = np.full(a.shape[0], np.nan)
    active = np.ones(a.shape[0], dtype=bool)
    for _ in range(200):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        F, f, df = density(x, w, cw, h, xc[act])
        g = F - a[act]
        pos = g >= 0
        B[act] = np.where(pos, xc[act], B[act])
        A[act] = np.where(pos, A[act], xc[act])
        xn = 0.5 * (A[act] + B[act])
        done = B[act] - A[act] <= tol
        res[act[done]] = B[act[done]]
        den = 2.0 * f * f - g * df
        fpos = f > 0
        safe_f = np.where(fpos, f, 1.0)
        step = np.where(den > 0, 2.0 * g * f / np.where(den > 0, den, 1.0), g / safe_f)
        small = fpos & ~done & (np.abs(step) <= 1e-2 * tol)
        nudge = np.minimum(xc[act] + np.maximum(2.0 * np.abs(step), 1e-3 * tol), B[act])
        res[act[small]] = np.where(pos, xc[act], nudge)[small]
        cand = xc[act] - step
        inside = fpos & (cand > A[act]) & (cand < B[act])
        xc[act] = np.where(inside, cand, xn)
        active[act[done | small]] = False
    left = np.isnan(res)
    res[left] = B[left]
    out[idx] = res
    return out


def cv_scores(x, hs, grid, qw):
    x = np.asarray(x, dtype=float)
    grid = np.asarray(grid, dtype=float)
    qw = np.asarray(qw, dtype=float)
    n = x.shape[0]
    ind = (x[None, :] <= grid[:, None]).astype(float)
    out = np.empty(len(hs))
    for k, h in enumerate(hs):
        c = ndtr((grid[:, None] - x[None, :]) / h)
        nF = c.sum(axis=1, keepdims=True)
        diff = ind - (nF - c) / (n - 1)
        out[k] = qw @ (diff * diff).sum(axis=1) / n
    return out
