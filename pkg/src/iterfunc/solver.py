"""Truncated-series solution of Lambda(beta(alpha)) - Lambda(alpha) = r(alpha)."""
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import isotonic_regression

from .config import EstimationConfig
from .orientation import Orientation, detect_orientation

DEFAULT_ANALYTIC_N = 10**6


@dataclass(frozen=True)
class SegmentMap:
    """beta and r for one segment: base/other distributions and the price gap."""

    base: object
    other: object
    tau_base: float
    tau_other: float
    sched_base: object
    sched_other: object
    q_floor: float | None
    q_ceil: float | None = None
    empirical_start: bool = False

    def start_quantity(self, alpha):
        """Quantity at which the series starts (k = 0)."""
        if not self.empirical_start:
            return self.quantity(alpha)
        q = np.asarray(self.base.empirical_quantile(np.asarray(alpha, dtype=float)), dtype=float)
        return self._restrict(q)

    def quantity(self, alpha):
        """Base quantile restricted to ``[q_floor, q_ceil]``."""
        q = np.asarray(self.base.quantile(np.asarray(alpha, dtype=float)), dtype=float)
        return self._restrict(q)

    def _restrict(self, q):
        if self.q_floor is not None:
            q = np.maximum(q, self.q_floor)
        if self.q_ceil is not None:
            q = np.minimum(q, self.q_ceil)
        return q

    def r_at(self, q):
        r = (self.tau_other * self.sched_other.deriv(q)
             - self.tau_base * self.sched_base.deriv(q))
        if self.q_floor is not None:
            r = np.where(q <= self.q_floor, 0.0, r)
        return r

    def beta_at(self, q):
        return np.clip(np.asarray(self.other.cdf(q), dtype=float), 0.0, 1.0)

    def r(self, alpha):
        return self.r_at(self.start_quantity(alpha))

    def beta(self, alpha):
        return self.beta_at(self.start_quantity(alpha))


def run_series(alpha, smap, n_iter=None, tol=1e-10, cap=100):
    """Sum ``r(beta^(k)(alpha))`` for k = 0..N.

    Without ``n_iter``, N is the first k at which the variance of
    ``beta^(k)`` across ``alpha`` falls below ``tol``, or ``cap``.
    The k = 0 term is evaluated at ``smap.start_quantity``; later terms at
    the smoothed base quantile of the iterate. Points whose iterate stops
    moving exactly are frozen: every later term
    repeats their last ``r`` value, so they are accounted for in closed form.

    Returns ``(sum_r, N, converged, beta_N)``.
    """
    a = np.array(alpha, dtype=float, copy=True)
    m = a.size
    total = np.zeros(m)
    frozen_at = np.zeros(m, dtype=np.int64)
    frozen_r = np.zeros(m)
    frozen = np.zeros(m, dtype=bool)
    act = np.arange(m)
    k = 0
    converged = True
    while True:
        if act.size:
            q = smap.start_quantity(a[act]) if k == 0 else smap.quantity(a[act])
            r = smap.r_at(q)
            total[act] += r
        if n_iter is not None:
            if k >= n_iter:
                break
        else:
            if m < 2 or np.var(a) < tol:
                break
            if k >= cap:
                converged = False
                break
        if act.size:
            b = smap.beta_at(q)
            same = b == a[act]
            if same.any():
                idx = act[same]
                frozen[idx] = True
                frozen_at[idx] = k
                frozen_r[idx] = r[same]
            a[act] = b
            act = act[~same]
        k += 1
    total[frozen] += frozen_r[frozen] * (k - frozen_at[frozen])
    return total, k, converged, a


@dataclass(frozen=True, eq=False)
class QuantileSolution:
    """Estimate of Lambda on an alpha grid with its diagnostics.

    Calling the solution interpolates on the grid with a monotone cubic
    (PCHIP), extends linearly through the origin below the grid
    (Lambda(0) = 0) and holds the last value above it. :meth:`series`
    re-evaluates the truncated series at arbitrary levels with the same
    number of iterations.
    """

    alpha: np.ndarray
    values: np.ndarray
    iterations: int
    segment_iterations: tuple
    converged: bool
    orientation: Orientation
    final_beta: np.ndarray
    isotonic_distance: float = 0.0
    maps: tuple = field(default=(), repr=False)
    anchors: tuple = field(default=(), repr=False)

    @property
    def per_segment(self):
        return self.orientation.per_segment

    @cached_property
    def _pchip(self):
        return PchipInterpolator(self.alpha, self.values, extrapolate=False)

    def __call__(self, alpha):
        a = np.asarray(alpha, dtype=float)
        lo, hi = self.alpha[0], self.alpha[-1]
        out = self._pchip(np.clip(a, lo, hi))
        out = np.where(a < lo, a / lo * self.values[0], out)
        return np.where(a > hi, self.values[-1], out)

    def extrapolated(self, alpha):
        """True where :meth:`__call__` leaves the estimation grid."""
        a = np.asarray(alpha, dtype=float)
        return (a < self.alpha[0]) | (a > self.alpha[-1])

    def _segments_of(self, alpha):
        return self.orientation.segment_index(alpha)

    def series(self, alpha):
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        out = np.zeros(a.shape)
        seg = self._segments_of(a)
        for s, smap in enumerate(self.maps):
            idx = np.flatnonzero((seg == s) & (a > 0))
            if idx.size:
                tot, _, _, _ = run_series(a[idx], smap, n_iter=self.segment_iterations[s])
                out[idx] = self.anchors[s] - tot
        return out if np.ndim(alpha) else float(out[0])

    def beta(self, alpha):
        return self._by_segment(alpha, "beta")

    def r(self, alpha):
        return self._by_segment(alpha, "r")

    def _by_segment(self, alpha, name):
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        out = np.empty(a.shape)
        seg = self._segments_of(a)
        for s, smap in enumerate(self.maps):
            idx = np.flatnonzero(seg == s)
            if idx.size:
                out[idx] = getattr(smap, name)(a[idx])
        return out if np.ndim(alpha) else float(out[0])


def _sample_size(d1, d2, n):
    if n is not None:
        return int(n)
    sizes = [getattr(d, "n", None) for d in (d1, d2)]
    sizes = [s for s in sizes if s]
    return min(sizes) if sizes else DEFAULT_ANALYTIC_N


RANGE_GRID = 400


def informative_range(seg, base, other, q_floor=0.0):
    """Quantities on which the estimated map moves iterates downward.

    Starting where ``G_base - G_other`` is largest, scan down and up to the
    first points where the difference is no longer positive. Outside this
    interval the kernel tails of the two CDFs have crossed, which creates
    spurious fixed points of beta. Analytic inputs return the segment's
    own limits.
    """
    lo = seg.q_lo if q_floor is None else max(seg.q_lo, q_floor)
    data = getattr(base, "data", None)
    if data is None:
        return (q_floor if q_floor is not None else seg.q_lo), min(float(base.support_hi), seg.q_hi)
    a = max(lo, float(data[0]))
    b = min(seg.q_hi, float(data[-1]))
    if not b > a:
        return lo, b
    grid = np.linspace(a, b, RANGE_GRID)
    diff = np.asarray(base.cdf(grid)) - np.asarray(other.cdf(grid))
    peak = int(np.argmax(diff))
    if diff[peak] <= 0:
        return lo, b
    below = np.flatnonzero(diff[:peak] <= 0)
    above = np.flatnonzero(diff[peak:] <= 0)
    floor = float(grid[below[-1] + 1]) if below.size else lo
    ceil = float(grid[peak + above[0] - 1]) if above.size else b
    return floor, ceil


def segment_maps(orientation, d1, d2, sched1, sched2, q_floor=0.0, empirical_start=True):
    """Per-segment beta/r maps.

    Base quantities are kept inside :func:`informative_range`. A chain that
    reaches the lower end is absorbed there and contributes no further
    terms, as at the normalized boundary where r vanishes.
    """
    dists = {1: d1, 2: d2}
    scheds = {1: sched1, 2: sched2}
    taus = {1: orientation.tau1, 2: orientation.tau2}
    maps = []
    for seg in orientation.segments:
        b, o = seg.base, seg.other
        floor, ceil = informative_range(seg, dists[b], dists[o], q_floor)
        maps.append(SegmentMap(dists[b], dists[o], taus[b], taus[o], scheds[b], scheds[o],
                               floor, ceil, empirical_start))
    return tuple(maps)


def solve_lambda(d1, d2, sched1, sched2, orientation=None, config=None, n=None,
                 n_iter=None, q_floor=0.0, alpha=None, start="empirical"):
    """Estimate Lambda on the configured alpha grid.

    Parameters
    ----------
    d1, d2 : distributions of the two samples (``cdf`` and ``quantile``).
    sched1, sched2 : PriceSchedule
    orientation : Orientation, optional
        Detected from the data when omitted.
    config : EstimationConfig, optional
    n : int, optional
        Sample size for the iteration cap ``ceil(factor * ln n)``; defaults
        to the smaller sample.
    n_iter : int, optional
        Fixed number of iterations, bypassing the stopping rule.
    q_floor : float or None
        Lower quantity bound. Base quantiles are raised to it before ``r``
        and ``beta`` are evaluated.
    alpha : array, optional
        Grid overriding ``config.alpha_grid``.
    start : {"empirical", "smoothed"}
        Quantile used for the first term. The empirical quantile of the
        base sample keeps the starting quantity inside the observed range,
        where the kernel estimate is free of boundary smoothing bias.
    """
    if start not in ("empirical", "smoothed"):
        raise ValueError(f"unknown start {start!r}")
    config = config or EstimationConfig()
    if orientation is None:
        orientation = detect_orientation(d1, d2, sched1, sched2, tau_mode=config.tau_mode,
                                         q_floor=0.0 if q_floor is None else q_floor)
    grid = config.alpha_grid if alpha is None else np.asarray(alpha, dtype=float)
    cap = config.iteration_cap(_sample_size(d1, d2, n))
    maps = segment_maps(orientation, d1, d2, sched1, sched2, q_floor, start == "empirical")
    seg_of = orientation.segment_index(grid)
    values = np.empty(grid.shape)
    beta_n = np.empty(grid.shape)
    iters, anchors = [], []
    converged = True
    for s, smap in enumerate(maps):
        idx = np.flatnonzero(seg_of == s)
        if s == 0:
            anchor = 0.0
        else:
            prev = np.flatnonzero(seg_of == s - 1)
            if prev.size:
                anchor = float(values[prev[-1]])
            else:
                seg = orientation.segments[s - 1]
                mid = np.array([0.5 * (seg.alpha_lo + seg.alpha_hi)])
                tot, _, _, _ = run_series(mid, maps[s - 1], n_iter=iters[-1] if iters else None,
                                          tol=config.beta_var_tol, cap=cap)
                anchor = anchors[-1] - float(tot[0])
        anchors.append(anchor)
        if idx.size == 0:
            iters.append(0)
            continue
        tot, k, conv, b = run_series(grid[idx], smap, n_iter=n_iter, tol=config.beta_var_tol, cap=cap)
        values[idx] = anchor - tot
        beta_n[idx] = b
        iters.append(k)
        converged &= conv
    if not converged and n_iter is None:
        warnings.warn("iteration cap reached before the beta variance fell below tolerance",
                      RuntimeWarning, stacklevel=2)
    distance = 0.0
    if config.isotonize_lambda:
        values, distance = isotonize(values)
    return QuantileSolution(grid, values, max(iters), tuple(iters), bool(converged), orientation,
                            beta_n, distance, maps, tuple(anchors))


def isotonize(values):
    """Nondecreasing least-squares projection and its sup distance."""
    values = np.asarray(values, dtype=float)
    fitted = isotonic_regression(values, increasing=True).x
    return fitted, float(np.max(np.abs(fitted - values)))


def residual_check(solution, method="series"):
    """Sup over the grid of |Lambda(beta(alpha)) - Lambda(alpha) - r(alpha)|.

    ``method="series"`` evaluates Lambda at beta(alpha) with the truncated
    series itself, so the residual is exactly the dropped term
    ``|r(beta^(N+1)(alpha))|``. ``method="interp"`` uses the linear
    interpolant of the grid values instead.
    """
    a = solution.alpha
    b = solution.beta(a)
    if method == "series":
        lam_b = solution.series(b)
    elif method == "interp":
        lam_b = np.interp(b, a, solution.values)
        lam_b = np.where(b < a[0], b / a[0] * solution.values[0], lam_b)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.max(np.abs(lam_b - solution.values - solution.r(a))))


def truncation_bound(theta, kappa, C, N):
    """Bound ``C theta^((N+1) kappa) / (1 - theta^kappa)`` on the dropped tail."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if not kappa > 0 or not C >= 0:
        raise ValueError("kappa must be positive and C nonnegative")
    if N < 0:
        raise ValueError("N must be nonnegative")
    tk = theta**kappa
    return C * theta ** ((N + 1) * kappa) / (1.0 - tk)


def fit_truncation_constant(r: Callable, kappa, alphas):
    """Smallest C with ``|r(alpha)| <= C alpha^kappa`` on the given levels."""
    a = np.asarray(alphas, dtype=float)
    a = a[a > 0]
    return float(np.max(np.abs(r(a)) / a**kappa))
