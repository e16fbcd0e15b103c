"""Which sample to invert, where the CDFs cross, and the price scale tau_1."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import IdentificationError, OrientationError

DOMINANCE_SHARE = 0.95
CROSSING_XTOL = 1e-8


@dataclass(frozen=True)
class Segment:
    """Part of the alpha range solved with one base sample.

    Iterates of beta move from ``alpha_hi`` down towards ``alpha_lo``, the
    attracting point of this segment.
    """

    alpha_lo: float
    alpha_hi: float
    base: int
    q_lo: float
    q_hi: float

    @property
    def other(self):
        return 2 if self.base == 1 else 1


@dataclass(frozen=True)
class Orientation:
    segments: tuple
    tau1: float
    crossings: tuple = ()
    tau2: float = 1.0

    @property
    def base(self):
        """Base sample of a single-segment orientation, else ``None``."""
        return self.segments[0].base if len(self.segments) == 1 else None

    @property
    def per_segment(self):
        return len(self.segments) > 1

    def segment_index(self, alpha):
        """Index of the segment holding each alpha (upper boundary inclusive)."""
        bounds = np.array([s.alpha_lo for s in self.segments[1:]])
        return np.searchsorted(bounds, np.asarray(alpha, dtype=float), side="left")


def identify_tau(dP1, dP2, q_tilde=0.0):
    """Price scale ``tau_1 = P2'(q~) / P1'(q~)`` at a crossing (or boundary) point."""
    d1 = float(dP1(np.asarray(q_tilde, dtype=float)))
    d2 = float(dP2(np.asarray(q_tilde, dtype=float)))
    if not np.isfinite(d1) or not np.isfinite(d2) or d1 == 0.0:
        raise IdentificationError(f"P1'({q_tilde}) is zero or not finite; tau_1 is not identified")
    tau = d2 / d1
    if not tau > 0:
        raise IdentificationError("price derivatives have opposite signs; tau_1 must be positive")
    return tau


def _data_range(dist):
    if hasattr(dist, "data"):
        return float(dist.data[0]), float(dist.data[-1])
    return float(dist.support_lo), float(dist.support_hi)


def _sample_size(d1, d2):
    sizes = [getattr(d, "n", None) for d in (d1, d2)]
    sizes = [s for s in sizes if s]
    return min(sizes) if sizes else None


def _refine_roots(fn, grid, values):
    roots = []
    s = np.sign(values)
    for k in np.flatnonzero(s[:-1] * s[1:] < 0):
        roots.append(brentq(fn, grid[k], grid[k + 1], xtol=CROSSING_XTOL))
    return roots


def find_cdf_crossings(d1, d2, n_grid=200):
    """Interior quantities where ``G1 - G2`` changes sign."""
    lo, hi = _intersection(d1, d2)
    grid = np.linspace(lo, hi, n_grid)
    n = _sample_size(d1, d2)
    noise = 2.0 / np.sqrt(n) if n else 0.0
    diff = np.asarray(d1.cdf(grid)) - np.asarray(d2.cdf(grid))
    # ignore sign flips in regions where the CDFs are indistinguishable
    diff = np.where(np.abs(diff) < 0.1 * noise, 0.0, diff)
    keep = diff != 0
    g, v = grid[keep], diff[keep]

    def fn(q):
        return float(d1.cdf(q) - d2.cdf(q))

    return _refine_roots(fn, g, v)


def _intersection(d1, d2):
    lo1, hi1 = _data_range(d1)
    lo2, hi2 = _data_range(d2)
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    if not hi > lo:
        raise OrientationError("quantity supports of the two samples do not overlap")
    return lo, hi


def detect_orientation(d1, d2, sched1, sched2, tau_mode="normalize", q_floor=0.0,
                       n_grid=200, dominance_share=DOMINANCE_SHARE):
    """Choose base samples and segments for the iterative solver.

    Parameters
    ----------
    d1, d2 : distributions of the two samples (smoothed or analytic).
    sched1, sched2 : PriceSchedule
        ``sched2.tau`` is taken as 1. ``sched1.tau`` is replaced according
        to ``tau_mode``.
    tau_mode : {"normalize", "crossing", "given"}
        ``"normalize"`` sets ``tau_1 = P2'(q_floor) / P1'(q_floor)`` (known
        prices, boundary normalization). ``"crossing"`` uses the first
        interior crossing of the estimated CDFs. ``"given"`` keeps
        ``sched1.tau``.

    Returns
    -------
    Orientation
        One segment if one sample dominates on at least ``dominance_share``
        of a grid over the common support, otherwise one segment per sign
        regime of ``tau_2 P2' - tau_1 P1'``. If that difference never
        changes sign the majority direction gives a single segment.
    """
    lo, hi = _intersection(d1, d2)
    if tau_mode == "normalize":
        tau1 = identify_tau(sched1.deriv, sched2.deriv, q_floor)
    elif tau_mode == "crossing":
        roots = find_cdf_crossings(d1, d2, n_grid)
        if not roots:
            raise IdentificationError("no interior CDF crossing to identify tau_1")
        tau1 = identify_tau(sched1.deriv, sched2.deriv, roots[0])
    elif tau_mode == "given":
        tau1 = float(sched1.tau)
    else:
        raise ValueError(f"unknown tau_mode {tau_mode!r}")

    grid = np.linspace(lo, hi, n_grid)
    diff = np.asarray(d1.cdf(grid)) - np.asarray(d2.cdf(grid))
    n = _sample_size(d1, d2)
    if n is not None and np.max(np.abs(diff)) < 2.0 / np.sqrt(n):
        raise OrientationError("uninformative samples: estimated CDFs coincide")
    if n is None and np.max(np.abs(diff)) < 1e-12:
        raise OrientationError("uninformative samples: CDFs coincide")

    lo_all = min(_data_range(d1)[0], _data_range(d2)[0])
    hi_all = max(_data_range(d1)[1], _data_range(d2)[1])
    pos = np.mean(diff > 0)
    neg = np.mean(diff < 0)
    if pos >= dominance_share or neg >= dominance_share:
        base = 1 if pos >= dominance_share else 2
        seg = Segment(0.0, 1.0, base, lo_all, hi_all)
        return Orientation((seg,), tau1)

    def dprice(q):
        q = np.asarray(q, dtype=float)
        return sched2.tau * sched2.deriv(q) - tau1 * sched1.deriv(q)

    dvals = np.asarray(dprice(grid), dtype=float)
    roots = _refine_roots(lambda q: float(dprice(q)), grid, dvals)
    if not roots:
        # no sign change in the price gap rules out a crossing; the mixed CDF
        # signs come from noise in the tails
        warnings.warn(f"one sample dominates on only {max(pos, neg):.0%} of the grid and the "
                      "price gap keeps one sign; using the majority direction",
                      RuntimeWarning, stacklevel=2)
        base = 1 if pos >= neg else 2
        return Orientation((Segment(0.0, 1.0, base, lo_all, hi_all),), tau1)
    edges_q = [lo_all] + roots + [hi_all]
    segments = []
    alpha_lo = 0.0
    for k in range(len(edges_q) - 1):
        ql, qh = edges_q[k], edges_q[k + 1]
        mid = 0.5 * (max(ql, lo) + min(qh, hi))
        base = 1 if dprice(mid) < 0 else 2
        if k < len(roots):
            alpha_hi = float((d1 if base == 1 else d2).cdf(roots[k]))
        else:
            alpha_hi = 1.0
        segments.append(Segment(alpha_lo, alpha_hi, base, ql, qh))
        alpha_lo = alpha_hi
    return Orientation(tuple(segments), tau1, tuple(roots))


def beta_step(base, other, alpha, q_floor=None):
    """``other.cdf(base.quantile(alpha))`` clamped to [0, 1].

    With ``q_floor`` set, the base quantile is first raised to that bound.
    """
    a = np.asarray(alpha, dtype=float)
    q = np.asarray(base.quantile(a), dtype=float)
    if q_floor is not None:
        q = np.maximum(q, q_floor)
    out = np.clip(np.asarray(other.cdf(q), dtype=float), 0.0, 1.0)
    # the endpoints are fixed points by construction
    out = np.where(a <= 0.0, 0.0, np.where(a >= 1.0, 1.0, out))
    return out if out.ndim else float(out)


def iterate_beta(base, other, alpha, k, q_floor=None):
    """k-fold composition of :func:`beta_step`; ``k = 0`` returns ``alpha``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    a = np.asarray(alpha, dtype=float)
    for _ in range(k):
        a = beta_step(base, other, a, q_floor)
    return a
