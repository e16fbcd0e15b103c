"""Utility reconstruction, its curvature, and counterfactual demand elasticities."""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DensityError, IdentificationError

DENSITY_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class UtilityEstimate:
    q_grid: np.ndarray
    u_values: np.ndarray
    u_prime: np.ndarray
    integrand: np.ndarray
    u_second: np.ndarray | None = None
    extrapolated: int = 0

    def __call__(self, q):
        return np.interp(q, self.q_grid, self.u_values)


def default_q_grid(dist, solution, quadrature_points=512, q_lo=0.0):
    """Uniform grid from ``q_lo`` to the base quantile at the top of the alpha grid."""
    q_hi = float(dist.quantile(solution.alpha[-1]))
    return np.linspace(q_lo, q_hi, quadrature_points + 1)


def reconstruct_utility(sched, solution, dist, q_grid, tau=None):
    """Utility ``u(q) = tau (P(q) - P(q0)) - int_{q0}^q Lambda(G(t)) dt``.

    Parameters
    ----------
    sched : PriceSchedule of the sample whose CDF is ``dist``.
    solution : QuantileSolution (or any callable alpha -> Lambda).
    dist : distribution with ``cdf``.
    q_grid : increasing quantity grid; the trapezoid rule runs on it.
    tau : price scale, defaults to ``sched.tau``.

    The returned values start at 0 at ``q_grid[0]``.
    """
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or q.size < 2 or np.any(np.diff(q) <= 0):
        raise ValueError("q_grid must be increasing with at least two points")
    lo = getattr(dist, "support_lo", -np.inf)
    hi = getattr(dist, "support_hi", np.inf)
    if q[0] < lo - 1e-12 or q[-1] > hi + 1e-12:
        raise ValueError("q_grid extends outside the support of the CDF estimate")
    tau = sched.tau if tau is None else tau
    a = np.clip(np.asarray(dist.cdf(q), dtype=float), 0.0, 1.0)
    lam = np.asarray(solution(a), dtype=float)
    n_ext = int(np.count_nonzero(solution.extrapolated(a))) if hasattr(solution, "extrapolated") else 0
    cum = cumulative_trapezoid(lam, q, initial=0.0)
    base = sched.value(q) - sched.value(q[0])
    u = tau * base - cum
    u_prime = tau * sched.deriv(q) - lam
    return UtilityEstimate(q, u, u_prime, lam, None, n_ext)


def grid_slope(alpha, values, half_width=1):
    """Differences over ``2 half_width`` grid steps, one-sided at the ends."""
    m = alpha.size
    i = np.arange(m)
    lo = np.maximum(i - half_width, 0)
    hi = np.minimum(i + half_width, m - 1)
    return (values[hi] - values[lo]) / (alpha[hi] - alpha[lo])


def epsilon_density(solution, alpha, floor=DENSITY_FLOOR, half_width=1):
    """Density of eps at ``Lambda(alpha)``: reciprocal slope of the Lambda grid.

    Slopes are central differences across ``2 half_width + 1`` grid points
    (three by default), interpolated linearly to ``alpha``. Wider windows
    damp the sampling noise of an estimated Lambda.
    """
    slope = grid_slope(solution.alpha, solution.values, half_width)
    s = np.interp(np.asarray(alpha, dtype=float), solution.alpha, slope)
    with np.errstate(divide="ignore"):
        f = np.where(s > 0, 1.0 / s, -np.inf)
    if np.any(f <= floor):
        raise DensityError("type density vanishes: estimated Lambda is flat or decreasing")
    return f


def second_derivative_utility(sched, g, f_eps, Q, tau=None, floor=DENSITY_FLOOR):
    """``u''(Q) = tau P''(Q) - g(Q) / f_eps(Lambda(G(Q)))``.

    ``g`` and ``f_eps`` are values at the points ``Q``.
    """
    f = np.asarray(f_eps, dtype=float)
    if np.any(f <= floor):
        raise DensityError("type density vanishes")
    tau = sched.tau if tau is None else tau
    return tau * sched.deriv2(np.asarray(Q, dtype=float)) - np.asarray(g, dtype=float) / f


def utility_second_derivative(sched, solution, dist, Q, tau=None, half_width=1):
    """Plug-in ``u''`` using the density of ``dist`` and the slope of Lambda."""
    Q = np.asarray(Q, dtype=float)
    a = np.clip(np.asarray(dist.cdf(Q), dtype=float), solution.alpha[0], solution.alpha[-1])
    f = epsilon_density(solution, a, half_width=half_width)
    return second_derivative_utility(sched, dist.density(Q), f, Q, tau)


def _denominator(sched, u2, Q, tau):
    Q = np.asarray(Q, dtype=float)
    tau = sched.tau if tau is None else tau
    if np.any(Q <= 0):
        raise ValueError("elasticities need Q > 0")
    gap = np.asarray(u2, dtype=float) - tau * sched.deriv2(Q)
    if np.any(gap >= 0):
        raise IdentificationError("second-order condition violated: u'' - P'' >= 0")
    return Q * gap, tau


def elasticity_level(sched, u2, Q, tau=None):
    """Elasticity under a uniform rescaling of the schedule, ``P'/(Q (u'' - P''))``."""
    den, tau = _denominator(sched, u2, Q, tau)
    return tau * sched.deriv(Q) / den


def elasticity_curvature(sched, u2, Q, tau=None):
    """Elasticity under a power transformation, ``P' (1 + ln P) / (Q (u'' - P''))``."""
    den, tau = _denominator(sched, u2, Q, tau)
    P = sched.value(Q)
    if np.any(P <= 0):
        raise ValueError("curvature elasticity needs P(Q) > 0")
    return tau * sched.deriv(Q) * (1.0 + np.log(P)) / den


def elasticity_convex(sched, dP0, u2, Q, tau=None):
    """Elasticity when moving towards a target schedule with derivative ``dP0``."""
    den, tau = _denominator(sched, u2, Q, tau)
    return tau * (sched.deriv(Q) - dP0(np.asarray(Q, dtype=float))) / den


def reliable_range(quantities, lo=5.0, hi=95.0):
    """Quantity interval between the given sample percentiles."""
    return tuple(float(v) for v in np.percentile(quantities, [lo, hi]))
