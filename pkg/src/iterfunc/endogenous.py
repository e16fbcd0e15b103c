"""IV first stage for parametric prices and the conditional distribution of types."""
from dataclasses import dataclass, field

import numpy as np

from .config import EstimationConfig
from .errors import IdentificationError, SampleError
from .pipeline import estimate_pair
from .schedules import PriceSchedule

MIN_LEVEL_OBS = 20
EPS_GRID_POINTS = 101


@dataclass(frozen=True, eq=False)
class ThetaEstimate:
    """Coefficients of ``Psi(q) = theta_0 q + ... + theta_d q^(d+1)``.

    ``degree`` is the degree ``d`` of the per-unit price ``Psi(q) / q``.
    Coefficients listed in ``restricted`` were held at zero.
    """

    theta: np.ndarray
    degree: int
    instrument_levels: int
    fitted_period: int
    levels: tuple = ()
    restricted: tuple = ()

    @property
    def schedule(self):
        return PriceSchedule.from_theta(self.theta, label=f"period {self.fitted_period}")

    def per_unit(self, q):
        return per_unit_basis(q, self.degree) @ self.theta

    def deriv(self, q):
        return self.schedule.deriv(q)


def per_unit_basis(q, degree):
    q = np.asarray(q, dtype=float)
    return np.vander(q, degree + 1, increasing=True)


def _positive_quantities(sample):
    q = sample.quantities
    if np.any(q <= 0):
        raise SampleError("per-unit prices need strictly positive quantities")
    return q


def iv_estimate_theta(sample, degree=2, restrict_zero=()):
    """Two-stage least squares of ``P/Q`` on ``(1, Q, ..., Q^degree)``.

    Instruments are the indicators of the covariate levels. The first stage
    projects on them, so the estimate is a weighted least-squares fit of
    the level means of ``P/Q`` on the level means of the basis, with the
    level counts as weights. With as many levels as parameters the fit is
    exact in the level means. Indices in ``restrict_zero`` are excluded
    from the basis and reported as 0.
    """
    if sample.prices is None or sample.covariates is None:
        raise SampleError("IV estimation needs prices and covariates")
    q = _positive_quantities(sample)
    y = sample.prices / q
    restricted = tuple(sorted({int(i) for i in restrict_zero}))
    if any(not 0 <= i <= degree for i in restricted):
        raise ValueError("restricted coefficient index outside the basis")
    free = [j for j in range(degree + 1) if j not in restricted]
    if not free:
        raise ValueError("every coefficient is restricted")
    W = per_unit_basis(q, degree)[:, free]
    levels, inverse, counts = np.unique(sample.covariates, return_inverse=True,
                                        return_counts=True)
    k = len(free)
    if levels.size < k:
        raise IdentificationError(
            f"{levels.size} instrument levels cannot identify {k} price coefficients")
    ybar = np.bincount(inverse, weights=y) / counts
    Wbar = np.stack([np.bincount(inverse, weights=W[:, j]) / counts for j in range(k)], axis=1)
    root = np.sqrt(counts)
    coef, _, rank, sv = np.linalg.lstsq(root[:, None] * Wbar, root * ybar, rcond=None)
    if rank < k or sv[-1] <= 1e-12 * sv[0]:
        raise IdentificationError("instruments do not shift the price basis: projected design is rank deficient")
    theta = np.zeros(degree + 1)
    theta[free] = coef
    return ThetaEstimate(theta, degree, int(levels.size), sample.period_label,
                         tuple(int(v) for v in levels), restricted)


def price_residuals(theta_est, sample):
    """``eta_i = P_i / Q_i - Psi(Q_i) / Q_i``."""
    q = _positive_quantities(sample)
    if sample.prices is None:
        raise SampleError("sample has no prices")
    return sample.prices / q - theta_est.per_unit(q)


def structural_residuals(u_prime, theta_est, sample, eta=None):
    """``zeta_i = Psi'(Q_i) - u'(Q_i, X_i)`` and ``eps_i = zeta_i + eta_i``.

    ``u_prime`` maps each covariate level to a callable ``q -> u'(q)``.
    Returns ``(zeta, eps)``.
    """
    q = sample.quantities
    x = sample.covariates
    if x is None:
        x = np.zeros(q.size, dtype=np.int64)
    zeta = np.empty(q.size)
    for level in np.unique(x):
        if int(level) not in u_prime:
            raise KeyError(f"no fitted utility for covariate level {int(level)}")
        m = x == level
        zeta[m] = theta_est.deriv(q[m]) - np.asarray(u_prime[int(level)](q[m]), dtype=float)
    if eta is None:
        eta = price_residuals(theta_est, sample)
    return zeta, zeta + eta


def epsilon_grid(eps, points=EPS_GRID_POINTS):
    eps = np.asarray(eps, dtype=float)
    return np.linspace(eps.min(), eps.max(), points)


def conditional_cdf_epsilon(eps, X, x, grid, min_obs=MIN_LEVEL_OBS):
    """Empirical CDF of ``eps`` among observations with ``X == x``, on ``grid``."""
    eps = np.asarray(eps, dtype=float)
    sel = np.sort(eps[np.asarray(X) == x])
    if sel.size < min_obs:
        raise SampleError(f"covariate level {x} has {sel.size} observations; need {min_obs}")
    return np.searchsorted(sel, np.asarray(grid, dtype=float), side="right") / sel.size


def r_hat_from_theta(theta1, theta2, base_quantile, alpha, base=1, tau1=1.0):
    """``tau_other Psi'_other - tau_base Psi'_base`` at the base quantile of ``alpha``."""
    q = np.asarray(base_quantile(np.asarray(alpha, dtype=float)), dtype=float)
    d1 = tau1 * theta1.deriv(q)
    d2 = theta2.deriv(q)
    return d2 - d1 if base == 1 else d1 - d2


@dataclass(frozen=True, eq=False)
class CovariateEstimate:
    theta1: ThetaEstimate
    theta2: ThetaEstimate
    tau1: float
    levels: tuple
    pairs: dict = field(repr=False)
    eta2: np.ndarray = field(repr=False)
    zeta2: np.ndarray = field(repr=False)
    eps2: np.ndarray = field(repr=False)
    eps_grid: np.ndarray = field(repr=False)
    cond_cdf: dict = field(repr=False)


def estimate_with_covariates(s1, s2, config=None, degree=2, restrict_zero=((), ()),
                             min_obs=MIN_LEVEL_OBS, grid_points=EPS_GRID_POINTS):
    """Fitted prices, per-level Lambda and utility, and ``F(eps | x)`` from sample 2.

    Both samples are stratified on the covariate and the two-sample
    estimator runs within each level with the IV-fitted schedules. The
    price scale is the intercept ratio ``theta2_0 / theta1_0``.
    """
    config = config or EstimationConfig()
    th1 = iv_estimate_theta(s1, degree, restrict_zero[0])
    th2 = iv_estimate_theta(s2, degree, restrict_zero[1])
    if th1.theta[0] == 0:
        raise IdentificationError("fitted period-1 intercept is zero")
    tau1 = float(th2.theta[0] / th1.theta[0])
    if not tau1 > 0:
        raise IdentificationError("fitted intercepts have opposite signs")
    sched1, sched2 = th1.schedule, th2.schedule
    levels = tuple(sorted(set(th1.levels) & set(th2.levels)))
    pairs = {}
    for x in levels:
        q1 = s1.quantities[s1.covariates == x]
        q2 = s2.quantities[s2.covariates == x]
        if min(q1.size, q2.size) < min_obs:
            raise SampleError(f"covariate level {x} has fewer than {min_obs} observations")
        pairs[x] = estimate_pair(q1, q2, sched1, sched2, config)
    keep = np.isin(s2.covariates, levels)
    s2k = s2.subset(keep)
    eta2 = price_residuals(th2, s2k)
    zeta2, eps2 = structural_residuals({x: p.u_prime for x, p in pairs.items()}, th2, s2k, eta2)
    grid = epsilon_grid(eps2, grid_points)
    cdfs = {x: conditional_cdf_epsilon(eps2, s2k.covariates, x, grid, min_obs) for x in levels}
    return CovariateEstimate(th1, th2, tau1, levels, pairs, eta2, zeta2, eps2, grid, cdfs)
