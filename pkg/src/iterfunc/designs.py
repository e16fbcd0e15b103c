"""Simulation designs: data-generating processes and their closed-form truths."""
from dataclasses import dataclass
from math import comb
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .kernel import AnalyticDistribution
from .sample_io import Sample
from .schedules import PriceSchedule

BISECTION_TOL = 1e-12


def true_lambda(alpha):
    """Quantile function of eps with density 1.5 sqrt(eps) on [0, 1]."""
    return np.asarray(alpha, dtype=float) ** (2.0 / 3.0)


def true_utility(q):
    q = np.asarray(q, dtype=float)
    return 2.0 * q - q * q


def draw_eps(rng, size):
    return rng.uniform(size=size) ** (2.0 / 3.0)


def design1_schedules():
    p1 = PriceSchedule.polynomial([0.0, 1.0, -0.5, 1.0 / 6.0], tau=2.0, label="P1")
    p2 = PriceSchedule.polynomial([0.0, 2.0, -0.5], tau=1.0, label="P2")
    return p1, p2


def design1_analytic():
    """Exact CDFs ``G1 = q^3`` and ``G2 = q^1.5`` on [0, 1]."""
    g1 = AnalyticDistribution(lambda q: q**3, lambda a: a ** (1.0 / 3.0), lambda q: 3.0 * q**2)
    g2 = AnalyticDistribution(lambda q: q**1.5, lambda a: a ** (2.0 / 3.0), lambda q: 1.5 * np.sqrt(q))
    return g1, g2


def gen_design1(n, rng):
    """Two independent samples: ``Q1 = sqrt(eps)`` and ``Q2 = eps``."""
    eps = draw_eps(rng, 2 * n)
    q1 = np.sqrt(eps[:n])
    q2 = eps[n:]
    p1, p2 = design1_schedules()
    return (Sample(q1, p1.value(q1), period_label=1),
            Sample(q2, p2.value(q2), period_label=2))


def _binomial_tail():
    # P(Binomial(9, q) <= 4) as a polynomial in q
    total = Polynomial([0.0])
    for k in range(5):
        total = total + comb(9, k) * Polynomial([0.0, 1.0]) ** k * Polynomial([1.0, -1.0]) ** (9 - k)
    return total


def design2_schedules():
    dp1 = 0.5 * (1.0 + _binomial_tail())
    p1 = dp1.integ(lbnd=0.0)
    p1s = PriceSchedule(p1, dp1, dp1.deriv(), tau=2.0, label="P1")
    _, p2 = design1_schedules()
    return p1s, p2


def bisect(fn, lo, hi, tol=BISECTION_TOL):
    """Vectorised bisection for decreasing ``fn`` with ``fn(lo) >= 0 >= fn(hi)``."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    if lo.size == 0:
        return lo
    if np.any(fn(lo) < 0) or np.any(fn(hi) > 0):
        raise ValueError("root not bracketed")
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        pos = fn(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


def design2_quantity(eps):
    """Solve ``u'(Q) = tau_1 P1'(Q) - eps`` on [0, 1] by bisection."""
    p1, _ = design2_schedules()
    eps = np.asarray(eps, dtype=float)

    def foc(q):
        return 2.0 - 2.0 * q - p1.tau * p1.deriv(q) + eps

    return bisect(foc, np.zeros_like(eps), np.ones_like(eps))


def gen_design2(n, rng):
    eps = draw_eps(rng, 2 * n)
    q1 = design2_quantity(eps[:n])
    q2 = eps[n:]
    p1, p2 = design2_schedules()
    return (Sample(q1, p1.value(q1), period_label=1),
            Sample(q2, p2.value(q2), period_label=2))


# Covariate design -----------------------------------------------------------

X_PROBS = {1: (1 / 3, 1 / 3, 1 / 3), 2: (5 / 12, 1 / 3, 1 / 4)}
ETA_SD = 0.05
THETA1 = (2.0, -0.5, 0.0)
THETA2 = (2.0, 0.0, -1.0 / 3.0)


def cond_cdf(eps, x):
    """``F(eps | x) = eps^(3 / (2 + x))`` on [0, 1]."""
    return np.clip(np.asarray(eps, dtype=float), 0.0, 1.0) ** (3.0 / (2.0 + x))


def cond_lambda2(q, x):
    """Truth for ``Lambda(G2(q | x))`` in the covariate design."""
    q = np.asarray(q, dtype=float)
    return q * (1.0 + q**x - q)


def cond_utility(q, x):
    q = np.asarray(q, dtype=float)
    return 2.0 * q - 0.5 * q * q - q ** (2 + x) / (2.0 + x)


def appendix_quantity(eps, x, period):
    eps = np.asarray(eps, dtype=float)
    x = np.asarray(x)
    if period == 1:
        return eps ** (1.0 / (1.0 + x))
    q = np.empty_like(eps)
    m0, m1, m2 = x == 0, x == 1, x == 2
    q[m0] = 1.0 - np.sqrt(1.0 - eps[m0])
    q[m1] = eps[m1]
    e2 = eps[m2]
    q[m2] = bisect(lambda t: e2 - (t**3 - t**2 + t), np.zeros_like(e2), np.ones_like(e2))
    return q


def gen_appendix_design(n, rng, noise_sd=ETA_SD):
    """Samples with covariate X in {0, 1, 2} and price noise ``Q eta``."""
    out = []
    for period, theta in ((1, THETA1), (2, THETA2)):
        x = rng.choice(3, size=n, p=X_PROBS[period])
        eps = rng.uniform(size=n) ** ((2.0 + x) / 3.0)
        eta = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
        q = appendix_quantity(eps, x, period)
        psi = theta[0] * q + theta[1] * q**2 + theta[2] * q**3
        out.append(Sample(q, psi + q * eta, x, period_label=period))
    return tuple(out)


@dataclass(frozen=True)
class DesignSpec:
    design_id: str
    generate: Callable
    schedules: Callable
    true_lambda: Callable = true_lambda
    true_utility: Callable = true_utility


DESIGNS = {
    "1": DesignSpec("1", gen_design1, design1_schedules),
    "2": DesignSpec("2", gen_design2, design2_schedules),
}
