"""End-to-end estimation for a pair of samples with known (or fitted) prices."""
from dataclasses import dataclass

import numpy as np

from .config import EstimationConfig
from .kernel import cv_bandwidth, smooth_cdf
from .orientation import detect_orientation
from .solver import solve_lambda
from .utility import (default_q_grid, elasticity_convex, elasticity_curvature, elasticity_level,
                      reconstruct_utility, reliable_range, utility_second_derivative)


@dataclass(frozen=True, eq=False)
class PairEstimate:
    dist1: object
    dist2: object
    sched1: object
    sched2: object
    orientation: object
    solution: object
    utility: object
    config: EstimationConfig

    @property
    def bandwidths(self):
        return self.dist1.bandwidth, self.dist2.bandwidth

    @property
    def tau1(self):
        return self.orientation.tau1

    def u_prime(self, q):
        """Marginal utility ``tau2 P2'(q) - Lambda(G2(q))`` at arbitrary quantities."""
        q = np.asarray(q, dtype=float)
        a = np.clip(np.asarray(self.dist2.cdf(q), dtype=float), 0.0, 1.0)
        return self.sched2.marginal(q) - self.solution(a)


def choose_bandwidths(q1, q2, config):
    """Cross-validated bandwidths for the two samples.

    Under the default ``"common"`` rule both samples use the larger of the
    two CV choices. With unequal bandwidths the boundary tails of the two
    smoothed CDFs can cross, which plants spurious fixed points in beta.
    """
    if config.bandwidth is not None:
        return config.bandwidth, config.bandwidth
    h1 = cv_bandwidth(q1, quadrature_points=config.quadrature_points)
    h2 = cv_bandwidth(q2, quadrature_points=config.quadrature_points)
    if config.bandwidth_rule == "common":
        h1 = h2 = max(h1, h2)
    return h1, h2


def estimate_pair(q1, q2, sched1, sched2, config=None, bandwidths=None, orientation=None,
                  weights=(None, None), q_grid=None, q_floor=0.0, backend=None,
                  with_utility=True):
    """Smooth both CDFs, orient, solve for Lambda and rebuild utility from sample 2.

    ``bandwidths`` and ``orientation`` are chosen from the data unless
    given; bootstrap replicates pass the point-estimate values.
    """
    config = config or EstimationConfig()
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if bandwidths is None:
        bandwidths = choose_bandwidths(q1, q2, config)
    d1 = smooth_cdf(q1, bandwidths[0], weights[0], backend)
    d2 = smooth_cdf(q2, bandwidths[1], weights[1], backend)
    if orientation is None:
        orientation = detect_orientation(d1, d2, sched1, sched2, tau_mode=config.tau_mode,
                                         q_floor=0.0 if q_floor is None else q_floor)
    s1 = sched1.with_tau(orientation.tau1)
    s2 = sched2.with_tau(orientation.tau2)
    sol = solve_lambda(d1, d2, s1, s2, orientation, config, n=min(q1.size, q2.size),
                       q_floor=q_floor)
    util = None
    if with_utility:
        if q_grid is None:
            q_grid = default_q_grid(d2, sol, config.quadrature_points,
                                    0.0 if q_floor is None else max(q_floor, d2.support_lo))
        util = reconstruct_utility(s2, sol, d2, q_grid)
    return PairEstimate(d1, d2, s1, s2, orientation, sol, util, config)


SLOPE_HALF_WIDTH = 10


def elasticity_grid(est, Q=None, kind="level", dP0=None, n_points=50,
                    half_width=SLOPE_HALF_WIDTH):
    """Elasticities of sample-2 demand on a quantity grid.

    ``Q`` defaults to ``n_points`` equispaced quantities between the 5th
    and 95th percentiles of sample 2. ``kind`` is ``"level"``,
    ``"curvature"`` or ``"convex"`` (the latter needs ``dP0``). The type
    density comes from differences of Lambda across ``2 half_width``
    grid steps.
    """
    if Q is None:
        lo, hi = reliable_range(est.dist2.data)
        Q = np.linspace(lo, hi, n_points)
    Q = np.asarray(Q, dtype=float)
    u2 = utility_second_derivative(est.sched2, est.solution, est.dist2, Q, half_width=half_width)
    if kind == "level":
        return Q, elasticity_level(est.sched2, u2, Q)
    if kind == "curvature":
        return Q, elasticity_curvature(est.sched2, u2, Q)
    if kind == "convex":
        if dP0 is None:
            raise ValueError("convex elasticity needs the target derivative dP0")
        return Q, elasticity_convex(est.sched2, dP0, u2, Q)
    raise ValueError(f"unknown elasticity kind {kind!r}")
