"""Multiplier bootstrap bands for Lambda, utility and elasticities."""
import warnings
from dataclasses import dataclass

import numpy as np

from .config import EstimationConfig
from .errors import BootstrapError, IterfuncError
from .kernel import smooth_cdf
from .pipeline import elasticity_grid, estimate_pair

TARGETS = ("lambda", "utility", "elasticity")
MAX_FAILURE_RATE = 0.10
MIN_REPS = 100


@dataclass(frozen=True, eq=False)
class BootstrapBands:
    grid: np.ndarray
    point_estimate: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level: float
    reps: int
    failures: int = 0

    @property
    def width(self):
        return self.hi - self.lo

    def covers(self, truth):
        """Pointwise indicator ``lo <= truth <= hi``."""
        t = np.asarray(truth, dtype=float)
        return (self.lo <= t) & (t <= self.hi)


def draw_multipliers(n, rng):
    """``n`` iid standard exponential weights (mean 1, variance 1)."""
    if n < 1:
        raise ValueError("need at least one multiplier")
    return rng.standard_exponential(int(n))


def bootstrap_cdf(data, xi, bandwidth, backend=None):
    """Smoothed CDF with weights ``xi / mean(xi)``, which sum to ``n``."""
    x = np.asarray(data, dtype=float).ravel()
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.shape != x.shape:
        raise ValueError("one multiplier per observation is required")
    mean = xi.mean()
    if not mean > 0:
        raise BootstrapError("multipliers have zero mean")
    return smooth_cdf(x, bandwidth, xi / mean, backend)


def _target_values(est, target, Q, kind, dP0):
    if target == "lambda":
        return est.solution.values
    if target == "utility":
        return est.utility.u_values
    return elasticity_grid(est, Q, kind, dP0)[1]


def bootstrap_pipeline(q1, q2, sched1, sched2, config=None, target="lambda", point=None,
                       reps=None, level=None, elasticity_q=None, elasticity_kind="level",
                       dP0=None, min_reps=MIN_REPS, backend=None):
    """Pointwise percentile bands from reweighted re-estimates.

    Each replicate draws independent exponential multipliers for the two
    samples and re-runs :func:`estimate_pair` with the bandwidths and
    orientation of the point estimate held fixed. Replicate ``b`` uses the
    ``b``-th child of ``SeedSequence(config.seed)``, so bands do not depend
    on evaluation order. More than 10% failed replicates abort the run.
    """
    config = config or EstimationConfig()
    if target not in TARGETS:
        raise ValueError(f"unknown bootstrap target {target!r}")
    reps = config.bootstrap_reps if reps is None else int(reps)
    level = config.bootstrap_level if level is None else float(level)
    if reps < min_reps:
        raise ValueError(f"need at least {min_reps} bootstrap replicates")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    need_u = target != "lambda"
    if point is None:
        try:
            point = estimate_pair(q1, q2, sched1, sched2, config, backend=backend,
                                  with_utility=need_u)
        except (IterfuncError, ValueError) as exc:
            raise BootstrapError(f"point estimate failed: {exc}") from exc
    if target == "lambda":
        grid = point.solution.alpha
    elif target == "utility":
        grid = point.utility.q_grid
    else:
        grid = elasticity_grid(point, elasticity_q, elasticity_kind, dP0)[0]
    estimate = _target_values(point, target, grid, elasticity_kind, dP0)
    q_grid = point.utility.q_grid if need_u else None

    draws = np.full((reps, grid.size), np.nan)
    failures = 0
    errors = []
    for b, child in enumerate(np.random.SeedSequence(config.seed).spawn(reps)):
        rng = np.random.default_rng(child)
        xi1 = draw_multipliers(q1.size, rng)
        xi2 = draw_multipliers(q2.size, rng)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                est = estimate_pair(q1, q2, point.sched1, point.sched2, config,
                                    bandwidths=point.bandwidths, orientation=point.orientation,
                                    weights=(xi1, xi2), q_grid=q_grid, backend=backend,
                                    with_utility=need_u)
                draws[b] = _target_values(est, target, grid, elasticity_kind, dP0)
        except (IterfuncError, ValueError, FloatingPointError) as exc:
            failures += 1
            if len(errors) < 5:
                errors.append(f"replicate {b}: {exc}")
        if failures > MAX_FAILURE_RATE * reps:
            raise BootstrapError(f"{failures} of {b + 1} replicates failed; first errors: "
                                 + "; ".join(errors))
    ok = draws[~np.isnan(draws).any(axis=1)]
    lo, hi = np.quantile(ok, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0)
    return BootstrapBands(np.asarray(grid), np.asarray(estimate), lo, hi, level, reps, failures)
