"""Monte Carlo driver for the simulation designs and the Tikhonov comparison."""
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import bootstrap_pipeline
from .config import EstimationConfig
from .designs import (DESIGNS, THETA1, THETA2, cond_cdf, cond_utility, gen_appendix_design)
from .endogenous import estimate_with_covariates, iv_estimate_theta
from .errors import IterfuncError, SimulationError
from .pipeline import estimate_pair
from .tikhonov import tikhonov_comparator

MAX_FAILURE_RATE = 0.05
MIN_REPS = 10
TIKHONOV_NODES = 200
RHO_SCALE = 3e-3
APPENDIX_RESTRICT = ((2,), (1,))
COVERAGE_LEVELS = np.round(np.arange(1, 10) / 10, 1)


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    design: str
    n: int
    reps: int
    metrics: dict
    per_rep: dict = field(repr=False)
    failures: int = 0

    def rows(self):
        return [(self.design, self.n, self.reps, k, v) for k, v in self.metrics.items()]


def rep_generators(seed, n, reps):
    """One independent generator per repetition, keyed on ``(seed, n)``."""
    children = np.random.SeedSequence([int(seed), int(n)]).spawn(reps)
    return [np.random.default_rng(c) for c in children]


def _iterative_rep(dgp, n, rng, config, tikhonov, rho_scale):
    s1, s2 = dgp.generate(n, rng)
    p1, p2 = dgp.schedules()
    est = estimate_pair(s1.quantities, s2.quantities, p1, p2, config)
    sol = est.solution
    truth = dgp.true_lambda(sol.alpha)
    out = {
        "lambda": sol.values,
        "lambda_err": float(np.max(np.abs(sol.values - truth))),
        "utility_err": float(np.max(np.abs(est.utility.u_values
                                           - dgp.true_utility(est.utility.q_grid)))),
        "tau1_err": abs(est.tau1 - p1.tau),
        "iterations": float(sol.iterations),
    }
    if tikhonov:
        rho = rho_scale / max(sol.iterations, 1)
        tik = tikhonov_comparator(sol.r, sol.beta, rho, TIKHONOV_NODES)
        lam_t = tik(sol.alpha)
        out["tik"] = lam_t
        out["tik_err"] = float(np.max(np.abs(lam_t - truth)))
    return out


def _summarize_curves(curves, truth, prefix):
    arr = np.asarray(curves)
    bias = np.max(np.abs(arr.mean(axis=0) - truth))
    return {
        f"{prefix}_bias": float(bias),
        f"{prefix}_pointwise_sd": float(np.max(arr.std(axis=0, ddof=1))),
    }


def _run_reps(fn, reps, label):
    results, errors = [], []
    for i in range(reps):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                results.append(fn(i))
        except (IterfuncError, ValueError, np.linalg.LinAlgError) as exc:
            errors.append(f"rep {i}: {exc}")
        if len(errors) > MAX_FAILURE_RATE * reps:
            raise SimulationError(f"{label}: {len(errors)} of {i + 1} repetitions failed; "
                                  + "; ".join(errors[:5]))
    return results, len(errors)


def run_monte_carlo(design, n, reps, config=None, seed=None, tikhonov=None,
                    rho_scale=RHO_SCALE, first_stage_only=False):
    """Mean sup-errors over ``reps`` simulated data sets.

    Designs ``"1"`` and ``"2"`` report ``lambda_err`` and ``utility_err``
    (mean over repetitions of the sup error on the estimation grids) and
    ``tau1_err``. With ``tikhonov`` (default for design 1) the regularised
    comparator with ``rho = rho_scale / N`` is run on the same ``r`` and
    ``beta``; ``*_bias`` is the sup of the pointwise mean error and
    ``*_pointwise_sd`` the sup of the pointwise standard deviation.
    The ``"appendix"`` design reports the IV first stage and, unless
    ``first_stage_only``, the per-level utility and ``F(eps | x)`` errors.
    """
    design = str(design)
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} repetitions")
    config = config or EstimationConfig()
    seed = config.seed if seed is None else seed
    rngs = rep_generators(seed, n, reps)
    if design == "appendix":
        return _run_appendix(n, reps, config, rngs, first_stage_only)
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}")
    dgp = DESIGNS[design]
    tikhonov = (design == "1") if tikhonov is None else tikhonov
    results, failures = _run_reps(
        lambda i: _iterative_rep(dgp, n, rngs[i], config, tikhonov, rho_scale), reps,
        f"design {design}, n={n}")
    alpha = config.alpha_grid
    truth = dgp.true_lambda(alpha)
    m = {
        "lambda_err": float(np.mean([r["lambda_err"] for r in results])),
        "utility_err": float(np.mean([r["utility_err"] for r in results])),
        "tau1_err": float(np.mean([r["tau1_err"] for r in results])),
        "mean_iterations": float(np.mean([r["iterations"] for r in results])),
    }
    m.update(_summarize_curves([r["lambda"] for r in results], truth, "lambda"))
    if tikhonov:
        m["tik_err"] = float(np.mean([r["tik_err"] for r in results]))
        m.update(_summarize_curves([r["tik"] for r in results], truth, "tik"))
    per_rep = {k: np.asarray([r[k] for r in results])
               for k in ("lambda_err", "utility_err") + (("tik_err",) if tikhonov else ())}
    return MonteCarloResult(design, n, reps, m, per_rep, failures)


THETA_NAMES = ("theta10", "theta11", "theta12", "theta20", "theta21", "theta22")


def _appendix_rep(n, rng, config, first_stage_only=False):
    s1, s2 = gen_appendix_design(n, rng)
    if first_stage_only:
        t1 = iv_estimate_theta(s1, 2, APPENDIX_RESTRICT[0])
        t2 = iv_estimate_theta(s2, 2, APPENDIX_RESTRICT[1])
        return {"theta": np.concatenate([t1.theta, t2.theta]), "tau1": t2.theta[0] / t1.theta[0]}
    ce = estimate_with_covariates(s1, s2, config, restrict_zero=APPENDIX_RESTRICT)
    out = {"theta": np.concatenate([ce.theta1.theta, ce.theta2.theta]), "tau1": ce.tau1}
    for x in ce.levels:
        out[f"cdf_err_x{x}"] = float(np.max(np.abs(ce.cond_cdf[x] - cond_cdf(ce.eps_grid, x))))
        util = ce.pairs[x].utility
        out[f"utility_err_x{x}"] = float(np.max(np.abs(util.u_values - cond_utility(util.q_grid, x))))
    return out


def _run_appendix(n, reps, config, rngs, first_stage_only=False):
    results, failures = _run_reps(lambda i: _appendix_rep(n, rngs[i], config, first_stage_only),
                                  reps,
                                  f"appendix, n={n}")
    theta = np.array([r["theta"] for r in results])
    dev = theta - np.concatenate([THETA1, THETA2])
    m = {}
    for j, name in enumerate(THETA_NAMES):
        m[f"{name}_rmse"] = float(np.sqrt(np.mean(dev[:, j] ** 2)))
        m[f"{name}_bias"] = float(np.mean(dev[:, j]))
        m[f"{name}_sd"] = float(np.std(theta[:, j]))
    m["tau1_err"] = float(np.mean([abs(r["tau1"] - 1.0) for r in results]))
    keys = sorted(k for k in results[0] if k.startswith(("cdf_err", "utility_err")))
    for k in keys:
        m[k] = float(np.mean([r[k] for r in results if k in r]))
    per_rep = {"theta": theta}
    return MonteCarloResult("appendix", n, reps, m, per_rep, failures)


def bootstrap_coverage(design, n, reps, boot_reps, config=None, seed=None,
                       levels=COVERAGE_LEVELS):
    """Share of repetitions whose pointwise Lambda band covers the truth.

    Returns ``(coverage per level, mean coverage)``; the band at each level
    is interpolated linearly from the alpha grid.
    """
    config = config or EstimationConfig()
    seed = config.seed if seed is None else seed
    dgp = DESIGNS[str(design)]
    truth = dgp.true_lambda(levels)
    rngs = rep_generators(seed, n, reps)
    child_seeds = np.random.SeedSequence([int(seed), int(n), 1]).generate_state(reps)

    def one(i):
        s1, s2 = dgp.generate(n, rngs[i])
        p1, p2 = dgp.schedules()
        bands = bootstrap_pipeline(s1.quantities, s2.quantities, p1, p2,
                                   config.updated(seed=int(child_seeds[i])), reps=boot_reps,
                                   min_reps=1)
        lo = np.interp(levels, bands.grid, bands.lo)
        hi = np.interp(levels, bands.grid, bands.hi)
        return (lo <= truth) & (truth <= hi)

    hits, _ = _run_reps(one, reps, f"coverage design {design}, n={n}")
    per_level = np.mean(hits, axis=0)
    return per_level, float(per_level.mean())


def write_metrics(path, results):
    """CSV with columns design, n, reps, metric, value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["design", "n", "reps", "metric", "value"])
        for res in results:
            for row in res.rows():
                w.writerow(list(row[:4]) + [repr(float(row[4]))])
