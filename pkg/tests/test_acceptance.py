"""End-to-end acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line that is printed in the terminal
summary. Monte Carlo runs use a fixed seed.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from iterfunc.config import EstimationConfig
from iterfunc.designs import design1_analytic, design1_schedules, gen_appendix_design, true_utility
from iterfunc.endogenous import iv_estimate_theta
from iterfunc.montecarlo import bootstrap_coverage, run_monte_carlo
from iterfunc.solver import fit_truncation_constant, solve_lambda, truncation_bound
from iterfunc.utility import reconstruct_utility

SEED = 2024
SIZES = (500, 1000, 2500)
REPS = 100

TABLE_D1 = {"lambda_err": (0.1210, 0.0912, 0.0614), "utility_err": (0.0294, 0.0206, 0.0125)}
TABLE_D2 = {"lambda_err": (0.1420, 0.1249, 0.1346), "utility_err": (0.0421, 0.0361, 0.0292)}


def record(report, number, ok, detail):
    report.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def within(value, target, rel):
    return abs(value - target) <= rel * target


def fmt(values):
    return "/".join(f"{v:.4f}" for v in values)


@pytest.fixture(scope="module")
def design1_runs():
    return {n: run_monte_carlo("1", n, REPS, seed=SEED) for n in SIZES}


@pytest.fixture(scope="module")
def design2_runs():
    return {n: run_monte_carlo("2", n, REPS, seed=SEED) for n in SIZES}


def test_criterion1_analytic_oracle(acceptance_report):
    start = time.perf_counter()
    g1, g2 = design1_analytic()
    p1, p2 = design1_schedules()
    cap = EstimationConfig().iteration_cap(10**6)
    sol = solve_lambda(g1, g2, p1, p2, n_iter=cap)
    a = sol.alpha[sol.alpha <= 0.99]
    lam_err = float(np.max(np.abs(sol(a) - a ** (2 / 3))))
    q = np.linspace(0.0, 1.0, 513)
    util = reconstruct_utility(p2, sol, g2, q)
    u_err = float(np.max(np.abs(util.u_values - true_utility(q))))
    elapsed = time.perf_counter() - start
    ok = lam_err <= 1e-6 and u_err <= 1e-4 and elapsed < 1.0
    record(acceptance_report, 1, ok,
           f"sup|Lambda err|={lam_err:.2e} (<=1e-6), sup|u err|={u_err:.2e} (<=1e-4), "
           f"{elapsed:.3f}s (<1s)")


def test_criterion2_design1_table(acceptance_report, design1_runs):
    parts, ok = [], True
    for key, paper in TABLE_D1.items():
        ours = [design1_runs[n].metrics[key] for n in SIZES]
        inside = all(within(v, p, 0.30) for v, p in zip(ours, paper))
        falling = all(np.diff(ours) < 0)
        ok &= inside and falling
        parts.append(f"{key} {fmt(ours)} vs {fmt(paper)} within30%={inside} decreasing={falling}")
    record(acceptance_report, 2, ok, "; ".join(parts))


def test_criterion3_design2_table(acceptance_report, design2_runs):
    lam = [design2_runs[n].metrics["lambda_err"] for n in SIZES]
    util = [design2_runs[n].metrics["utility_err"] for n in SIZES]
    lam_in = [within(v, p, 0.40) for v, p in zip(lam, TABLE_D2["lambda_err"])]
    util_in = [within(v, p, 0.40) for v, p in zip(util, TABLE_D2["utility_err"])]
    falling = all(np.diff(util) < 0)
    ok = all(lam_in) and all(util_in) and falling
    record(acceptance_report, 3, ok,
           f"lambda_err {fmt(lam)} vs {fmt(TABLE_D2['lambda_err'])} within40%={lam_in}; "
           f"utility_err {fmt(util)} vs {fmt(TABLE_D2['utility_err'])} within40%={util_in} "
           f"decreasing={falling}")


def test_criterion4_truncation_bias(acceptance_report):
    theta, kappa = 0.5, 2 / 3
    g1, g2 = design1_analytic()
    p1, p2 = design1_schedules()
    # beta(alpha) = alpha^2 <= theta * alpha holds for alpha <= theta
    a = np.linspace(0.005, theta, 100)
    C = fit_truncation_constant(
        solve_lambda(g1, g2, p1, p2, n_iter=0, alpha=a).r, kappa, a)
    errs = {}
    for N in range(2, 12):
        sol = solve_lambda(g1, g2, p1, p2, n_iter=N, alpha=a)
        errs[N] = float(np.max(np.abs(sol.values - a**kappa)))
    floor = 1e-12  # below this the error is rounding, not truncation
    ratios = {N: errs[N + 1] / errs[N] for N in range(2, 11) if errs[N] > floor}
    decay_ok = all(r <= theta**kappa + 0.05 for r in ratios.values())
    bound_ok = all(errs[N] <= truncation_bound(theta, kappa, C, N) for N in range(2, 11))
    record(acceptance_report, 4, decay_ok and bound_ok,
           f"C={C:.4f}; max ratio {max(ratios.values()):.3e} over N={sorted(ratios)} "
           f"(<= {theta**kappa + 0.05:.4f}); errors within bound={bound_ok}")


def test_criterion5_bootstrap_coverage_smoke(acceptance_report):
    start = time.perf_counter()
    _, cover = bootstrap_coverage("1", 1000, 25, 200, seed=SEED)
    elapsed = time.perf_counter() - start
    ok = 0.80 <= cover <= 1.00 and elapsed < 300
    record(acceptance_report, "5 (smoke)", ok,
           f"coverage {cover:.3f} in [0.80, 1.00], B=200, 25 reps, {elapsed:.0f}s (<300s)")


@pytest.mark.slow
def test_criterion5_bootstrap_coverage_full(acceptance_report):
    per_level, cover = bootstrap_coverage("1", 1000, REPS, 500, seed=SEED)
    record(acceptance_report, 5, 0.85 <= cover <= 0.99,
           f"coverage {cover:.3f} in [0.85, 0.99], B=500, {REPS} reps; per level "
           + "/".join(f"{c:.2f}" for c in per_level))


def test_criterion6_iv_first_stage(acceptance_report):
    runs = {n: run_monte_carlo("appendix", n, 200, seed=SEED, first_stage_only=True)
            for n in (500, 2500)}
    rmse = {n: runs[n].metrics["theta10_rmse"] for n in runs}
    windows = {500: (0.012, 0.025), 2500: (0.005, 0.012)}
    rmse_ok = {n: windows[n][0] <= rmse[n] <= windows[n][1] for n in runs}
    estimated = ("theta10", "theta11", "theta20", "theta22")
    bias_ok = all(abs(runs[n].metrics[f"{c}_bias"]) < abs(runs[n].metrics[f"{c}_sd"])
                  for n in runs for c in estimated)
    s1, s2 = gen_appendix_design(900, np.random.default_rng(SEED), noise_sd=0.0)
    exact = max(np.max(np.abs(iv_estimate_theta(s1).theta - [2.0, -0.5, 0.0])),
                np.max(np.abs(iv_estimate_theta(s2).theta - [2.0, 0.0, -1 / 3])))
    ok = all(rmse_ok.values()) and bias_ok and exact <= 1e-10
    record(acceptance_report, 6, ok,
           f"theta10 RMSE n=500 {rmse[500]:.4f} in [0.012, 0.025]={rmse_ok[500]}, "
           f"n=2500 {rmse[2500]:.4f} in [0.005, 0.012]={rmse_ok[2500]}; |bias|<sd={bias_ok}; "
           f"noiseless error {exact:.1e} (<=1e-10)")


def test_criterion7_conditional_cdf(acceptance_report):
    runs = {n: run_monte_carlo("appendix", n, REPS, seed=SEED) for n in SIZES}
    errs = {x: [runs[n].metrics[f"cdf_err_x{x}"] for n in SIZES] for x in range(3)}
    falling = {x: bool(np.all(np.diff(e) < 0)) for x, e in errs.items()}
    mid = errs[1][1]
    mid_ok = within(mid, 0.1149, 0.40)
    ok = all(falling.values()) and mid_ok
    record(acceptance_report, 7, ok,
           "; ".join(f"x={x} {fmt(e)} decreasing={falling[x]}" for x, e in errs.items())
           + f"; x=1 n=1000 {mid:.4f} vs 0.1149 within40%={mid_ok}")


def test_criterion8_tikhonov(acceptance_report, design1_runs):
    it_sd = [design1_runs[n].metrics["lambda_pointwise_sd"] for n in SIZES]
    tk_sd = [design1_runs[n].metrics["tik_pointwise_sd"] for n in SIZES]
    sd_ok = all(t < i for t, i in zip(tk_sd, it_sd))
    it_bias = design1_runs[2500].metrics["lambda_bias"]
    tk_bias = design1_runs[2500].metrics["tik_bias"]
    ok = sd_ok and abs(it_bias) < abs(tk_bias)
    record(acceptance_report, 8, ok,
           f"sd Tikhonov {fmt(tk_sd)} < iterative {fmt(it_sd)}: {sd_ok}; "
           f"n=2500 |bias| iterative {it_bias:.4f} < Tikhonov {tk_bias:.4f}")


def test_criterion9_property_suite(acceptance_report):
    path = Path(__file__).with_name("test_properties.py")
    start = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                          str(path)], capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    last = out.stdout.strip().splitlines()[-1] if out.stdout.strip() else out.stderr[-200:]
    record(acceptance_report, 9, out.returncode == 0 and elapsed < 30,
           f"{last}; wall time {elapsed:.1f}s (<30s)")
