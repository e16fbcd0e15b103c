import warnings

import numpy as np
import pytest

from iterfunc.config import EstimationConfig
from iterfunc.designs import design1_analytic, design1_schedules, gen_design1
from iterfunc.pipeline import estimate_pair
from iterfunc.schedules import PriceSchedule
from iterfunc.solver import (fit_truncation_constant, isotonize, residual_check, solve_lambda,
                             truncation_bound)

CAP = EstimationConfig().iteration_cap(10**6)


def analytic_solution(**kw):
    g1, g2 = design1_analytic()
    p1, p2 = design1_schedules()
    return solve_lambda(g1, g2, p1, p2, **kw)


def test_analytic_oracle_at_cap():
    sol = analytic_solution(n_iter=CAP)
    a = sol.alpha[sol.alpha <= 0.99]
    assert np.max(np.abs(sol(a) - a ** (2 / 3))) <= 1e-6


def test_analytic_oracle_with_stopping_rule():
    sol = analytic_solution()
    assert sol.converged
    assert sol.iterations <= CAP
    assert np.max(np.abs(sol.values - sol.alpha ** (2 / 3))) < 2e-6


def test_r_closed_form():
    sol = analytic_solution(n_iter=3)
    q = 0.25 ** (2 / 3)
    assert sol.r(0.25) == pytest.approx(q * q - q, abs=1e-14)
    assert sol.r(0.25) == pytest.approx(-0.239360, abs=1e-6)


def test_r_vanishes_at_zero():
    sol = analytic_solution(n_iter=3)
    r = np.abs(sol.r(np.geomspace(1e-12, 1e-2, 11)))
    assert np.all(np.diff(r) > 0) and r[0] < 1e-7


def test_zero_r_gives_zero_lambda():
    g1, g2 = design1_analytic()
    _, p2 = design1_schedules()
    p1 = PriceSchedule.polynomial([0.0, 2.0, -0.5])
    sol = solve_lambda(g1, g2, p1, p2)
    assert np.all(sol.values == 0.0)
    assert residual_check(sol) == 0.0


def test_lambda_vanishes_at_lower_end():
    sol = analytic_solution(n_iter=CAP)
    assert abs(sol(0.005)) <= 0.005 ** (2 / 3) + 1e-6
    assert sol(0.0) == 0.0


def test_residual_is_dropped_term():
    sol = analytic_solution(n_iter=10)
    a = sol.alpha[sol.alpha <= 0.99]
    q = (a ** (2**11)) ** (2 / 3)
    bound = np.max(np.abs(q * q - q))
    capped = solve_lambda(*design1_analytic(), *design1_schedules(), n_iter=10, alpha=a)
    assert residual_check(capped) == pytest.approx(bound, rel=1e-6)
    # 0.99^2048 = 1.17e-9, so the dropped term at the top of the grid is about 1.1e-6
    top = (0.99 ** 2048) ** (2 / 3)
    assert bound == pytest.approx(top - top * top, rel=1e-9)


def test_residual_decreases_in_n():
    a = np.linspace(0.005, 0.5, 100)
    res = np.array([residual_check(analytic_solution(n_iter=N, alpha=a)) for N in range(1, 12)])
    assert np.all(np.diff(res) <= 0)
    positive = res[res > 0]
    assert positive.size >= 5 and np.all(np.diff(positive) < 0)


def test_grid_independence():
    coarse = analytic_solution()
    fine = analytic_solution(alpha=np.linspace(0.005, 0.995, 397))
    np.testing.assert_allclose(fine.values[::2], coarse.values, atol=1e-8)


def test_shifted_grids_agree_at_shared_points():
    a = analytic_solution(n_iter=CAP, alpha=np.linspace(0.1, 0.9, 9))
    b = analytic_solution(n_iter=CAP, alpha=np.linspace(0.1, 0.9, 17))
    np.testing.assert_allclose(b.values[::2], a.values, atol=1e-8)


def test_analytic_lambda_monotone():
    assert np.all(np.diff(analytic_solution(n_iter=CAP).values) > 0)


def test_truncation_bound_arithmetic():
    assert truncation_bound(0.5, 1.0, 1.0, 9) == pytest.approx(0.001953125, abs=1e-18)
    b9, b10 = truncation_bound(0.5, 2 / 3, 1.3, 9), truncation_bound(0.5, 2 / 3, 1.3, 10)
    assert b10 == pytest.approx(b9 * 0.5 ** (2 / 3), rel=1e-14)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            truncation_bound(bad, 1.0, 1.0, 3)


def test_fit_truncation_constant():
    C = fit_truncation_constant(lambda a: -2.0 * a ** 0.5, 0.5, np.linspace(0.01, 1, 50))
    assert C == pytest.approx(2.0)


def test_isotonize():
    fitted, dist = isotonize([0.0, 0.3, 0.2, 0.5])
    np.testing.assert_allclose(fitted, [0.0, 0.25, 0.25, 0.5])
    assert dist == pytest.approx(0.05)
    fitted, dist = isotonize([1.0, 2.0])
    assert dist == 0.0


def test_isotonize_option_on_sample():
    s1, s2 = gen_design1(300, np.random.default_rng(2))
    p1, p2 = design1_schedules()
    est = estimate_pair(s1.quantities, s2.quantities, p1, p2,
                        EstimationConfig(isotonize_lambda=True), with_utility=False)
    assert np.all(np.diff(est.solution.values) >= 0)
    assert est.solution.isotonic_distance >= 0


def test_iteration_cap_warns():
    g1, g2 = design1_analytic()
    p1, p2 = design1_schedules()
    with pytest.warns(RuntimeWarning, match="cap"):
        sol = solve_lambda(g1, g2, p1, p2, n=3)
    assert not sol.converged and sol.iterations == EstimationConfig().iteration_cap(3)


def test_extrapolation_rules():
    sol = analytic_solution(n_iter=CAP)
    lo, hi = sol.alpha[0], sol.alpha[-1]
    assert sol(lo / 2) == pytest.approx(sol.values[0] / 2)
    assert sol(0.999) == sol.values[-1]
    assert list(sol.extrapolated([lo / 2, 0.5, 0.999])) == [True, False, True]


def test_series_matches_grid_values():
    sol = analytic_solution()
    np.testing.assert_allclose(sol.series(sol.alpha), sol.values, atol=1e-15)


def test_design1_sample_estimate_reasonable():
    s1, s2 = gen_design1(1000, np.random.default_rng(5))
    p1, p2 = design1_schedules()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = estimate_pair(s1.quantities, s2.quantities, p1, p2)
    assert est.tau1 == 2.0 and est.orientation.base == 2
    assert np.max(np.abs(est.solution.values - est.solution.alpha ** (2 / 3))) < 0.25
    assert est.solution.iterations <= EstimationConfig().iteration_cap(1000)


def test_unknown_start():
    with pytest.raises(ValueError):
        analytic_solution(start="median")
