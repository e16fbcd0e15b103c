import numpy as np
import pytest

from iterfunc.designs import design1_analytic, design1_schedules, design2_schedules, gen_design2
from iterfunc.errors import IdentificationError, OrientationError
from iterfunc.kernel import AnalyticDistribution, smooth_cdf
from iterfunc.orientation import (beta_step, detect_orientation, find_cdf_crossings, identify_tau,
                                  iterate_beta)
from iterfunc.schedules import PriceSchedule


def uniform():
    return AnalyticDistribution(lambda q: q, lambda a: a, lambda q: np.ones_like(q))


def test_design1_single_segment_base2(analytic1):
    g1, g2, p1, p2 = analytic1
    o = detect_orientation(g1, g2, p1, p2)
    assert len(o.segments) == 1 and o.base == 2
    assert o.tau1 == 2.0 and o.tau2 == 1.0
    a = np.linspace(0.01, 0.99, 50)
    assert np.all(beta_step(g2, g1, a) < a)


def test_identical_distributions_uninformative(analytic1):
    _, _, p1, p2 = analytic1
    with pytest.raises(OrientationError, match="uninformative"):
        detect_orientation(uniform(), uniform(), p1, p2)


def test_design2_one_crossing_two_segments():
    s1, s2 = gen_design2(20_000, np.random.default_rng(8))
    d1, d2 = smooth_cdf(s1.quantities), smooth_cdf(s2.quantities)
    p1, p2 = design2_schedules()
    o = detect_orientation(d1, d2, p1, p2)
    assert len(o.segments) == 2 and len(o.crossings) == 1
    assert [s.base for s in o.segments] == [1, 2]
    assert 0.0 < o.segments[0].alpha_hi < 1.0
    assert len(find_cdf_crossings(d1, d2)) == 1


def test_identify_tau():
    p1, p2 = design1_schedules()
    assert identify_tau(p1.deriv, p2.deriv, 0.0) == 2.0
    assert identify_tau(p2.deriv, p2.deriv, 0.3) == 1.0
    with pytest.raises(IdentificationError):
        identify_tau(lambda q: 0.0 * q, p2.deriv, 0.0)
    with pytest.raises(IdentificationError):
        identify_tau(lambda q: q * np.inf, p2.deriv, 1.0)


def test_beta_closed_form(analytic1):
    g1, g2, _, _ = analytic1
    assert beta_step(g2, g1, 0.0) == 0.0
    assert beta_step(g2, g1, 1.0) == 1.0
    assert beta_step(g2, g1, 0.5) == pytest.approx(0.25, abs=1e-14)
    a = np.linspace(0, 1, 201)
    np.testing.assert_allclose(beta_step(g2, g1, a), a**2, atol=1e-14)
    assert np.all(np.diff(beta_step(g2, g1, a)) >= 0)


def test_iterate_beta(analytic1):
    g1, g2, _, _ = analytic1
    assert iterate_beta(g2, g1, 0.3, 0) == 0.3
    assert iterate_beta(g2, g1, 0.5, 3) == pytest.approx(0.00390625, abs=1e-15)
    a = np.linspace(0.05, 0.95, 19)
    its = np.array([iterate_beta(g2, g1, a, k) for k in range(8)])
    assert np.all(np.diff(its, axis=0) <= 0)
    assert np.max(iterate_beta(g2, g1, a, 9)) < 1e-8
    with pytest.raises(ValueError):
        iterate_beta(g2, g1, a, -1)


def test_role_reversal_duality(analytic1):
    g1, g2, _, _ = analytic1
    a = np.linspace(0.01, 0.99, 99)
    np.testing.assert_allclose(beta_step(g1, g2, beta_step(g2, g1, a)), a, atol=1e-8)


def test_smoothed_beta_clamped(rng):
    d1 = smooth_cdf(rng.uniform(size=200) ** 0.5, 0.05)
    d2 = smooth_cdf(rng.uniform(size=200), 0.05)
    b = beta_step(d2, d1, np.linspace(0, 1, 101))
    assert b.min() >= 0.0 and b.max() <= 1.0


def test_disjoint_supports(analytic1):
    _, _, p1, p2 = analytic1
    with pytest.raises(OrientationError, match="overlap"):
        detect_orientation(smooth_cdf([0.0, 0.1, 0.2], 0.01), smooth_cdf([5.0, 6.0], 0.01), p1, p2)


def test_unknown_tau_mode(analytic1):
    g1, g2, p1, p2 = analytic1
    with pytest.raises(ValueError):
        detect_orientation(g1, g2, p1, p2, tau_mode="guess")


def test_noisy_dominance_falls_back_to_majority(analytic1):
    # G1 above G2 except on a small stretch; the price gap has one sign
    g1 = AnalyticDistribution(lambda q: np.clip(q + 0.2 * np.sin(np.pi * q) - 0.03, 0, 1),
                              lambda a: a, lambda q: np.ones_like(q))
    g2 = uniform()
    p = PriceSchedule.polynomial([0.0, 2.0, -0.5])
    with pytest.warns(RuntimeWarning, match="majority"):
        o = detect_orientation(g1, g2, p, p.with_tau(1.0), tau_mode="given")
    assert len(o.segments) == 1 and o.base == 1
