import numpy as np
import pytest

from iterfunc.tikhonov import operator_matrix, tikhonov_comparator, trapezoid_weights


def r_design1(a):
    q = np.asarray(a) ** (2 / 3)
    return q * q - q


def beta_design1(a):
    return np.asarray(a) ** 2


def test_zero_rhs():
    res = tikhonov_comparator(lambda a: np.zeros_like(a), beta_design1, 1e-3)
    assert np.all(res.lam == 0) and np.all(res.Lambda == 0)


def test_design1_oracle():
    res = tikhonov_comparator(r_design1, beta_design1, 1e-4, 200)
    a = np.linspace(0.05, 0.95, 91)
    assert np.max(np.abs(res(a) - a ** (2 / 3))) < 0.05
    assert res.residual < 1e-10


def test_operator_exact_on_linear_functions():
    t, K = operator_matrix(beta_design1, 101)
    np.testing.assert_allclose(K @ np.ones(101), t**2 - t, atol=1e-13)
    np.testing.assert_allclose(K @ t, 0.5 * (t**4 - t**2), atol=1e-13)


def test_trapezoid_weights():
    w = trapezoid_weights(5)
    np.testing.assert_allclose(w, [0.125, 0.25, 0.25, 0.25, 0.125])


def test_guards():
    with pytest.raises(ValueError):
        tikhonov_comparator(r_design1, beta_design1, 0.0)
    with pytest.raises(ValueError):
        tikhonov_comparator(r_design1, beta_design1, 1e-3, m=20)


def test_more_regularisation_shrinks_solution():
    small = tikhonov_comparator(r_design1, beta_design1, 1e-5)
    large = tikhonov_comparator(r_design1, beta_design1, 1e-1)
    assert np.abs(large.lam).max() < np.abs(small.lam).max()
