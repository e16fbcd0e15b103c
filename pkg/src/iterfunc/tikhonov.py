"""Tikhonov-regularised estimate of Lambda through its derivative.

Solves ``int_alpha^{beta(alpha)} lambda(t) dt = r(alpha)`` on a uniform grid
with ``lambda = (rho I + K* K)^{-1} K* r`` and integrates ``lambda``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import LinAlgError, cho_factor, cho_solve


@dataclass(frozen=True, eq=False)
class TikhonovResult:
    grid: np.ndarray
    lam: np.ndarray
    Lambda: np.ndarray
    residual: float

    def __call__(self, alpha):
        return np.interp(alpha, self.grid, self.Lambda)


def _hat_integral(s):
    # integral of the unit hat function up to s (in units of the spacing)
    s = np.clip(s, -1.0, 1.0)
    return np.where(s <= 0, 0.5 * (1.0 + s) ** 2, 1.0 - 0.5 * (1.0 - s) ** 2)


def operator_matrix(beta, m):
    """Matrix of ``(K lambda)(t_i) = int_{t_i}^{beta(t_i)} lambda`` for
    piecewise-linear ``lambda`` on ``m`` uniform nodes of [0, 1]."""
    t = np.linspace(0.0, 1.0, m)
    d = t[1] - t[0]
    b = np.clip(np.asarray(beta(t), dtype=float), 0.0, 1.0)
    upper = _hat_integral((b[:, None] - t[None, :]) / d)
    lower = _hat_integral((t[:, None] - t[None, :]) / d)
    return t, d * (upper - lower)


def trapezoid_weights(m):
    w = np.full(m, 1.0 / (m - 1))
    w[[0, -1]] *= 0.5
    return w


def tikhonov_comparator(r, beta, rho, m=200):
    """Regularised solution on ``m`` nodes.

    Parameters
    ----------
    r, beta : callables on arrays of alpha in [0, 1].
    rho : positive regularisation weight.
    m : number of grid nodes.

    ``K*`` is the adjoint of ``K`` under the trapezoid inner product, so
    ``rho I + K* K`` is similar to the symmetric positive definite matrix
    ``rho W + K^T W K`` solved here.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if m < 50:
        raise ValueError("need at least 50 grid nodes")
    t, K = operator_matrix(beta, m)
    w = trapezoid_weights(m)
    rv = np.asarray(r(t), dtype=float)
    A = rho * np.diag(w) + K.T @ (w[:, None] * K)
    rhs = K.T @ (w * rv)
    try:
        lam = cho_solve(cho_factor(A), rhs)
    except LinAlgError as exc:
        raise LinAlgError("regularised normal equations are not positive definite") from exc
    Kstar = (K.T * w[None, :]) / w[:, None]
    residual = float(np.max(np.abs(rho * lam + Kstar @ (K @ lam) - Kstar @ rv)))
    Lam = cumulative_trapezoid(lam, t, initial=0.0)
    return TikhonovResult(t, lam, Lam, residual)
