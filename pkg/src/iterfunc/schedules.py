"""Nonlinear price schedules P(q) with their first two derivatives."""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial


@dataclass(frozen=True)
class PriceSchedule:
    """Total price ``P`` paid for quantity ``q``, scaled by ``tau``.

    ``value``, ``deriv`` and ``deriv2`` return the unscaled schedule; the
    first-order condition uses ``tau * deriv(q)`` (see :meth:`marginal`).
    """

    value_fn: Callable
    deriv_fn: Callable
    deriv2_fn: Callable
    tau: float = 1.0
    label: str = ""

    @classmethod
    def polynomial(cls, coefficients, tau=1.0, label=""):
        """Schedule ``P(q) = sum_k c_k q^k`` from ascending coefficients."""
        p = Polynomial(np.asarray(coefficients, dtype=float))
        return cls(p, p.deriv(1), p.deriv(2), tau, label)

    @classmethod
    def from_theta(cls, theta, tau=1.0, label=""):
        """Schedule ``Psi(q) = theta_0 q + theta_1 q^2 + ...`` (no intercept)."""
        return cls.polynomial(np.concatenate(([0.0], np.asarray(theta, dtype=float))), tau, label)

    def value(self, q):
        return self.value_fn(np.asarray(q, dtype=float))

    def deriv(self, q):
        return self.deriv_fn(np.asarray(q, dtype=float))

    def deriv2(self, q):
        return self.deriv2_fn(np.asarray(q, dtype=float))

    def marginal(self, q):
        """Scaled marginal price ``tau * P'(q)``."""
        return self.tau * self.deriv(q)

    def with_tau(self, tau):
        return PriceSchedule(self.value_fn, self.deriv_fn, self.deriv2_fn, float(tau), self.label)

    def shifted(self, q_lower):
        """Schedule of the normalized quantity ``q - q_lower``."""
        if q_lower == 0:
            return self
        f, d1, d2 = self.value_fn, self.deriv_fn, self.deriv2_fn
        return PriceSchedule(lambda x: f(x + q_lower), lambda x: d1(x + q_lower),
                             lambda x: d2(x + q_lower), self.tau, self.label)
