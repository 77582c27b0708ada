"""
Stability regimes of the delay negative feedback equation u'(t) = -lambda u(t - tau).

The dynamics depend on lambda * tau only:

    0 < lambda*tau < 1/e        non-oscillatory, u -> 0
    1/e <= lambda*tau < pi/2    oscillatory, u -> 0
    lambda*tau >= pi/2          oscillatory with unbounded amplitude

Boundary values are assigned to the higher (more pessimistic) regime.
"""

import logging
from enum import Enum

import numpy as np
from scipy.optimize import bisect

logger = logging.getLogger(__name__)

NON_OSCILLATORY_LIMIT = float(np.exp(-1.0))
STABILITY_LIMIT = float(np.pi / 2.0)


class FeedbackRegime(str, Enum):
    NON_OSCILLATORY_STABLE = "NonOscillatoryStable"
    OSCILLATORY_STABLE = "OscillatoryStable"
    UNSTABLE = "Unstable"


def classify_feedback(lambda_tau: float) -> FeedbackRegime:
    """
    Regime of u' = -lambda u(t - tau) for a given product lambda * tau.

    Raises:
        ValueError: If lambda_tau is not a finite positive number.
    """
    if not (np.isfinite(lambda_tau) and lambda_tau > 0):
        raise ValueError(f"lambda*tau must be a finite positive number, got {lambda_tau}")
    if lambda_tau < NON_OSCILLATORY_LIMIT:
        return FeedbackRegime.NON_OSCILLATORY_STABLE
    if lambda_tau < STABILITY_LIMIT:
        return FeedbackRegime.OSCILLATORY_STABLE
    return FeedbackRegime.UNSTABLE


def zstar_residual(z: float) -> float:
    return z * np.exp(2.0 * np.e * z) - 1.0


def solve_zstar(lo: float = 0.1, hi: float = 0.4) -> float:
    """
    Real root z* of z e^{2 e z} = 1 (z* ~ 0.252).

    Below z* the squared amplitude y = u^2 / 2 of the feedback equation obeys
    an explicit exponential decay estimate.
    """
    width = hi - lo
    root = bisect(zstar_residual, lo, hi, xtol=1e-14 * width, maxiter=200)
    logger.debug("z* = %.15f (residual %.3e)", root, zstar_residual(root))
    return float(root)
