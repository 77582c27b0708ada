"""
Wiring of the delayed Cucker-Smale system into the method-of-steps solver.
"""

import logging
from typing import Optional, Sequence

from src.models.cucker_smale import ModelParams, make_flat_rhs
from src.models.initial_data import InitialDatum
from src.solvers import IntegrationResult, StepperConfig, init_history, integrate

logger = logging.getLogger(__name__)


def engine_tau(params: ModelParams, m: int, undelayed_step: float) -> float:
    """
    Delay used to lay out the solver grid.

    For tau = 0 the system has no delay; the grid then uses h = undelayed_step
    and the right-hand side ignores its delayed argument.
    """
    return params.tau if params.tau > 0 else m * undelayed_step


def simulate(
    params: ModelParams,
    datum: InitialDatum,
    m: int,
    t_end: float,
    observers: Optional[Sequence] = None,
    undelayed_step: float = 1e-2,
) -> IntegrationResult:
    """
    Integrate the system from an initial datum.

    Args:
        params: Model parameters (lambda, tau, kernel).
        datum: Trajectory on [-tau, 0].
        m: Steps per delay interval, h = tau / m.
        t_end: Horizon.
        observers: Per-node observers passed to the solver.
        undelayed_step: Step size used when tau = 0.

    Returns:
        IntegrationResult of the flat state [x, v].

    Raises:
        DivergenceError: If the state blows up.
    """
    tau = engine_tau(params, m, undelayed_step)
    config = StepperConfig(tau=tau, m=m, t_end=t_end, state_dim=2 * datum.N * datum.d)
    history = init_history(
        datum.flat_trajectory(), tau, m, derivative=datum.flat_derivative()
    )
    logger.info(
        "Simulating N=%d d=%d lambda=%g tau=%g kernel=%s over t_end=%g (h=%.3g)",
        datum.N, datum.d, params.lam, params.tau, params.kernel.describe(), t_end, config.h,
    )
    rhs = make_flat_rhs(params, datum.N, datum.d)
    return integrate(rhs, history, config, observers)
