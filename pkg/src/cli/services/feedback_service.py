"""
Feedback service: the two-agent reduction u' = -lambda u(t - tau) for a run configuration.
"""

import logging
from typing import Any, Dict

from src.cli.config import RunConfig
from src.diagnostics import count_sign_changes
from src.exceptions import ConfigError
from src.feedback import (
    FeedbackProblem,
    backward_forward_flow_check,
    energy_decay_check,
    first_sign_change,
    oscillation_profile,
)
from src.theory import FeedbackRegime, classify_feedback, solve_zstar

logger = logging.getLogger(__name__)


class FeedbackService:
    """
    Exact oracle for the lambda and tau of a run configuration.

    The horizon of the feedback section is measured in delay units. The decay
    estimates are only reported in the regimes where they apply (lambda*tau
    below z* and below 1/e respectively).
    """

    def __init__(self, config: RunConfig):
        if config.model.tau <= 0:
            raise ConfigError("model.tau", "the feedback oracle needs tau > 0")
        self.config = config
        section = config.feedback
        self.problem = FeedbackProblem(
            lam=config.model.lam,
            tau=config.model.tau,
            u0=section.u0,
            t_end=section.horizon * config.model.tau,
        )

    def run(self) -> Dict[str, Any]:
        """
        Returns:
            Dictionary with 'profile' (DataFrame t, u) and 'summary'.
        """
        resolution = self.config.feedback.resolution
        problem = self.problem
        profile = oscillation_profile(problem, resolution)
        regime = classify_feedback(problem.lambda_tau)

        summary: Dict[str, Any] = {
            "lambda_tau": problem.lambda_tau,
            "regime": regime.value,
            "first_sign_change": first_sign_change(problem, resolution),
            "sign_changes": count_sign_changes(profile["u"].to_numpy()),
            "final_u": float(profile["u"].iloc[-1]),
            "config": self.config.to_dict(),
        }
        zstar = solve_zstar()
        if problem.lambda_tau < zstar:
            summary["energy_decay"] = energy_decay_check(problem, resolution)
        if regime is FeedbackRegime.NON_OSCILLATORY_STABLE and resolution % 8 == 0:
            summary["backward_forward"] = backward_forward_flow_check(problem, resolution=resolution)
        logger.info(
            "Feedback lambda*tau=%.6g: %s, %d sign changes",
            problem.lambda_tau, regime.value, summary["sign_changes"],
        )
        return {"profile": profile, "summary": summary}
