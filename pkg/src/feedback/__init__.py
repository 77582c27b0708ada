"""
Feedback module: the scalar delay negative feedback equation obtained from
two agents with a constant communication rate.
"""

from .feedback_lab import (
    MAX_INTERVALS,
    ExactFeedbackSolution,
    FeedbackProblem,
    backward_forward_flow_check,
    cross_validate,
    energy_decay_check,
    engine_solve,
    exact_solve,
    first_sign_change,
    oscillation_profile,
    scaling_collapse,
    threshold_bisect,
)

__all__ = [
    "MAX_INTERVALS",
    "ExactFeedbackSolution",
    "FeedbackProblem",
    "backward_forward_flow_check",
    "cross_validate",
    "energy_decay_check",
    "engine_solve",
    "exact_solve",
    "first_sign_change",
    "oscillation_profile",
    "scaling_collapse",
    "threshold_bisect",
]
