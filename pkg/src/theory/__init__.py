"""
Theory module: feedback regimes and the critical-delay recipe.
"""

from .critical_delay import (
    CONSTANT_DATUM,
    GENERAL_DATUM,
    Condition,
    CriticalDelayReport,
    critical_delay_constant,
    critical_delay_general,
    decay_envelope,
    decay_rate,
    l0_constant,
    n_scaling_sweep,
    tail_decay_slope,
    verify_backward_forward,
    verify_backward_forward_generic,
)
from .feedback_regimes import FeedbackRegime, classify_feedback, solve_zstar

__all__ = [
    "CONSTANT_DATUM",
    "GENERAL_DATUM",
    "Condition",
    "CriticalDelayReport",
    "critical_delay_constant",
    "critical_delay_general",
    "decay_envelope",
    "decay_rate",
    "l0_constant",
    "n_scaling_sweep",
    "tail_decay_slope",
    "verify_backward_forward",
    "verify_backward_forward_generic",
    "FeedbackRegime",
    "classify_feedback",
    "solve_zstar",
]
