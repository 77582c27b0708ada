"""
Delay Differential Equation Solvers

This module provides fixed-step method-of-steps integration for constant-lag
delay systems, with node-aligned dense history storage.
"""

from .history import HistoryBuffer, hermite_interpolate, init_history
from .stepper import (
    CallbackObserver,
    IntegrationResult,
    Observer,
    StepperConfig,
    integrate,
)

__all__ = [
    "HistoryBuffer",
    "hermite_interpolate",
    "init_history",
    "CallbackObserver",
    "IntegrationResult",
    "Observer",
    "StepperConfig",
    "integrate",
]
