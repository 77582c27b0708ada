"""
Services package: run orchestration behind the command line subcommands.
"""

from .feedback_service import FeedbackService
from .simulation_service import SimulationOutcome, SimulationService, ValidationService
from .sweep_service import SWEEP_COLUMNS, SweepService, verdict_transition
from .theory_service import CriticalDelayService

__all__ = [
    "FeedbackService",
    "SimulationOutcome",
    "SimulationService",
    "ValidationService",
    "SWEEP_COLUMNS",
    "SweepService",
    "verdict_transition",
    "CriticalDelayService",
]
