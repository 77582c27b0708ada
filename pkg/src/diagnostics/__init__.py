"""
Diagnostics module for delayed flocking runs.

Functionals (V, D, d_X, phi, L), initial-datum quantities (L0, M0), per-node
recording, verdict detectors and the inequality ledger.
"""

from .detectors import (
    FlockingVerdict,
    count_increases,
    count_sign_changes,
    detect_flocking,
    detect_oscillation,
)
from .functionals import (
    InitialDatumReport,
    initial_datum_report,
    initial_L0,
    initial_M0,
    lyapunov,
    min_interaction,
    momentum,
    position_diameter,
    velocity_fluctuation,
    velocity_fluctuation_derivative,
    weighted_fluctuation,
    weighted_fluctuation_derivative,
)
from .inequalities import (
    InequalityLedger,
    InequalityOptions,
    backward_forward_margins,
    check_inequalities,
)
from .recorder import DiagnosticsRecord, DiagnosticsRecorder, RunHistory

__all__ = [
    "FlockingVerdict",
    "count_increases",
    "count_sign_changes",
    "detect_flocking",
    "detect_oscillation",
    "InitialDatumReport",
    "initial_datum_report",
    "initial_L0",
    "initial_M0",
    "lyapunov",
    "min_interaction",
    "momentum",
    "position_diameter",
    "velocity_fluctuation",
    "velocity_fluctuation_derivative",
    "weighted_fluctuation",
    "weighted_fluctuation_derivative",
    "InequalityLedger",
    "InequalityOptions",
    "backward_forward_margins",
    "check_inequalities",
    "DiagnosticsRecord",
    "DiagnosticsRecorder",
    "RunHistory",
]
