"""
Critical delay service: datum quantities and the matching recipe path.
"""

import logging
from dataclasses import replace
from typing import Any, Dict

from src.cli.config import RunConfig
from src.diagnostics import initial_datum_report, initial_L0
from src.theory import (
    CONSTANT_DATUM,
    GENERAL_DATUM,
    CriticalDelayReport,
    critical_delay_constant,
    critical_delay_general,
)

logger = logging.getLogger(__name__)


class CriticalDelayService:
    """
    Compute L0 and M0 from the configured datum and run the critical-delay recipe.

    Constant data take the constant-datum path, everything else the general
    path with L0 re-evaluated for each trial delay. A datum with coinciding
    velocities yields a trivial report (tau_c = inf) with an explanatory note.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.params = config.params()
        self.datum = config.datum()

    def run(self) -> Dict[str, Any]:
        """
        Returns:
            Dictionary with 'report' (CriticalDelayReport) and 'datum'
            (InitialDatumReport).
        """
        grid = self.config.theory.datum_grid
        datum_report = initial_datum_report(self.datum, self.params, grid)
        path = CONSTANT_DATUM if self.datum.is_constant else GENERAL_DATUM
        lam, alpha = self.params.lam, self.params.kernel.alpha
        tau = self.params.tau if self.params.tau > 0 else None

        if not datum_report.m0_defined:
            report = CriticalDelayReport.trivial(
                path,
                datum_report.L0,
                "all initial velocities coincide: D(0) = 0 and flocking is immediate",
            )
        elif self.datum.is_constant:
            report = critical_delay_constant(
                lam, alpha, datum_report.V0, datum_report.D0, M0=datum_report.M0, tau=tau
            )
        else:
            def L0_of_tau(t: float) -> float:
                return initial_L0(self.datum, replace(self.params, tau=t), grid)

            report = critical_delay_general(
                lam, datum_report.M0, L0_of_tau, alpha, margin=self.config.theory.margin, tau=tau
            )
        logger.info("Critical delay (%s): tau_c=%.6g", report.path, report.tau_c)
        return {"report": report, "datum": datum_report}

    def to_dict(self, result: Dict[str, Any]) -> Dict[str, Any]:
        return {
            "report": result["report"].to_dict(),
            "datum": result["datum"].to_dict(),
            "config": self.config.to_dict(),
        }
