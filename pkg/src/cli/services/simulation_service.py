"""
Simulation and validation services.

SimulationService drives one delayed Cucker-Smale run from a RunConfig and
condenses it into the time-series table and the run summary. ValidationService
reruns with full history retention and evaluates every estimate checker.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.cli.config import RunConfig
from src.cli.services.theory_service import CriticalDelayService
from src.diagnostics import (
    DiagnosticsRecorder,
    FlockingVerdict,
    InequalityOptions,
    RunHistory,
    check_inequalities,
    detect_flocking,
    detect_oscillation,
    initial_datum_report,
)
from src.exceptions import DivergenceError
from src.models import simulate, validate_kernel
from src.models.simulation import engine_tau
from src.theory import verify_backward_forward

logger = logging.getLogger(__name__)

KERNEL_GRID = np.concatenate([[0.0], np.logspace(-3, 3, 61)])
MOMENTUM_TOL = 1e-8


@dataclass
class SimulationOutcome:
    """
    Result of one run.

    Attributes:
        run: Recorded diagnostics (partial when the run diverged).
        verdict: Flocking verdict of the recorded series.
        diverged_at: Blow-up time, None when the run completed.
        summary: JSON-ready summary (config embedded).
    """

    run: RunHistory
    verdict: FlockingVerdict
    diverged_at: Optional[float] = None
    summary: Dict[str, Any] = field(default_factory=dict)

    def frame(self, stride: int) -> pd.DataFrame:
        return self.run.frame(stride=stride)


class SimulationService:
    """
    Run the configured system and summarise it.

    Attributes:
        config (RunConfig): Resolved run configuration.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.params = config.params()
        self.datum = config.datum()

    def _recorder(self, retain_full_history: bool) -> DiagnosticsRecorder:
        m = self.config.integration.m
        tau = engine_tau(self.params, m, self.config.integration.undelayed_step)
        return DiagnosticsRecorder(
            self.params,
            self.datum.N,
            self.datum.d,
            m=m,
            h=tau / m,
            retain_full_history=retain_full_history,
        )

    def integrate(self, retain_full_history: bool = False):
        """
        Integrate and return (run history, blow-up time or None).

        A DivergenceError is absorbed: the nodes recorded before the blow-up
        are returned together with its time.
        """
        recorder = self._recorder(retain_full_history)
        integration = self.config.integration
        try:
            result = simulate(
                self.params,
                self.datum,
                m=integration.m,
                t_end=integration.t_end,
                observers=[recorder],
                undelayed_step=integration.undelayed_step,
            )
        except DivergenceError as exc:
            logger.warning("Run diverged at t=%.6g", exc.time)
            return recorder.result(), exc.time
        return result.observer_outputs[0], None

    def _momentum_drift(self, run: RunHistory) -> Dict[str, float]:
        """Absolute drift max_t |P(t) - P(0)| and its tolerance 1e-8 (1 + |P(0)|)."""
        P = run.P[run.m :]
        P = P[np.all(np.isfinite(P), axis=1)]
        if not len(P):
            return {"drift": 0.0, "tolerance": MOMENTUM_TOL}
        drift = float(np.max(np.linalg.norm(P - P[0], axis=1)))
        return {"drift": drift, "tolerance": MOMENTUM_TOL * (1.0 + float(np.linalg.norm(P[0])))}

    def verdict(self, run: RunHistory, diverged_at: Optional[float]) -> FlockingVerdict:
        """Flocking verdict of a recorded run; a blow-up is always Diverged."""
        if diverged_at is not None:
            return FlockingVerdict.DIVERGED
        detection = self.config.detection
        return detect_flocking(
            run.frame(), v_tol=detection.v_tol, window=detection.window, dx_cap=detection.dx_cap
        )

    def _ledger_margins(self, run: RunHistory, L0: float, diverged: bool) -> Dict[str, Any]:
        if self.params.tau == 0:
            return {"skipped": "undelayed run"}
        if diverged:
            return {"skipped": "diverged run"}
        try:
            ledger = check_inequalities(run, self.params, L0)
        except ValueError as exc:
            return {"skipped": str(exc)}
        return ledger.worst_margins()

    def run(self, with_ledger: bool = True) -> SimulationOutcome:
        """
        Integrate and build the summary.

        Summary keys: verdict, diverged_at, final_t, final_V, min_L, max_L,
        momentum_drift (absolute), momentum_tolerance, oscillations, datum
        (L0, M0, V0, D0), ledger_worst_margins and the resolved config.
        """
        run, diverged_at = self.integrate()
        frame = run.frame()
        verdict = self.verdict(run, diverged_at)
        momentum = self._momentum_drift(run)

        datum_report = initial_datum_report(self.datum, self.params, self.config.theory.datum_grid)
        L = frame["L"].dropna()
        summary: Dict[str, Any] = {
            "verdict": verdict.value,
            "diverged_at": diverged_at,
            "final_t": float(frame["t"].iloc[-1]),
            "final_V": float(frame["V"].iloc[-1]),
            "min_L": float(L.min()) if len(L) else None,
            "max_L": float(L.max()) if len(L) else None,
            "momentum_drift": momentum["drift"],
            "momentum_tolerance": momentum["tolerance"],
            "oscillations": detect_oscillation(frame, column="V")["increases"],
            "datum": datum_report.to_dict(),
            "config": self.config.to_dict(),
        }
        if with_ledger:
            summary["ledger_worst_margins"] = self._ledger_margins(
                run, datum_report.L0, diverged_at is not None
            )
        logger.info(
            "Run finished: verdict=%s final V=%.6g", verdict.value, summary["final_V"]
        )
        return SimulationOutcome(run=run, verdict=verdict, diverged_at=diverged_at, summary=summary)


class ValidationService:
    """
    Kernel assumptions, inequality ledger and backward-forward check of one run.

    The critical-delay report supplies the rate mu for the checks that need
    one; a trivial datum leaves them skipped.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.simulation = SimulationService(config)

    def run(self) -> Dict[str, Any]:
        params = self.simulation.params
        kernel_report = validate_kernel(params.kernel, KERNEL_GRID, warn=True)

        theory = CriticalDelayService(self.config).run()
        report = theory["report"]
        mu = report.mu if np.isfinite(report.mu) else None

        run, diverged_at = self.simulation.integrate(retain_full_history=True)
        result: Dict[str, Any] = {
            "kernel": kernel_report,
            "critical_delay": report.to_dict(),
            "verdict": self.simulation.verdict(run, diverged_at).value,
            "diverged_at": diverged_at,
            "config": self.config.to_dict(),
            "ledger": None,
            "backward_forward": None,
        }
        if params.tau == 0:
            result["note"] = "undelayed run: delayed estimates are not defined"
            return result
        if diverged_at is not None:
            result["note"] = f"run diverged at t={diverged_at:.6g}"
            return result

        ledger = check_inequalities(
            run, params, theory["datum"].L0, InequalityOptions(mu=mu)
        )
        result["ledger"] = ledger
        if mu is not None:
            result["backward_forward"] = verify_backward_forward(
                run.D, params.lam, mu, params.tau, run.m
            )
        if not ledger.all_passed():
            warnings.warn(
                f"{len(ledger.violations())} ledger entries violate their estimate "
                f"(checks: {sorted(set(ledger.violations()['check']))})",
                UserWarning,
            )
        return result
