"""
Subcommand implementations: run a service and serialise its artifacts.

Every command writes a JSON document that embeds the resolved configuration,
next to the CSV table(s) of the run. Files land in the output directory given
on the command line (or Config.OUT_DIR).
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

from src.cli.config import RunConfig
from src.cli.services import (
    CriticalDelayService,
    FeedbackService,
    SimulationService,
    SweepService,
    ValidationService,
    verdict_transition,
)

logger = logging.getLogger(__name__)


def jsonable(value: Any) -> Any:
    """Plain JSON types; infinities become 'inf'/'-inf' and NaN becomes null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return None
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def write_csv(path: Path, table: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)
    logger.info("Wrote %s (%d rows)", path, len(table))
    return path


def cmd_simulate(config: RunConfig, out_dir: Path) -> Dict[str, Any]:
    """
    Integrate the configured system.

    Writes the time series (columns t, V, D, dX, phi, L, p_1..p_d; L empty for
    t <= tau) every outputs.stride nodes, and the run summary.

    Returns:
        The summary dictionary (verdict under 'verdict').
    """
    outcome = SimulationService(config).run()
    write_csv(out_dir / config.outputs.csv, outcome.frame(config.outputs.stride))
    write_json(out_dir / config.outputs.report, outcome.summary)
    return outcome.summary


def cmd_critical_delay(config: RunConfig, out_dir: Path) -> Dict[str, Any]:
    """Critical-delay report of the configured datum, written to critical_delay.json."""
    service = CriticalDelayService(config)
    payload = service.to_dict(service.run())
    write_json(out_dir / "critical_delay.json", payload)
    return payload


def cmd_sweep(
    config: RunConfig, out_dir: Path, threads: int = 1, show_progress: bool = True
) -> pd.DataFrame:
    """
    Independent runs over sweep.values of sweep.axis.

    Writes sweep.csv (value, verdict, final_V, tau_c, oscillations) and
    sweep.json with the verdict transition and the configuration.
    """
    table = SweepService(config, threads=threads, show_progress=show_progress).run()
    write_csv(out_dir / "sweep.csv", table)
    write_json(
        out_dir / "sweep.json",
        {
            "axis": config.sweep.axis,
            "rows": len(table),
            "transition": verdict_transition(table),
            "config": config.to_dict(),
        },
    )
    return table


def cmd_validate(config: RunConfig, out_dir: Path) -> Dict[str, Any]:
    """
    Kernel validation, inequality ledger and backward-forward check.

    Writes ledger.csv (check, t, lhs, rhs, margin, passed) when a ledger was
    evaluated, and validation.json.
    """
    result = ValidationService(config).run()
    ledger = result["ledger"]
    if ledger is not None:
        write_csv(out_dir / "ledger.csv", ledger.entries)
        result["ledger"] = {"all_passed": ledger.all_passed(), "checks": ledger.summary()}
    write_json(out_dir / "validation.json", result)
    return result


def cmd_feedback(config: RunConfig, out_dir: Path) -> Dict[str, Any]:
    """Exact (t, u) samples in feedback.csv and the regime summary in feedback.json."""
    result = FeedbackService(config).run()
    write_csv(out_dir / "feedback.csv", result["profile"])
    write_json(out_dir / "feedback.json", result["summary"])
    return result["summary"]
