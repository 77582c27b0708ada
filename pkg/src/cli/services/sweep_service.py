"""
Parameter sweeps: independent runs over one axis (tau, lambda or N).
"""

import logging
import multiprocessing as mp
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.cli.config import RunConfig
from src.cli.services.simulation_service import SimulationService
from src.cli.services.theory_service import CriticalDelayService

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["value", "verdict", "final_V", "tau_c", "oscillations"]


def _run_point(task: Tuple[RunConfig, str, float]) -> Dict[str, Any]:
    """Execute one sweep point; module level so worker processes can pickle it."""
    config, axis, value = task
    point = config.with_value(axis, value)
    outcome = SimulationService(point).run(with_ledger=False)
    report = CriticalDelayService(point).run()["report"]
    return {
        "value": int(value) if axis == "N" else float(value),
        "verdict": outcome.verdict.value,
        "final_V": outcome.summary["final_V"],
        "tau_c": float(report.tau_c),
        "oscillations": outcome.summary["oscillations"],
    }


class SweepService:
    """
    Fan independent runs out over the values of one axis.

    Rows come back in input order (ordered imap); tau_c is the critical delay
    of each point's datum and parameters, so it varies along lambda and N axes.

    Attributes:
        config (RunConfig): Base configuration; sweep.axis and sweep.values
                            are used unless overridden.
        threads (int): Worker processes (1 runs in-process).
        show_progress (bool): Report progress with tqdm on stderr.
    """

    def __init__(self, config: RunConfig, threads: int = 1, show_progress: bool = True):
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.config = config
        self.threads = threads
        self.show_progress = show_progress

    def run(self, axis: str = None, values: Sequence[float] = None) -> pd.DataFrame:
        """
        One row per value: value, verdict, final_V, tau_c, oscillations.

        An empty value list gives an empty table.
        """
        axis = axis or self.config.sweep.axis
        values = list(self.config.sweep.values if values is None else values)
        if not values:
            logger.info("Empty %s sweep: nothing to run", axis)
            return pd.DataFrame(columns=SWEEP_COLUMNS)

        # fail fast on an invalid axis before spawning workers
        self.config.with_value(axis, values[0])
        tasks = [(self.config, axis, float(v)) for v in values]

        rows: List[Dict[str, Any]] = []
        progress = tqdm(total=len(tasks), desc=f"{axis} sweep", disable=not self.show_progress)
        if self.threads == 1 or len(tasks) == 1:
            for row in map(_run_point, tasks):
                rows.append(row)
                progress.update(1)
        else:
            with mp.Pool(processes=min(self.threads, len(tasks))) as pool:
                for row in pool.imap(_run_point, tasks):
                    rows.append(row)
                    progress.update(1)
        progress.close()

        table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
        logger.info(
            "%s sweep over %d values: %s",
            axis, len(table), dict(table["verdict"].value_counts()),
        )
        return table


def verdict_transition(table: pd.DataFrame) -> Dict[str, Any]:
    """
    First value at which the verdict stops being Flocking.

    Returns:
        Dictionary with 'flocking_at_start' and 'first_non_flocking' (None if
        every row flocks).
    """
    if table.empty:
        return {"flocking_at_start": None, "first_non_flocking": None}
    flocking = table["verdict"].to_numpy() == "Flocking"
    misses = np.flatnonzero(~flocking)
    return {
        "flocking_at_start": bool(flocking[0]),
        "first_non_flocking": float(table["value"].iloc[misses[0]]) if misses.size else None,
    }
