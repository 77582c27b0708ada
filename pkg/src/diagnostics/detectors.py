"""
Verdicts on recorded series: flocking, divergence and oscillation.
"""

import logging
from enum import Enum
from typing import Dict, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class FlockingVerdict(str, Enum):
    FLOCKING = "Flocking"
    NOT_DECIDED = "NotDecided"
    DIVERGED = "Diverged"


def _series(series, column: str) -> np.ndarray:
    if isinstance(series, pd.DataFrame):
        return series[column].to_numpy(dtype=float)
    if hasattr(series, column) and not isinstance(series, (list, tuple)):
        return np.asarray(getattr(series, column), dtype=float)
    # list of DiagnosticsRecord
    return np.array([getattr(rec, column) for rec in series], dtype=float)


def detect_flocking(
    series: Union[pd.DataFrame, Sequence],
    v_tol: float = 1e-6,
    window: int = 10,
    dx_cap: float = 1e6,
    growth_factor: float = 100.0,
) -> FlockingVerdict:
    """
    Classify a run from its V and d_X series.

    Diverged: a non-finite value, d_X beyond dx_cap, or the trailing-window
    maximum of V at least growth_factor times the leading-window maximum.
    Flocking: sqrt(2 V) < v_tol at the last sample with d_X bounded.
    NotDecided: anything else.

    Args:
        series: DataFrame (columns V, dX), RunHistory or list of records.
        v_tol: Tolerance on the pairwise velocity spread at the horizon.
        window: Number of samples in the leading/trailing windows.
        dx_cap: Bound on the position diameter.
        growth_factor: Ratio of trailing to leading V maxima that counts as blow-up.

    Returns:
        FlockingVerdict.
    """
    V = _series(series, "V")
    dX = _series(series, "dX")
    if V.size == 0:
        raise ValueError("Cannot classify an empty series")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")

    if not (np.all(np.isfinite(V)) and np.all(np.isfinite(dX))):
        return FlockingVerdict.DIVERGED
    if np.max(dX) > dx_cap:
        return FlockingVerdict.DIVERGED

    w = min(window, V.size)
    lead = float(np.max(V[:w]))
    trail = float(np.max(V[-w:]))
    if lead > 0 and trail >= growth_factor * lead:
        return FlockingVerdict.DIVERGED

    if np.sqrt(2.0 * max(V[-1], 0.0)) < v_tol:
        return FlockingVerdict.FLOCKING
    return FlockingVerdict.NOT_DECIDED


def count_sign_changes(values: Sequence[float]) -> int:
    """Strict sign changes of a series; exact zeros are skipped."""
    arr = np.asarray(values, dtype=float)
    signs = np.sign(arr[arr != 0])
    return int(np.sum(signs[1:] != signs[:-1]))


def count_increases(values: Sequence[float], atol: float = 0.0, rtol: float = 0.0) -> int:
    """Number of samples where the series rises by more than atol + rtol * |previous|."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return 0
    prev = arr[:-1]
    return int(np.sum(arr[1:] > prev + atol + rtol * np.abs(prev)))


def detect_oscillation(
    series: Union[pd.DataFrame, Sequence],
    column: str = "V",
    atol: float = 0.0,
    rtol: float = 1e-12,
) -> Dict[str, object]:
    """
    Oscillation summary of one column.

    For a signed series (e.g. a scalar velocity) the sign changes are the
    relevant count; for a non-negative fluctuation series the number of
    increases shows non-monotone decay.

    Returns:
        Dictionary with 'sign_changes', 'increases' and 'monotone'.
    """
    if isinstance(series, np.ndarray) or (
        isinstance(series, (list, tuple)) and (not series or np.isscalar(series[0]))
    ):
        values = np.asarray(series, dtype=float)
    else:
        values = _series(series, column)

    increases = count_increases(values, atol=atol, rtol=rtol)
    result = {
        "sign_changes": count_sign_changes(values),
        "increases": increases,
        "monotone": increases == 0,
    }
    logger.debug("Oscillation summary for %s: %s", column, result)
    return result
