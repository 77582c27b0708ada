"""
Per-node recording of the flocking functionals during a run.

DiagnosticsRecorder is a solver observer. It evaluates V, D, d_X, phi, the
momentum and the analytic derivatives of V and D at every accepted node and
also back-fills the datum nodes on [-tau, 0], so that the Lyapunov functional
and the history integrals of the inequality ledger can be formed after the
run from these scalar series alone.

Example:
    >>> from src.diagnostics import DiagnosticsRecorder
    >>> from src.models import simulate
    >>>
    >>> recorder = DiagnosticsRecorder(params, N=10, d=2, m=100, h=params.tau / 100)
    >>> result = simulate(params, datum, m=100, t_end=10.0, observers=[recorder])
    >>> run = result.observer_outputs[0]
    >>> run.frame(stride=10).head()
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from src.diagnostics.functionals import (
    lyapunov_series,
    momentum,
    position_diameter,
    velocity_fluctuation,
    velocity_fluctuation_derivative,
    weighted_fluctuation,
    weighted_fluctuation_derivative,
)
from src.models.cucker_smale import EnsembleState, ModelParams
from src.solvers.stepper import Observer

logger = logging.getLogger(__name__)


@dataclass
class DiagnosticsRecord:
    """Functionals at one node time."""

    t: float
    V: float
    D: float
    dX: float
    phi: float
    L: Optional[float]
    momentum: np.ndarray


class RunHistory:
    """
    Scalar series of one run on the node grid, starting at node -m.

    Array position i corresponds to node k = i - m (time (i - m) * h). The
    derivative columns dV and dD are NaN on the datum nodes k < 0 and hold
    the right derivatives at k = 0.

    Attributes:
        params: Model parameters of the run.
        m, h: Grid layout.
        N, d: Ensemble shape.
    """

    def __init__(self, params: ModelParams, m: int, h: float, N: int, d: int):
        self.params = params
        self.m = m
        self.h = h
        self.N = N
        self.d = d
        self._columns = {name: [] for name in ("V", "D", "dX", "phi", "dV", "dD")}
        self._momentum: List[np.ndarray] = []
        self._cache: Optional[dict] = None

    def add(self, V, D, dX, phi, dV, dD, p) -> None:
        for name, value in zip(("V", "D", "dX", "phi", "dV", "dD"), (V, D, dX, phi, dV, dD)):
            self._columns[name].append(value)
        self._momentum.append(np.asarray(p, dtype=float))
        self._cache = None

    def _arrays(self) -> dict:
        if self._cache is None:
            self._cache = {name: np.asarray(vals, dtype=float) for name, vals in self._columns.items()}
            self._cache["P"] = np.asarray(self._momentum, dtype=float).reshape(-1, self.d)
        return self._cache

    def __len__(self) -> int:
        return len(self._columns["V"])

    @property
    def k(self) -> np.ndarray:
        return np.arange(len(self)) - self.m

    @property
    def t(self) -> np.ndarray:
        return self.k * self.h

    @property
    def V(self) -> np.ndarray:
        return self._arrays()["V"]

    @property
    def D(self) -> np.ndarray:
        return self._arrays()["D"]

    @property
    def dX(self) -> np.ndarray:
        return self._arrays()["dX"]

    @property
    def phi(self) -> np.ndarray:
        return self._arrays()["phi"]

    @property
    def dV(self) -> np.ndarray:
        return self._arrays()["dV"]

    @property
    def dD(self) -> np.ndarray:
        return self._arrays()["dD"]

    @property
    def P(self) -> np.ndarray:
        return self._arrays()["P"]

    @property
    def tau(self) -> float:
        return self.params.tau

    def position(self, k: int) -> int:
        """Array position of node k."""
        return k + self.m

    def lyapunov(self) -> np.ndarray:
        """L on every node (NaN for t < tau); equals V when tau = 0."""
        if self.params.tau == 0:
            return self.V.copy()
        return lyapunov_series(self.V, self.D, self.m, self.h, self.params)

    def frame(self, stride: int = 1, include_datum: bool = False) -> pd.DataFrame:
        """
        Series as a DataFrame with columns t, V, D, dX, phi, L, p_1..p_d.

        L is left empty (NaN) for t <= tau.

        Args:
            stride: Keep every stride-th node of the solution (the last node
                    is always kept).
            include_datum: Also emit the datum nodes t < 0.
        """
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        L = self.lyapunov()
        if self.params.tau > 0:
            L[: 2 * self.m + 1] = np.nan

        data = {"t": self.t, "V": self.V, "D": self.D, "dX": self.dX, "phi": self.phi, "L": L}
        for axis in range(self.d):
            data[f"p_{axis + 1}"] = self.P[:, axis]
        df = pd.DataFrame(data)

        start = 0 if include_datum else self.m
        idx = np.arange(start, len(df))
        solution = idx[idx >= self.m]
        keep = solution[(solution - self.m) % stride == 0]
        if len(solution) and keep[-1] != solution[-1]:
            keep = np.append(keep, solution[-1])
        if include_datum:
            keep = np.concatenate([idx[idx < self.m], keep])
        return df.iloc[keep].reset_index(drop=True)

    def records(self, stride: int = 1) -> List[DiagnosticsRecord]:
        """Solution nodes as DiagnosticsRecord objects."""
        df = self.frame(stride=stride)
        p_cols = [f"p_{axis + 1}" for axis in range(self.d)]
        return [
            DiagnosticsRecord(
                t=row.t,
                V=row.V,
                D=row.D,
                dX=row.dX,
                phi=row.phi,
                L=None if np.isnan(row.L) else row.L,
                momentum=np.array([getattr(row, c) for c in p_cols]),
            )
            for row in df.itertuples(index=False)
        ]

    def value_at(self, column: str, t: float) -> float:
        """Value of a series at the node nearest to t."""
        k = int(round(t / self.h))
        i = self.position(k)
        if not 0 <= i < len(self):
            raise IndexError(f"t={t} outside the recorded range")
        return float(getattr(self, column)[i])

    def to_dict(self) -> dict:
        final = self.frame().iloc[-1]
        return {
            "n_nodes": len(self) - self.m,
            "final": {k: (None if pd.isna(v) else float(v)) for k, v in final.items()},
        }


class DiagnosticsRecorder(Observer):
    """
    Observer filling a RunHistory with per-node functionals.

    Args:
        params: Model parameters.
        N, d: Ensemble shape.
        m: Steps per delay interval of the solver grid.
        h: Step size of the solver grid.
        retain_full_history: Ask the solver to keep every state node.
    """

    def __init__(
        self,
        params: ModelParams,
        N: int,
        d: int,
        m: int,
        h: float,
        retain_full_history: bool = False,
    ):
        self.params = params
        self.N = N
        self.d = d
        self.m = m
        self.h = h
        self.retain_full_history = retain_full_history
        self.history = RunHistory(params, m, h, N, d)

    def _state(self, flat: np.ndarray) -> EnsembleState:
        return EnsembleState.unpack(flat, self.N, self.d)

    def _record(self, state: EnsembleState, delayed: Optional[EnsembleState]) -> None:
        kernel = self.params.kernel
        dX = position_diameter(state)
        if delayed is None:
            dV = dD = np.nan
        else:
            dV = velocity_fluctuation_derivative(state, delayed, self.params)
            dD = weighted_fluctuation_derivative(state, delayed, self.params)
        self.history.add(
            V=velocity_fluctuation(state),
            D=weighted_fluctuation(state, kernel),
            dX=dX,
            phi=float(kernel.evaluate(dX)),
            dV=dV,
            dD=dD,
            p=momentum(state),
        )

    def observe(self, k, t, state, history) -> None:
        if k == 0:
            for j in range(-self.m, 0):
                self._record(self._state(history.state_at_node(j)), None)
        current = self._state(state)
        if self.params.tau == 0:
            delayed = current
        else:
            delayed = self._state(history.state_at_node(k - self.m))
        self._record(current, delayed)

    def result(self) -> RunHistory:
        logger.debug("Recorded %d nodes", len(self.history))
        return self.history
