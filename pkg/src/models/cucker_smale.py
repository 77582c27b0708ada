"""
Delayed Cucker-Smale System

This module provides the ensemble state, the model parameters and the
right-hand side of the Cucker-Smale system with reaction-type delay:

    x_i' = v_i
    v_i' = (lambda / N) * sum_j psi(|x~_i - x~_j|) (v~_j - v~_i)

where the tilde marks values at t - tau. Positions move with the current
velocity; the velocity update only sees the delayed configuration.

Example:
    >>> import numpy as np
    >>> from src.models import EnsembleState, Kernel, ModelParams, cs_rhs
    >>>
    >>> params = ModelParams(lam=1.0, tau=0.1, kernel=Kernel.cucker_smale(0.3))
    >>> state = EnsembleState(x=np.zeros((2, 1)), v=np.array([[0.5], [-0.5]]))
    >>> derivative = cs_rhs(0.0, state, state, params)
    >>> derivative.v
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.models.kernels import Kernel

logger = logging.getLogger(__name__)


@dataclass
class EnsembleState:
    """
    Positions and velocities of N agents in d dimensions at one time.

    Attributes:
        x: Positions, shape (N, d).
        v: Velocities, shape (N, d).
    """

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.v = np.atleast_2d(np.asarray(self.v, dtype=float))
        if self.x.shape != self.v.shape:
            raise ValueError(
                f"Positions {self.x.shape} and velocities {self.v.shape} must share (N, d)"
            )
        if self.x.shape[0] < 2 or self.x.shape[1] < 1:
            raise ValueError(f"Expected shape (N, d) with N >= 2 and d >= 1, got {self.x.shape}")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise ValueError("Ensemble state contains non-finite entries")

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def pack(self) -> np.ndarray:
        """Flat vector [x_1, ..., x_N, v_1, ..., v_N] of length 2*N*d."""
        return np.concatenate([self.x.reshape(-1), self.v.reshape(-1)])

    @classmethod
    def unpack(cls, flat: np.ndarray, N: int, d: int) -> "EnsembleState":
        """Inverse of pack()."""
        flat = np.asarray(flat, dtype=float).reshape(-1)
        if flat.shape[0] != 2 * N * d:
            raise ValueError(f"Flat state of length {flat.shape[0]} != 2*N*d = {2 * N * d}")
        n = N * d
        return cls(x=flat[:n].reshape(N, d), v=flat[n:].reshape(N, d))

    def copy(self) -> "EnsembleState":
        return EnsembleState(x=self.x.copy(), v=self.v.copy())


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the delayed system.

    Attributes:
        lam: Coupling strength lambda > 0.
        tau: Delay tau >= 0 (tau = 0 is the classical undelayed system).
        kernel: Communication rate.
    """

    lam: float
    tau: float
    kernel: Kernel

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be a finite positive number, got {self.lam}")
        if not (np.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")
        if not isinstance(self.kernel, Kernel):
            raise TypeError(f"kernel must be a Kernel, got {type(self.kernel)}")

    @property
    def lambda_tau(self) -> float:
        return self.lam * self.tau


def pairwise_differences(z: np.ndarray) -> np.ndarray:
    """Array D with D[i, j] = z_i - z_j, shape (N, N, d)."""
    return z[:, None, :] - z[None, :, :]


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix |x_i - x_j|, exactly symmetric with zero diagonal."""
    return np.sqrt(np.sum(pairwise_differences(x) ** 2, axis=-1))


def interaction_matrix(x: np.ndarray, kernel: Kernel) -> np.ndarray:
    """psi(|x_i - x_j|) with the diagonal (self-interaction) set to zero."""
    psi = kernel.evaluate(pairwise_distances(x))
    np.fill_diagonal(psi, 0.0)
    return psi


def velocity_update(delayed: EnsembleState, params: ModelParams) -> np.ndarray:
    """
    Alignment acceleration (lambda/N) * sum_j psi~_ij (v~_j - v~_i), shape (N, d).

    The j = i term is skipped rather than relying on psi(0) * 0.
    """
    psi = interaction_matrix(delayed.x, params.kernel)
    weighted = psi @ delayed.v
    return (params.lam / delayed.N) * (weighted - psi.sum(axis=1)[:, None] * delayed.v)


def cs_rhs(
    t: float, state: EnsembleState, delayed: EnsembleState, params: ModelParams
) -> EnsembleState:
    """
    Right-hand side of the delayed Cucker-Smale system.

    Args:
        t: Time (the system is autonomous; kept for the solver interface).
        state: Current state (only its velocities enter, as x' = v).
        delayed: State at t - tau.
        params: Model parameters.

    Returns:
        EnsembleState holding (x', v').

    Raises:
        ValueError: If state and delayed do not share (N, d).
    """
    if state.x.shape != delayed.x.shape:
        raise ValueError(
            f"Current state {state.x.shape} and delayed state {delayed.x.shape} differ in (N, d)"
        )
    return EnsembleState(x=state.v.copy(), v=velocity_update(delayed, params))


def make_flat_rhs(
    params: ModelParams, N: int, d: int
) -> Callable[[float, np.ndarray, np.ndarray], np.ndarray]:
    """
    Wrap cs_rhs for the flat-vector solver interface.

    For tau = 0 the delayed argument is ignored and the current state is used
    in its place, giving the classical Cucker-Smale system.
    """
    n = N * d
    undelayed = params.tau == 0

    def rhs(t: float, flat: np.ndarray, delayed_flat: np.ndarray) -> np.ndarray:
        source = flat if undelayed else delayed_flat
        delayed = _view(source, N, d, n)
        acceleration = velocity_update(delayed, params)
        return np.concatenate([flat[n:], acceleration.reshape(-1)])

    return rhs


class _StateView:
    """Unchecked (x, v) view of a flat vector for the inner loop."""

    __slots__ = ("x", "v", "N")

    def __init__(self, x: np.ndarray, v: np.ndarray):
        self.x = x
        self.v = v
        self.N = x.shape[0]


def _view(flat: np.ndarray, N: int, d: int, n: int) -> _StateView:
    return _StateView(flat[:n].reshape(N, d), flat[n:].reshape(N, d))
