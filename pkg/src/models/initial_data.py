"""
Initial data on the delay interval [-tau, 0].

Builders for the prescribed position/velocity trajectories:
- constant data (the generic case),
- a seeded random cloud (positions uniform in a box, velocities uniform in
  [-spread, spread]^d then mean-removed so the total momentum is zero),
- a linear velocity ramp with matching quadratic positions, for
  non-constant history tests.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.models.cucker_smale import EnsembleState

logger = logging.getLogger(__name__)


@dataclass
class InitialDatum:
    """
    Trajectory s -> EnsembleState on [-tau, 0].

    Attributes:
        trajectory: Function of s returning the ensemble state.
        derivative: Optional exact time derivative (as an EnsembleState).
        is_constant: True when the datum does not depend on s.
        N, d: Ensemble shape.
        kind: Short label used in reports ('constant', 'random_cloud', ...).
    """

    trajectory: Callable[[float], EnsembleState]
    N: int
    d: int
    is_constant: bool
    derivative: Optional[Callable[[float], EnsembleState]] = None
    kind: str = "constant"

    def at(self, s: float) -> EnsembleState:
        return self.trajectory(s)

    def flat_trajectory(self) -> Callable[[float], np.ndarray]:
        return lambda s: self.trajectory(s).pack()

    def flat_derivative(self) -> Optional[Callable[[float], np.ndarray]]:
        if self.derivative is None:
            return None
        return lambda s: self.derivative(s).pack()


def constant_datum(x0: np.ndarray, v0: np.ndarray, kind: str = "constant") -> InitialDatum:
    """
    Datum equal to (x0, v0) on the whole delay interval.

    Raises:
        ValueError: If x0 and v0 do not share shape (N, d) or hold non-finite values.
    """
    state = EnsembleState(x=x0, v=v0)
    zero = EnsembleState(x=np.zeros_like(state.x), v=np.zeros_like(state.v))
    return InitialDatum(
        trajectory=lambda s: state.copy(),
        derivative=lambda s: zero.copy(),
        N=state.N,
        d=state.d,
        is_constant=True,
        kind=kind,
    )


def random_cloud(
    N: int,
    d: int,
    position_box: float,
    velocity_spread: float,
    seed: int,
) -> InitialDatum:
    """
    Seeded constant datum: positions uniform in [0, box]^d, velocities uniform
    in [-spread, spread]^d with their mean removed.

    Args:
        N: Number of agents (>= 2).
        d: Space dimension (>= 1).
        position_box: Side length of the position box (>= 0).
        velocity_spread: Half-width of the velocity box (>= 0).
        seed: Seed for numpy's default generator.

    Returns:
        Constant InitialDatum.
    """
    if N < 2 or d < 1:
        raise ValueError(f"Need N >= 2 and d >= 1, got N={N}, d={d}")
    if position_box < 0 or velocity_spread < 0:
        raise ValueError("position_box and velocity_spread must be non-negative")

    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, position_box, size=(N, d))
    v0 = rng.uniform(-velocity_spread, velocity_spread, size=(N, d))
    v0 = v0 - v0.mean(axis=0, keepdims=True)
    logger.debug("Random cloud N=%d d=%d box=%g spread=%g seed=%d", N, d, position_box, velocity_spread, seed)
    return constant_datum(x0, v0, kind="random_cloud")


def linear_ramp(x0: np.ndarray, v0: np.ndarray, slope: np.ndarray) -> InitialDatum:
    """
    Non-constant datum v(s) = v0 + slope * s, x(s) = x0 + v0 * s + slope * s^2 / 2.

    Positions are the exact antiderivative of the velocities, so x' = v holds
    on the datum interval as well.
    """
    base = EnsembleState(x=x0, v=v0)
    slope = np.broadcast_to(np.asarray(slope, dtype=float), base.v.shape).copy()
    if not np.all(np.isfinite(slope)):
        raise ValueError("slope must be finite")

    def trajectory(s: float) -> EnsembleState:
        return EnsembleState(x=base.x + base.v * s + 0.5 * slope * s * s, v=base.v + slope * s)

    def derivative(s: float) -> EnsembleState:
        return EnsembleState(x=base.v + slope * s, v=slope.copy())

    return InitialDatum(
        trajectory=trajectory,
        derivative=derivative,
        N=base.N,
        d=base.d,
        is_constant=not np.any(slope),
        kind="linear_ramp",
    )
