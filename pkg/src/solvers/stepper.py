"""
Fixed-step method-of-steps integrator for constant-lag delay systems.

Integrates y'(t) = f(t, y(t), y(t - tau)) with the classical four-stage
Runge-Kutta scheme and step h = tau / m. Full-step delayed arguments land on
stored nodes; half-step ones are read through the Hermite dense output of the
history buffer.

Example:
    >>> import numpy as np
    >>> from src.solvers import StepperConfig, init_history, integrate
    >>>
    >>> config = StepperConfig(tau=0.2, m=100, t_end=5.0, state_dim=1)
    >>> history = init_history(lambda s: np.array([1.0]), config.tau, config.m)
    >>> result = integrate(lambda t, y, yd: -1.0 * yd, history, config)
    >>> result.final_state
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence

import numpy as np

from src.exceptions import DivergenceError
from src.solvers.history import HistoryBuffer

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StepperConfig:
    """
    Step layout of one integration run.

    Attributes:
        tau: Delay (> 0).
        m: Substeps per delay interval (>= 2), so h = tau / m.
        t_end: Horizon (> 0). The run takes ceil(t_end / h) steps so every
               node stays on the grid k * h: the last node is the first grid
               node at or after t_end and final_time exceeds t_end by less
               than h. When t_end is a multiple of h (within 1e-9) the last
               node is exactly t_end.
        state_dim: Length of the flat state vector.
    """

    tau: float
    m: int
    t_end: float
    state_dim: int

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be a finite positive number, got {self.tau}")
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m}")
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be a finite positive number, got {self.t_end}")
        if int(self.state_dim) != self.state_dim or self.state_dim < 1:
            raise ValueError(f"state_dim must be a positive integer, got {self.state_dim}")

    @property
    def h(self) -> float:
        return self.tau / self.m

    @property
    def n_steps(self) -> int:
        ratio = self.t_end / self.h
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return int(np.ceil(ratio))

    @property
    def n_intervals(self) -> int:
        """Number of delay intervals touched by the run."""
        return int(np.ceil(self.n_steps / self.m))


class Observer:
    """
    Per-node callback base class.

    Subclasses override observe(); the integrator calls it at t = 0 and after
    every accepted step. Setting retain_full_history = True asks the
    integrator to keep the whole history instead of a sliding window.
    """

    retain_full_history: bool = False

    def observe(self, k: int, t: float, state: np.ndarray, history: HistoryBuffer) -> None:
        raise NotImplementedError

    def result(self) -> Any:
        return None


class CallbackObserver(Observer):
    """Adapter turning a plain function f(k, t, state, history) into an observer."""

    def __init__(self, callback: Callable, retain_full_history: bool = False):
        self.callback = callback
        self.retain_full_history = retain_full_history
        self._outputs: List[Any] = []

    def observe(self, k, t, state, history):
        out = self.callback(k, t, state, history)
        if out is not None:
            self._outputs.append(out)

    def result(self) -> List[Any]:
        return self._outputs


@dataclass
class IntegrationResult:
    """
    Outcome of integrate().

    Attributes:
        history: The history buffer after the last accepted node.
        final_time: Time of the last accepted node.
        final_state: State at final_time.
        observer_outputs: observer.result() for each observer, in order.
        n_steps: Number of accepted steps.
    """

    history: HistoryBuffer
    final_time: float
    final_state: np.ndarray
    observer_outputs: List[Any] = field(default_factory=list)
    n_steps: int = 0


def _as_observer(obj) -> Observer:
    if isinstance(obj, Observer):
        return obj
    if callable(obj):
        return CallbackObserver(obj)
    raise TypeError(f"Observers must be Observer instances or callables, got {type(obj)}")


def _checked(vector: np.ndarray, t: float, history: HistoryBuffer) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    if not np.all(np.isfinite(vector)):
        raise DivergenceError(t, history)
    return vector


def integrate(
    rhs: RHS,
    history: HistoryBuffer,
    config: StepperConfig,
    observers: Optional[Sequence] = None,
) -> IntegrationResult:
    """
    Integrate a constant-lag delay system by RK4 method of steps.

    Args:
        rhs: f(t, state, delayed_state) -> derivative (flat vectors).
        history: Buffer spanning [-tau, 0] (e.g. from init_history). It is
                 extended in place.
        config: Step layout; tau and m must match the history.
        observers: Observer instances or callables f(k, t, state, history),
                   invoked at every accepted node including t = 0.

    Returns:
        IntegrationResult with the final history and observer outputs.

    Raises:
        ValueError: If history and config disagree on tau, m or state_dim,
                    or the history does not end at t = 0.
        DivergenceError: If a non-finite state or derivative appears; carries
                         the node time of the blow-up.
    """
    if abs(history.tau - config.tau) > 1e-12 * config.tau or history.m != config.m:
        raise ValueError(
            f"History (tau={history.tau}, m={history.m}) does not match "
            f"config (tau={config.tau}, m={config.m})"
        )
    if history.state_dim != config.state_dim:
        raise ValueError(
            f"History state_dim {history.state_dim} != config state_dim {config.state_dim}"
        )
    if history.last_index != 0 or history.first_index > -config.m:
        raise ValueError("History must span exactly the datum interval [-tau, 0]")

    observers = [_as_observer(o) for o in (observers or [])]
    if any(o.retain_full_history for o in observers):
        history.retain_all()

    m = config.m
    h = config.h
    half = 0.5 * h
    n_steps = config.n_steps

    y = history.state_at_node(0)
    d0 = _checked(rhs(0.0, y, history.state_at_node(-m)), 0.0, history)
    history.start_solution(d0)

    logger.debug(
        "Integrating %d steps of h=%.3g (tau=%.6g, m=%d, state_dim=%d)",
        n_steps, h, config.tau, m, config.state_dim,
    )

    for obs in observers:
        obs.observe(0, 0.0, y.copy(), history)

    k1 = d0
    for n in range(n_steps):
        t = n * h
        t_next = (n + 1) * h
        delayed_mid = history.lookup((n - m + 0.5) * h)
        delayed_next = history.state_at_node(n + 1 - m)

        k2 = rhs(t + half, y + half * k1, delayed_mid)
        k3 = rhs(t + half, y + half * k2, delayed_mid)
        k4 = rhs(t_next, y + h * k3, delayed_next)
        y = _checked(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t_next, history)

        k1 = _checked(rhs(t_next, y, delayed_next), t_next, history)
        history.append(n + 1, y, k1)

        for obs in observers:
            obs.observe(n + 1, t_next, y.copy(), history)

    return IntegrationResult(
        history=history,
        final_time=n_steps * h,
        final_state=y.copy(),
        observer_outputs=[o.result() for o in observers],
        n_steps=n_steps,
    )
