"""
Dense history storage for constant-lag delay equations.

The buffer keeps states and derivatives on an equally spaced node grid
t_k = k * h with h = tau / m, so that for every node t the delayed time
t - tau is again a node (index k - m). Off-node queries are answered by cubic
Hermite interpolation on the bracketing (state, derivative) pairs.

Example:
    >>> import numpy as np
    >>> from src.solvers.history import init_history
    >>>
    >>> history = init_history(lambda s: np.array([np.sin(s)]), tau=1.0, m=100)
    >>> history.lookup(-0.505)
"""

import logging
from typing import Callable, Optional

import numpy as np

from src.exceptions import HistoryWindowError

logger = logging.getLogger(__name__)

# Relative tolerance (in units of h) for recognising a query time as a node.
NODE_TOLERANCE = 1e-9


def hermite_interpolate(
    theta: float,
    h: float,
    y0: np.ndarray,
    y1: np.ndarray,
    d0: np.ndarray,
    d1: np.ndarray,
) -> np.ndarray:
    """
    Cubic Hermite interpolant on [t0, t0 + h] at t0 + theta * h.

    Args:
        theta: Relative position in [0, 1].
        h: Interval length.
        y0, y1: States at the interval ends.
        d0, d1: Derivatives at the interval ends.

    Returns:
        Interpolated state (reproduces cubic polynomials exactly).
    """
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


class HistoryBuffer:
    """
    Node-aligned record of (state, derivative) samples.

    The buffer runs in one of two modes:
    - sliding: a ring of m + 2 slots covering [t_now - tau - h, t_now], which
      is all the integrator needs;
    - full retention: every node since -tau is kept (needed when an observer
      evaluates history integrals such as the Lyapunov functional).

    Derivatives are stored as right derivatives. The node t = 0 is where the
    prescribed datum meets the solution, so its left derivative (the datum's)
    is kept separately and used for Hermite data on [-h, 0].

    Attributes:
        tau: Delay.
        m: Number of steps per delay interval (h = tau / m).
        h: Step size.
        state_dim: Length of the flat state vector.
    """

    def __init__(self, tau: float, m: int, state_dim: int, retain_full: bool = False):
        """
        Create an empty buffer.

        Args:
            tau: Delay, must be > 0.
            m: Integer substeps per delay interval, must be >= 2.
            state_dim: Flat state length, must be >= 1.
            retain_full: Keep every node instead of a sliding window.

        Raises:
            ValueError: If tau, m or state_dim are not admissible.
        """
        if not (np.isfinite(tau) and tau > 0):
            raise ValueError(f"tau must be a finite positive number, got {tau}")
        if int(m) != m or m < 2:
            raise ValueError(f"m must be an integer >= 2, got {m}")
        if int(state_dim) != state_dim or state_dim < 1:
            raise ValueError(f"state_dim must be a positive integer, got {state_dim}")

        self.tau = float(tau)
        self.m = int(m)
        self.h = self.tau / self.m
        self.state_dim = int(state_dim)
        self.retain_full = bool(retain_full)

        capacity = 2 * (self.m + 1) if self.retain_full else self.m + 2
        self._states = np.empty((capacity, self.state_dim))
        self._derivatives = np.empty((capacity, self.state_dim))
        self._first: Optional[int] = None
        self._last: Optional[int] = None
        self._zero_left_derivative: Optional[np.ndarray] = None

    # ------------------------------------------------------------------
    # Storage
    # ------------------------------------------------------------------

    @property
    def capacity(self) -> int:
        return self._states.shape[0]

    def _slot(self, k: int) -> int:
        if self.retain_full:
            return k + self.m
        return (k + self.m) % self.capacity

    def _grow(self, needed: int) -> None:
        capacity = self.capacity
        while capacity < needed:
            capacity *= 2
        states = np.empty((capacity, self.state_dim))
        derivatives = np.empty((capacity, self.state_dim))
        n = self._states.shape[0]
        states[:n] = self._states
        derivatives[:n] = self._derivatives
        self._states, self._derivatives = states, derivatives

    def append(self, k: int, state: np.ndarray, derivative: np.ndarray) -> None:
        """
        Store node k. Nodes must be appended with consecutive indices.

        Raises:
            ValueError: If k does not follow the last stored node or shapes
                        do not match state_dim.
        """
        state = np.asarray(state, dtype=float).reshape(-1)
        derivative = np.asarray(derivative, dtype=float).reshape(-1)
        if state.shape[0] != self.state_dim or derivative.shape[0] != self.state_dim:
            raise ValueError(
                f"Expected vectors of length {self.state_dim}, got "
                f"{state.shape[0]} and {derivative.shape[0]}"
            )
        if self._last is not None and k != self._last + 1:
            raise ValueError(f"Node {k} does not follow node {self._last}")

        if self.retain_full and self._slot(k) >= self.capacity:
            self._grow(self._slot(k) + 1)

        slot = self._slot(k)
        self._states[slot] = state
        self._derivatives[slot] = derivative

        if self._first is None:
            self._first = k
        self._last = k
        if not self.retain_full and self._last - self._first + 1 > self.capacity:
            self._first = self._last - self.capacity + 1

    def retain_all(self) -> None:
        """
        Switch to full retention. Only possible while nothing has been evicted.

        Raises:
            RuntimeError: If the sliding window already dropped nodes.
        """
        if self.retain_full:
            return
        if self._first is not None and self._first > -self.m:
            raise RuntimeError("Cannot switch to full retention after eviction")
        indices = self.node_indices
        states = self.states
        derivatives = self.derivatives
        self.retain_full = True
        self._states = np.empty((max(2 * (self.m + 1), len(indices)), self.state_dim))
        self._derivatives = np.empty_like(self._states)
        for i, k in enumerate(indices):
            self._states[self._slot(k)] = states[i]
            self._derivatives[self._slot(k)] = derivatives[i]

    def start_solution(self, derivative_at_zero: np.ndarray) -> None:
        """
        Record the right derivative at t = 0 (the RHS at 0+).

        The datum derivative already stored at node 0 is kept as its left
        derivative for interpolation on [-h, 0].
        """
        if self._first is None or not (self._first <= 0 <= self._last):
            raise ValueError("Node 0 is not stored in the history")
        slot = self._slot(0)
        if self._zero_left_derivative is None:
            self._zero_left_derivative = self._derivatives[slot].copy()
        self._derivatives[slot] = np.asarray(derivative_at_zero, dtype=float).reshape(-1)

    # ------------------------------------------------------------------
    # Access
    # ------------------------------------------------------------------

    @property
    def first_index(self) -> int:
        return self._first

    @property
    def last_index(self) -> int:
        return self._last

    @property
    def span(self) -> tuple:
        """Closed time interval covered by the stored nodes."""
        if self._first is None:
            return (np.nan, np.nan)
        return (self._first * self.h, self._last * self.h)

    @property
    def node_indices(self) -> np.ndarray:
        if self._first is None:
            return np.empty(0, dtype=int)
        return np.arange(self._first, self._last + 1)

    @property
    def times(self) -> np.ndarray:
        """Node times k * h of the retained nodes, oldest first."""
        return self.node_indices * self.h

    @property
    def states(self) -> np.ndarray:
        """Retained states, one row per node, oldest first."""
        return self._states[[self._slot(k) for k in self.node_indices]]

    @property
    def derivatives(self) -> np.ndarray:
        """Retained (right) derivatives, one row per node, oldest first."""
        return self._derivatives[[self._slot(k) for k in self.node_indices]]

    def __len__(self) -> int:
        return 0 if self._first is None else self._last - self._first + 1

    def has_node(self, k: int) -> bool:
        return self._first is not None and self._first <= k <= self._last

    def state_at_node(self, k: int) -> np.ndarray:
        """
        Stored state at node k (a copy).

        Raises:
            HistoryWindowError: If node k is not retained.
        """
        if not self.has_node(k):
            raise HistoryWindowError(k * self.h, self.span)
        return self._states[self._slot(k)].copy()

    def derivative_at_node(self, k: int, side: str = "right") -> np.ndarray:
        """Stored derivative at node k; side='left' differs only at k = 0."""
        if not self.has_node(k):
            raise HistoryWindowError(k * self.h, self.span)
        if side == "left" and k == 0 and self._zero_left_derivative is not None:
            return self._zero_left_derivative.copy()
        return self._derivatives[self._slot(k)].copy()

    def node_index(self, t: float) -> Optional[int]:
        """Index k with k * h == t (within NODE_TOLERANCE * h), else None."""
        k = int(round(t / self.h))
        if abs(t - k * self.h) <= NODE_TOLERANCE * self.h:
            return k
        return None

    def lookup(self, t_query: float) -> np.ndarray:
        """
        State at t_query.

        Node hits return the stored state bit for bit; other times inside the
        span use cubic Hermite interpolation between the bracketing nodes.

        Raises:
            HistoryWindowError: If t_query lies outside the stored span.
        """
        if self._first is None:
            raise HistoryWindowError(t_query, self.span)

        k = self.node_index(t_query)
        if k is not None:
            return self.state_at_node(k)

        lo, hi = self.span
        if not (lo < t_query < hi):
            raise HistoryWindowError(t_query, self.span)

        k0 = int(np.floor(t_query / self.h))
        k1 = k0 + 1
        theta = (t_query - k0 * self.h) / self.h
        return hermite_interpolate(
            theta,
            self.h,
            self._states[self._slot(k0)],
            self._states[self._slot(k1)],
            self.derivative_at_node(k0, side="right"),
            self.derivative_at_node(k1, side="left"),
        )

    def __repr__(self) -> str:
        lo, hi = self.span
        return (
            f"HistoryBuffer(tau={self.tau}, m={self.m}, nodes={len(self)}, "
            f"span=[{lo:.6g}, {hi:.6g}], retain_full={self.retain_full})"
        )


def _finite_difference_derivatives(states: np.ndarray, h: float) -> np.ndarray:
    """Second-order differences: central inside, one-sided at both ends."""
    derivatives = np.empty_like(states)
    derivatives[1:-1] = (states[2:] - states[:-2]) / (2.0 * h)
    derivatives[0] = (-3.0 * states[0] + 4.0 * states[1] - states[2]) / (2.0 * h)
    derivatives[-1] = (3.0 * states[-1] - 4.0 * states[-2] + states[-3]) / (2.0 * h)
    return derivatives


def init_history(
    initial_trajectory: Callable[[float], np.ndarray],
    tau: float,
    m: int,
    derivative: Optional[Callable[[float], np.ndarray]] = None,
    retain_full: bool = False,
) -> HistoryBuffer:
    """
    Populate a history buffer from a prescribed datum on [-tau, 0].

    Args:
        initial_trajectory: Function s -> state vector, continuous on [-tau, 0].
        tau: Delay (> 0).
        m: Substeps per delay interval (>= 2).
        derivative: Optional exact derivative s -> vector. When omitted the
                    derivatives are second-order finite differences of the
                    node states (one-sided at -tau and 0).
        retain_full: Keep every future node as well.

    Returns:
        HistoryBuffer holding nodes -tau, -tau + h, ..., 0.

    Raises:
        ValueError: If the trajectory yields non-finite values or vectors of
                    inconsistent length.

    Example:
        >>> history = init_history(lambda s: np.array([1.0 + 2.0 * s]), 1.0, 4)
        >>> history.derivative_at_node(-2)
        array([2.])
    """
    if int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m}")
    h = tau / m
    indices = np.arange(-int(m), 1)
    try:
        states = np.vstack(
            [np.asarray(initial_trajectory(k * h), dtype=float).reshape(-1) for k in indices]
        )
    except ValueError as e:
        raise ValueError(f"Initial trajectory returned inconsistent vectors: {e}")

    if not np.all(np.isfinite(states)):
        raise ValueError("Initial trajectory contains non-finite values")

    if derivative is not None:
        derivatives = np.vstack(
            [np.asarray(derivative(k * h), dtype=float).reshape(-1) for k in indices]
        )
        if derivatives.shape != states.shape or not np.all(np.isfinite(derivatives)):
            raise ValueError("Initial derivative must be finite and match the state shape")
    else:
        derivatives = _finite_difference_derivatives(states, h)

    history = HistoryBuffer(tau, m, states.shape[1], retain_full=retain_full)
    for k, state, d in zip(indices, states, derivatives):
        history.append(int(k), state, d)

    logger.debug("Initialised %r", history)
    return history
