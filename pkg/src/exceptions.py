"""
Exception hierarchy shared by the flocking toolkit.

All domain failures derive from FlockingError so that the command line front
end can map them to exit codes in one place. Plain input validation keeps
using ValueError / TypeError.
"""


class FlockingError(Exception):
    """Base class for all toolkit errors."""


class HistoryWindowError(FlockingError):
    """Raised when a delayed-state lookup falls outside the stored window."""

    def __init__(self, t_query: float, span: tuple):
        self.t_query = t_query
        self.span = span
        super().__init__(
            f"Lookup at t={t_query:.12g} outside stored history "
            f"[{span[0]:.12g}, {span[1]:.12g}]"
        )


class DivergenceError(FlockingError):
    """
    Raised when the integrated state stops being finite.

    Attributes:
        time: First node time at which a non-finite value appeared.
        history: The history buffer as it stood before the failing node.
    """

    def __init__(self, time: float, history=None):
        self.time = float(time)
        self.history = history
        super().__init__(f"Non-finite state encountered at t={self.time:.6g}")


class TrivialDatumError(FlockingError):
    """Raised when all initial velocities coincide (D(0) = 0)."""


class BracketError(FlockingError):
    """Raised when a bisection bracket does not enclose a sign change."""


class HorizonError(FlockingError):
    """Raised when the exact feedback solver is asked beyond its supported span."""

    def __init__(self, requested: float, supported: float):
        self.requested = requested
        self.supported = supported
        super().__init__(
            f"Horizon {requested:.6g} exceeds the supported span {supported:.6g} "
            "(at most 700 delay intervals)"
        )


class ConfigError(FlockingError):
    """
    Raised for invalid run configurations.

    Attributes:
        path: Dotted path of the offending field (e.g. 'model.kernel.beta').
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


__all__ = [
    "FlockingError",
    "HistoryWindowError",
    "DivergenceError",
    "TrivialDatumError",
    "BracketError",
    "HorizonError",
    "ConfigError",
]
