"""
Communication Rates

This module provides the communication rate psi(r) of the Cucker-Smale model,
its derivative, and grid checks of the three structural assumptions:

    (psi0)  psi(r) <= 1                         for all r >= 0
    (psi1)  psi(r) >= c * r^(gamma - 1)          for all r >= R, some 0 < gamma < 1
    (psi2)  psi'(r) >= -alpha * psi(r)            for all r > 0

Two kernels are supported: the prototype rate psi(r) = (1 + r^2)^(-beta) with
alpha = 2 * beta, and a constant rate in (0, 1] with alpha = 0.

Example:
    >>> from src.models.kernels import Kernel, validate_kernel
    >>>
    >>> kernel = Kernel.cucker_smale(beta=0.25, gamma=0.5, c=0.5, R=1.0)
    >>> kernel.evaluate(1.0)
    >>> report = validate_kernel(kernel, [1, 10, 100, 1000])
    >>> print(report["all_passed"])
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

CUCKER_SMALE = "cucker_smale"
CONSTANT = "constant"

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Kernel:
    """
    Communication rate with its assumption constants.

    Attributes:
        kind: 'cucker_smale' or 'constant'.
        beta: Decay exponent of the prototype rate (>= 0).
        value: Rate of the constant kernel, in (0, 1].
        gamma, c, R: Tail constants of (psi1). For the prototype rate with
                     beta < 1/2 and no constants given, the admissible choice
                     gamma = 1 - 2*beta, c = 2^(-beta), R = 1 is used.
    """

    kind: str = CUCKER_SMALE
    beta: float = 0.0
    value: float = 1.0
    gamma: Optional[float] = None
    c: Optional[float] = None
    R: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (CUCKER_SMALE, CONSTANT):
            raise ValueError(f"kind must be '{CUCKER_SMALE}' or '{CONSTANT}', got '{self.kind}'")
        if self.kind == CUCKER_SMALE and not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if self.kind == CONSTANT and not (0 < self.value <= 1):
            raise ValueError(f"constant kernel value must lie in (0, 1], got {self.value}")

    @classmethod
    def cucker_smale(
        cls,
        beta: float,
        gamma: Optional[float] = None,
        c: Optional[float] = None,
        R: Optional[float] = None,
    ) -> "Kernel":
        return cls(kind=CUCKER_SMALE, beta=float(beta), gamma=gamma, c=c, R=R)

    @classmethod
    def constant(cls, value: float = 1.0) -> "Kernel":
        return cls(kind=CONSTANT, value=float(value))

    @property
    def alpha(self) -> float:
        """Constant of (psi2): 2*beta for the prototype rate, 0 for a constant one."""
        return 2.0 * self.beta if self.kind == CUCKER_SMALE else 0.0

    def tail_constants(self) -> Optional[Dict[str, float]]:
        """(gamma, c, R) for (psi1), explicit or the default admissible choice."""
        if self.gamma is not None and self.c is not None and self.R is not None:
            return {"gamma": float(self.gamma), "c": float(self.c), "R": float(self.R)}
        if self.kind == CONSTANT:
            return {"gamma": 0.5, "c": self.value, "R": 1.0}
        if self.beta < 0.5:
            gamma = 1.0 - 2.0 * self.beta if self.beta > 0 else 0.5
            return {"gamma": gamma, "c": 2.0 ** (-self.beta), "R": 1.0}
        return None

    def evaluate(self, r: ArrayLike) -> Union[float, np.ndarray]:
        """
        psi(r) for distances r >= 0 (scalar or array).

        Raises:
            ValueError: If any r is negative or non-finite.
        """
        r_arr = _check_radii(r)
        if self.kind == CONSTANT:
            out = np.full_like(r_arr, self.value)
        else:
            out = (1.0 + r_arr * r_arr) ** (-self.beta)
        return float(out) if np.ndim(r) == 0 else out

    __call__ = evaluate

    def derivative(self, r: ArrayLike) -> Union[float, np.ndarray]:
        """psi'(r); -2*beta*r*(1 + r^2)^(-beta - 1) for the prototype rate."""
        r_arr = _check_radii(r)
        if self.kind == CONSTANT:
            out = np.zeros_like(r_arr)
        else:
            out = -2.0 * self.beta * r_arr * (1.0 + r_arr * r_arr) ** (-self.beta - 1.0)
        return float(out) if np.ndim(r) == 0 else out

    def describe(self) -> str:
        if self.kind == CONSTANT:
            return f"constant({self.value:g})"
        return f"cucker_smale(beta={self.beta:g})"


def _check_radii(r: ArrayLike) -> np.ndarray:
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)):
        raise ValueError("Distances must be finite")
    if np.any(r_arr < 0):
        raise ValueError("Distances must be non-negative")
    return r_arr


def kernel_eval(kernel: Kernel, r: ArrayLike) -> Union[float, np.ndarray]:
    """Rate psi(r) in (0, 1]."""
    return kernel.evaluate(r)


def kernel_derivative(kernel: Kernel, r: ArrayLike) -> Union[float, np.ndarray]:
    """Closed-form psi'(r)."""
    return kernel.derivative(r)


def validate_kernel(
    kernel: Kernel, grid: Sequence[float], warn: bool = False
) -> Dict[str, Any]:
    """
    Check assumptions (psi0)-(psi2) on a grid of radii.

    (psi1) is checked on the grid points r >= R. For the prototype rate it
    additionally requires the tail exponent 1 - gamma - 2*beta to be
    non-negative; otherwise psi(r) * r^(1 - gamma) decays to zero and the
    assumption fails for every choice of constants (the case beta >= 1/2).

    Args:
        kernel: Kernel to check.
        grid: Radii (non-empty, non-negative).
        warn: Emit a UserWarning when an assumption fails.

    Returns:
        Dictionary with one entry per assumption ('psi0', 'psi1', 'psi2'),
        each holding 'passed' and 'worst_margin' (minimum of rhs - lhs type
        slack; negative means violated), plus 'all_passed' and 'alpha'.

    Raises:
        ValueError: If the grid is empty or holds negative radii.
    """
    radii = _check_radii(grid).reshape(-1)
    if radii.size == 0:
        raise ValueError("Validation grid must not be empty")

    psi = np.atleast_1d(kernel.evaluate(radii))
    dpsi = np.atleast_1d(kernel.derivative(radii))

    psi0_margin = float(np.min(1.0 - psi))
    psi2_margin = float(np.min(dpsi + kernel.alpha * psi))

    report: Dict[str, Any] = {
        "kernel": kernel.describe(),
        "alpha": kernel.alpha,
        "psi0": {"passed": psi0_margin >= 0 and bool(np.all(psi > 0)), "worst_margin": psi0_margin},
        "psi2": {"passed": psi2_margin >= -1e-15, "worst_margin": psi2_margin},
    }

    constants = kernel.tail_constants()
    if constants is None:
        report["psi1"] = {
            "passed": False,
            "worst_margin": float("-inf"),
            "reason": "beta >= 1/2: psi(r) * r^(1-gamma) -> 0 for every gamma > 0",
        }
    else:
        gamma, c, R = constants["gamma"], constants["c"], constants["R"]
        tail = radii[radii >= R]
        if tail.size:
            values = np.atleast_1d(kernel.evaluate(tail)) * tail ** (1.0 - gamma)
            margin = float(np.min(values - c))
        else:
            margin = float("nan")
        passed = bool(tail.size) and margin >= 0 and 0 < gamma < 1
        reason = None
        if kernel.kind == CUCKER_SMALE and 1.0 - gamma - 2.0 * kernel.beta < 0:
            passed = False
            reason = "tail exponent 1 - gamma - 2*beta is negative"
        elif not tail.size:
            reason = f"no grid point at or beyond R={R:g}"
        report["psi1"] = {"passed": passed, "worst_margin": margin, **constants}
        if reason:
            report["psi1"]["reason"] = reason

    report["all_passed"] = all(report[key]["passed"] for key in ("psi0", "psi1", "psi2"))

    if warn and not report["all_passed"]:
        failed = [key for key in ("psi0", "psi1", "psi2") if not report[key]["passed"]]
        warnings.warn(
            f"Kernel {kernel.describe()} fails assumption(s): {', '.join(failed)}",
            UserWarning,
        )
    logger.debug("Kernel validation: %s", report)
    return report
