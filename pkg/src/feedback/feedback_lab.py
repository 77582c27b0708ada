"""
Delay Negative Feedback Lab

Two agents in one dimension with a constant kernel reduce the flocking system
to the scalar delay equation

    u'(t) = -lambda u(t - tau),     u = u0 on [-tau, 0],

for the velocity difference u = v_1 - v_2 (and V = u^2). This module solves
it exactly by the method of steps, locates sign changes, recovers the
non-oscillation threshold lambda * tau = 1/e by bisection and cross-checks
the numerical solver against the exact solution.

On the k-th delay interval the exact solution is a polynomial of degree k + 1
in the local variable s = (t - k tau) / tau in [0, 1]:

    P_k(s) = P_{k-1}(1) - lambda tau int_0^s P_{k-1}(r) dr,      P_{-1} = u0.

Example:
    >>> from src.feedback import FeedbackProblem, exact_solve, first_sign_change
    >>>
    >>> problem = FeedbackProblem(lam=1.0, tau=0.5, u0=1.0, t_end=20.0)
    >>> u = exact_solve(problem, [0.25, 0.75, 1.5])
    >>> first_sign_change(problem)
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P
from scipy.optimize import bisect

from src.exceptions import BracketError, HorizonError
from src.solvers import StepperConfig, init_history, integrate

logger = logging.getLogger(__name__)

MAX_INTERVALS = 700
SCAN_RESOLUTION = 64


@dataclass(frozen=True)
class FeedbackProblem:
    """
    u' = -lambda u(t - tau) with constant datum u0.

    Attributes:
        lam: Feedback gain (> 0).
        tau: Delay (> 0).
        u0: Datum value (!= 0).
        t_end: Horizon (> 0).
    """

    lam: float
    tau: float
    u0: float
    t_end: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be a finite positive number, got {self.lam}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be a finite positive number, got {self.tau}")
        if not np.isfinite(self.u0) or self.u0 == 0:
            raise ValueError(f"u0 must be finite and non-zero, got {self.u0}")
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be a finite positive number, got {self.t_end}")

    @property
    def lambda_tau(self) -> float:
        return self.lam * self.tau

    @property
    def n_intervals(self) -> int:
        ratio = self.t_end / self.tau
        nearest = round(ratio)
        return int(nearest) if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio) else int(np.ceil(ratio))

    def rescaled(self, c: float) -> "FeedbackProblem":
        """Problem with (c lambda, tau / c) on the horizon t_end / c."""
        return replace(self, lam=self.lam * c, tau=self.tau / c, t_end=self.t_end / c)


class ExactFeedbackSolution:
    """
    Piecewise-polynomial exact solution.

    Attributes:
        problem: The solved problem.
        coefficients: coefficients[k] holds P_k in increasing powers of s.
    """

    def __init__(self, problem: FeedbackProblem):
        n = problem.n_intervals
        if n > MAX_INTERVALS:
            raise HorizonError(problem.t_end, MAX_INTERVALS * problem.tau)
        self.problem = problem
        self.coefficients: List[np.ndarray] = []

        a = -problem.lambda_tau
        previous = np.array([problem.u0])
        start = problem.u0
        for _ in range(n):
            current = np.empty(previous.size + 1)
            current[0] = start
            current[1:] = a * previous / np.arange(1, previous.size + 1)
            self.coefficients.append(current)
            start = float(np.sum(current))  # P_k(1)
            previous = current
        logger.debug("Exact feedback solution on %d intervals (lambda*tau=%g)", n, problem.lambda_tau)

    def __call__(self, times: Sequence[float]) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        tau = self.problem.tau
        if np.any(times > len(self.coefficients) * tau * (1 + 1e-12)):
            raise HorizonError(float(np.max(times)), len(self.coefficients) * tau)
        out = np.full(times.shape, float(self.problem.u0))
        positive = times >= 0
        k = np.minimum(np.floor(times[positive] / tau).astype(int), len(self.coefficients) - 1)
        s = times[positive] / tau - k
        values = np.empty(k.shape)
        for interval in np.unique(k):
            mask = k == interval
            values[mask] = P.polyval(s[mask], self.coefficients[interval])
        out[positive] = values
        return out

    def derivative(self, times: Sequence[float]) -> np.ndarray:
        """u'(t) = -lambda u(t - tau) for t > 0."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return -self.problem.lam * self(times - self.problem.tau)


def exact_solve(problem: FeedbackProblem, times: Sequence[float]) -> np.ndarray:
    """
    Exact u at the given times (t < 0 returns u0).

    Raises:
        HorizonError: If the horizon needs more than 700 delay intervals or a
                      time lies beyond t_end.
    """
    return ExactFeedbackSolution(problem)(times)


def _scan_grid(problem: FeedbackProblem, resolution: int) -> np.ndarray:
    n_points = int(round(problem.n_intervals * resolution))
    return np.arange(n_points + 1) * (problem.tau / resolution)


def first_sign_change(
    problem: FeedbackProblem, resolution: int = SCAN_RESOLUTION
) -> Optional[float]:
    """
    Time of the first sign change of u, or None within the horizon.

    The solution is scanned at spacing tau / resolution; the first bracketing
    pair is refined by bisection on the local polynomial to 1e-12 tau.
    """
    solution = ExactFeedbackSolution(problem)
    t = _scan_grid(problem, resolution)
    t = t[t <= problem.t_end + 1e-12 * problem.tau]
    u = solution(t)
    sign = np.sign(u)
    hits = np.flatnonzero(sign[1:] * sign[:-1] <= 0)
    if hits.size == 0:
        return None
    i = hits[0]
    if u[i] == 0:
        return float(t[i])
    if u[i + 1] == 0:
        return float(t[i + 1])

    # grid index i sits in interval i // resolution, so both ends share one polynomial
    k = int(i // resolution)
    s_lo = (i - k * resolution) / resolution
    s_hi = s_lo + 1.0 / resolution
    coefficients = solution.coefficients[k]
    s_root = bisect(lambda s: P.polyval(s, coefficients), s_lo, s_hi, xtol=1e-12, maxiter=200)
    return float((k + s_root) * problem.tau)


def oscillation_profile(problem: FeedbackProblem, resolution: int = SCAN_RESOLUTION) -> pd.DataFrame:
    """Sampled (t, u) table of the exact solution on [0, t_end]."""
    t = _scan_grid(problem, resolution)
    t = t[t <= problem.t_end + 1e-12 * problem.tau]
    return pd.DataFrame({"t": t, "u": exact_solve(problem, t)})


def threshold_bisect(
    bracket: Tuple[float, float] = (0.30, 0.45),
    horizon: float = 200.0,
    tol: float = 2e-3,
    lam: float = 1.0,
) -> float:
    """
    Estimate the lambda * tau at which sign changes start.

    The predicate "u changes sign within horizon * tau" is bisected on the
    bracket; the midpoint of the final bracket is returned.

    Args:
        bracket: (lo, hi) values of lambda * tau.
        horizon: Horizon in delay units.
        tol: Width tolerance of the estimate.
        lam: Gain used for the probe problems (results depend on lambda*tau only).

    Raises:
        BracketError: If the predicate has the same value at both ends.
        HorizonError: If horizon exceeds the supported number of intervals.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError(f"Bracket must satisfy 0 < lo < hi, got {bracket}")

    def predicate(lambda_tau: float) -> float:
        tau = lambda_tau / lam
        problem = FeedbackProblem(lam=lam, tau=tau, u0=1.0, t_end=horizon * tau)
        return 1.0 if first_sign_change(problem) is not None else -1.0

    if predicate(lo) == predicate(hi):
        raise BracketError(
            f"Sign-change predicate is constant on ({lo}, {hi}) with horizon {horizon} tau"
        )
    estimate = float(bisect(predicate, lo, hi, xtol=0.5 * tol, maxiter=200))
    logger.info("Oscillation threshold estimate lambda*tau = %.6f", estimate)
    return estimate


def engine_solve(problem: FeedbackProblem, m: int) -> pd.DataFrame:
    """Numerical (t, u) on the solver nodes with step tau / m."""
    config = StepperConfig(tau=problem.tau, m=m, t_end=problem.t_end, state_dim=1)
    history = init_history(
        lambda s: np.array([problem.u0]),
        problem.tau,
        m,
        derivative=lambda s: np.zeros(1),
        retain_full=True,
    )
    lam = problem.lam
    result = integrate(lambda t, y, delayed: -lam * delayed, history, config)
    nodes = np.arange(0, result.history.last_index + 1)
    values = np.array([result.history.state_at_node(k)[0] for k in nodes])
    return pd.DataFrame({"t": nodes * config.h, "u": values})


def cross_validate(
    problem: FeedbackProblem, m: int = 100, refinement: Sequence[int] = (25, 50, 100)
) -> Dict[str, object]:
    """
    Compare the method-of-steps solver with the exact solution on shared nodes.

    Returns:
        Dictionary with 'max_deviation' (at m), 'deviations' per refinement
        level, 'ratios' between consecutive levels and the empirical 'orders'.
    """
    solution = ExactFeedbackSolution(problem)

    def deviation(steps: int) -> float:
        numeric = engine_solve(problem, steps)
        exact = solution(numeric["t"].to_numpy())
        return float(np.max(np.abs(numeric["u"].to_numpy() - exact)))

    levels = sorted(set(refinement) | {m})
    deviations = {steps: deviation(steps) for steps in levels}
    ratios, orders = [], []
    ladder = sorted(refinement)
    for coarse, fine in zip(ladder[:-1], ladder[1:]):
        ratio = deviations[coarse] / deviations[fine] if deviations[fine] > 0 else float("inf")
        ratios.append(ratio)
        orders.append(float(np.log(ratio) / np.log(fine / coarse)))
    return {
        "max_deviation": deviations[m],
        "deviations": deviations,
        "ratios": ratios,
        "orders": orders,
    }


def energy_decay_check(problem: FeedbackProblem, resolution: int = SCAN_RESOLUTION) -> Dict[str, object]:
    """
    Decay estimates for y = u^2 / 2 at sample times t > tau.

        y' <= 2 lambda (lambda tau e^{2 e lambda tau} - 1) y        (rate below z*)
        y' <= 2 lambda (lambda tau e^{e lambda tau} - 1) y(t - tau)

    Returns:
        Dictionary with 'rate' (the first bracket), and per estimate the
        number of samples, violations and worst margin.
    """
    solution = ExactFeedbackSolution(problem)
    lam, lt = problem.lam, problem.lambda_tau
    t = _scan_grid(problem, resolution)
    t = t[(t > problem.tau) & (t <= problem.t_end)]
    u = solution(t)
    u_delayed = solution(t - problem.tau)
    y = 0.5 * u * u
    y_delayed = 0.5 * u_delayed * u_delayed
    dy = -lam * u * u_delayed

    rate = lt * np.exp(2.0 * np.e * lt) - 1.0
    bounds = {
        "current": 2.0 * lam * rate * y,
        "delayed": 2.0 * lam * (lt * np.exp(np.e * lt) - 1.0) * y_delayed,
    }
    result: Dict[str, object] = {"rate": float(2.0 * lam * rate)}
    for name, bound in bounds.items():
        margin = bound - dy
        scale = np.maximum(np.abs(bound), np.abs(dy))
        bad = margin < -1e-12 * scale
        result[name] = {
            "samples": int(len(t)),
            "violations": int(np.sum(bad)),
            "worst_margin": float(np.min(margin)) if len(t) else float("inf"),
        }
    return result


def backward_forward_flow_check(
    problem: FeedbackProblem, shifts: int = 8, resolution: int = SCAN_RESOLUTION
) -> Dict[str, object]:
    """
    y(t - s) <= e^{2 e lambda s} y(t) for -tau < t - s < t and s = j tau / shifts.

    Returns:
        Dictionary with 'pairs', 'violations' and 'worst_margin' (log units).
    """
    if resolution % shifts:
        raise ValueError("resolution must be a multiple of shifts")
    solution = ExactFeedbackSolution(problem)
    step = problem.tau / resolution
    t = np.arange(-resolution, len(_scan_grid(problem, resolution))) * step
    t = t[t <= problem.t_end]
    y = 0.5 * solution(t) ** 2
    with np.errstate(divide="ignore"):
        log_y = np.log(y)

    margins = []
    for j in range(1, shifts + 1):
        lag = j * resolution // shifts
        s = lag * step
        # t - s > -tau excludes the first sample
        current, past = log_y[lag + 1 :], log_y[1 : len(log_y) - lag]
        margins.append(2.0 * np.e * problem.lam * s - (past - current))
    margins = np.concatenate(margins) if margins else np.array([])
    return {
        "pairs": int(margins.size),
        "violations": int(np.sum(~(margins >= -1e-12))),
        "worst_margin": float(np.min(margins)) if margins.size else float("inf"),
    }


def scaling_collapse(
    problem: FeedbackProblem, c: float, n_samples: int = 1000
) -> float:
    """
    Maximum relative deviation between u for (lambda, tau) at t and u for
    (c lambda, tau / c) at t / c.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    t = np.linspace(0.0, problem.t_end, n_samples)
    base = exact_solve(problem, t)
    scaled = exact_solve(problem.rescaled(c), t / c)
    scale = np.maximum(np.abs(base), np.finfo(float).tiny)
    return float(np.max(np.abs(base - scaled) / scale))
