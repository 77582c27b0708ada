"""
Critical Delay Recipe

This module turns the sufficient flocking conditions into numbers. Given
lambda, the kernel constant alpha and datum quantities (V(0), D(0), M0, L0)
it constructs a rate mu and the delays tau1, tau2 with tau_c = min(tau1, tau2)
such that for every tau < tau_c

    (N3)  lambda mu > 4 lambda e^{mu lambda tau / 2} + alpha sqrt(2 L0(tau)) / 2
    (lt)  2 lambda tau e^{mu lambda tau} < 1

hold, which gives monotone exponential decay of V with rate omega * phi.

Two paths are provided:
- constant datum: L0(tau) has the closed form
  (2 lambda tau + 1) e^{2 lambda tau} V0 + 2 lambda^3 tau^3 D0 and tau1 solves
  (2/(lambda tau))(ln(1/(2 lambda tau)) - 1) = alpha sqrt(2 L0(tau)) / (2 lambda);
- general datum: K = max{M0, 4 lambda + alpha sqrt(2 V0)/2} / lambda and tau1
  solves (1/(lambda tau)) ln(1/(2 lambda tau)) = (1 + eta) K, with L0(tau)
  supplied by the caller.

Example:
    >>> from src.theory import critical_delay_constant
    >>>
    >>> report = critical_delay_constant(lam=1.0, alpha=1.0, V0=1.0, D0=1.0)
    >>> report.tau_c, report.mu
    >>> report.to_dict()["conditions"][:2]
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import statsmodels.api as sm
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import bisect
from tqdm import tqdm

from src.diagnostics.functionals import velocity_fluctuation, weighted_fluctuation
from src.diagnostics.inequalities import backward_forward_margins
from src.exceptions import BracketError, TrivialDatumError
from src.models.initial_data import random_cloud
from src.models.kernels import Kernel

logger = logging.getLogger(__name__)

CONSTANT_DATUM = "ConstantDatum"
GENERAL_DATUM = "GeneralDatum"

MAX_BISECTIONS = 200
DEFAULT_MARGIN = 0.1
GRID_POINTS = 100


def _bisect(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Deterministic bisection with tolerance 1e-14 * (hi - lo)."""
    return float(bisect(f, lo, hi, xtol=1e-14 * (hi - lo), maxiter=MAX_BISECTIONS))


def _largest_holding(f: Callable[[float], float], hi: float, points: int = GRID_POINTS) -> float:
    """
    Largest t in (0, hi] with f(t) > 0, given f(0) > 0.

    Scans a grid downward from hi for the first point where f holds and
    bisects between it and the grid point above. Sign changes closer than
    hi / points are not resolved.
    """
    if f(hi) > 0:
        return hi
    grid = np.linspace(0.0, hi, points + 1)
    for lo, up in zip(grid[-2::-1], grid[:0:-1]):
        if f(lo) > 0:
            return _bisect(f, lo, up)
    raise BracketError(f"condition fails on the whole grid of (0, {hi:.6g}]")


def l0_constant(lam: float, tau: float, V0: float, D0: float) -> float:
    """Closed-form L0 of a constant datum."""
    return (2.0 * lam * tau + 1.0) * np.exp(2.0 * lam * tau) * V0 + 2.0 * lam**3 * tau**3 * D0


def decay_rate(lam: float, tau: float, mu: float) -> float:
    """omega = -2 lambda e^{-mu lambda tau} (2 lambda tau e^{mu lambda tau} - 1)."""
    return float(-2.0 * lam * np.exp(-mu * lam * tau) * (2.0 * lam * tau * np.exp(mu * lam * tau) - 1.0))


def rate_condition_margin(lam: float, tau: float, mu: float, alpha: float, L0: float) -> float:
    """lambda mu - 4 lambda e^{mu lambda tau / 2} - alpha sqrt(2 L0) / 2 (N3 holds iff > 0)."""
    return float(lam * mu - 4.0 * lam * np.exp(0.5 * mu * lam * tau) - 0.5 * alpha * np.sqrt(2.0 * L0))


def delay_condition_margin(lam: float, tau: float, mu: float) -> float:
    """1 - 2 lambda tau e^{mu lambda tau} (lt holds iff > 0); sign matches decay_rate."""
    return float(1.0 - 2.0 * lam * tau * np.exp(mu * lam * tau))


@dataclass
class Condition:
    """One row of the condition ledger."""

    id: str
    tau: float
    satisfied: bool
    margin: float

    def to_dict(self) -> Dict[str, object]:
        return {"id": self.id, "tau": self.tau, "satisfied": self.satisfied, "margin": self.margin}


@dataclass
class CriticalDelayReport:
    """
    Result of the critical-delay recipe.

    Attributes:
        L0, M0, K, mu, tau1, tau2, tau_c, omega: Recipe quantities; omega is
            evaluated at a requested tau (None otherwise). M0 may be None on
            the constant path.
        path: 'ConstantDatum' or 'GeneralDatum'.
        conditions: Ledger of condition checks.
        lam, alpha: Inputs, kept for re-validation.
        note: Free-text remark (e.g. trivial datum).
    """

    L0: float
    M0: Optional[float]
    K: float
    mu: float
    tau1: float
    tau2: float
    tau_c: float
    omega: Optional[float]
    path: str
    conditions: List[Condition] = field(default_factory=list)
    lam: float = 1.0
    alpha: float = 0.0
    note: Optional[str] = None

    @property
    def all_conditions_satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def to_dict(self) -> Dict[str, object]:
        """JSON document; infinite tau_c is written as the string 'inf'."""

        def _num(x):
            if x is None:
                return None
            return "inf" if np.isinf(x) else float(x)

        return {
            "l0": _num(self.L0),
            "m0": _num(self.M0),
            "k": _num(self.K),
            "mu": _num(self.mu),
            "tau1": _num(self.tau1),
            "tau2": _num(self.tau2),
            "tau_c": _num(self.tau_c),
            "omega": _num(self.omega),
            "path": self.path,
            "conditions": [c.to_dict() for c in self.conditions],
            "note": self.note,
        }

    @classmethod
    def trivial(cls, path: str, L0: float, note: str) -> "CriticalDelayReport":
        """Report for a datum with coinciding velocities: flocking is immediate."""
        inf = float("inf")
        return cls(
            L0=L0, M0=None, K=inf, mu=inf, tau1=inf, tau2=inf, tau_c=inf,
            omega=None, path=path, note=note,
        )


def _condition_ledger(
    lam: float,
    alpha: float,
    mu: float,
    tau_c: float,
    L0_of_tau: Callable[[float], float],
    M0: Optional[float],
) -> List[Condition]:
    """
    Both conditions on a grid of tau in (0, tau_c), at 0.999 tau_c, and the
    first failure check at 1.5 tau_c.
    """
    taus = list(tau_c * np.arange(1, GRID_POINTS) / GRID_POINTS) + [0.999 * tau_c]
    ledger: List[Condition] = []
    for tau in taus:
        n3 = rate_condition_margin(lam, tau, mu, alpha, L0_of_tau(tau))
        lt = delay_condition_margin(lam, tau, mu)
        ledger.append(Condition("N3", float(tau), n3 > 0, n3))
        ledger.append(Condition("lt", float(tau), lt > 0, lt))
    if M0 is not None:
        margin = lam * mu - M0
        ledger.append(Condition("M", 0.0, margin > 0, float(margin)))

    beyond = 1.5 * tau_c
    n3 = rate_condition_margin(lam, beyond, mu, alpha, L0_of_tau(beyond))
    lt = delay_condition_margin(lam, beyond, mu)
    # at 1.5 tau_c at least one condition must fail
    ledger.append(Condition("beyond_tau_c", float(beyond), min(n3, lt) <= 0, float(min(n3, lt))))
    return ledger


def critical_delay_constant(
    lam: float,
    alpha: float,
    V0: float,
    D0: float,
    M0: Optional[float] = None,
    tau: Optional[float] = None,
) -> CriticalDelayReport:
    """
    Critical delay for a constant initial datum.

    Args:
        lam: Coupling strength (> 0).
        alpha: Kernel constant (>= 0).
        V0, D0: V and D of the datum (> 0).
        M0: Optional |D'(0+)|/D(0), recorded in K and the ledger.
        tau: Delay at which omega is evaluated (optional).

    Returns:
        CriticalDelayReport on the 'ConstantDatum' path.

    Raises:
        TrivialDatumError: If V0 <= 0 or D0 <= 0.
        ValueError: For lam <= 0 or alpha < 0.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if V0 <= 0 or D0 <= 0:
        raise TrivialDatumError(
            f"V0={V0}, D0={D0}: all initial velocities coincide, flocking is immediate"
        )

    def L0_of_tau(t: float) -> float:
        return l0_constant(lam, t, V0, D0)

    def g(t: float) -> float:
        x = lam * t
        return (2.0 / x) * (np.log(1.0 / (2.0 * x)) - 1.0) - alpha * np.sqrt(2.0 * L0_of_tau(t)) / (2.0 * lam)

    hi = 1.0 / (2.0 * np.e * lam)
    if alpha == 0:
        tau1 = hi
    else:
        lo = 0.5 * hi
        for _ in range(MAX_BISECTIONS):
            if g(lo) > 0:
                break
            lo *= 0.5
        tau1 = _bisect(g, lo, hi)

    mu = alpha * np.sqrt(2.0 * L0_of_tau(tau1)) / (2.0 * lam) + 2.0 / (lam * tau1)
    tau2 = _bisect(lambda t: -delay_condition_margin(lam, t, mu), 0.0, 1.0 / (2.0 * lam))
    tau_c = min(tau1, tau2)

    K = max(M0 if M0 is not None else 0.0, 4.0 * lam + alpha * np.sqrt(2.0 * V0) / 2.0) / lam
    report = CriticalDelayReport(
        L0=L0_of_tau(tau) if tau is not None else L0_of_tau(tau_c),
        M0=M0,
        K=float(K),
        mu=float(mu),
        tau1=float(tau1),
        tau2=float(tau2),
        tau_c=float(tau_c),
        omega=decay_rate(lam, tau, mu) if tau is not None else None,
        path=CONSTANT_DATUM,
        conditions=_condition_ledger(lam, alpha, mu, tau_c, L0_of_tau, M0),
        lam=lam,
        alpha=alpha,
    )
    logger.info(
        "Constant-datum recipe: tau1=%.6g tau2=%.6g tau_c=%.6g mu=%.6g", tau1, tau2, tau_c, mu
    )
    return report


def critical_delay_general(
    lam: float,
    M0: Optional[float],
    L0_of_tau: Callable[[float], float],
    alpha: float,
    margin: float = DEFAULT_MARGIN,
    tau: Optional[float] = None,
) -> CriticalDelayReport:
    """
    Critical delay for a general (possibly non-constant) datum.

    K = max{M0, 4 lambda + alpha sqrt(2 V0) / 2} / lambda with V0 = L0(0).
    tau1 solves (1/(lambda tau)) ln(1/(2 lambda tau)) = (1 + margin) K on
    (0, 1/(2 lambda)), which sets mu = (1 + margin) K > K. tau2 is the largest
    tau <= tau1 at which the rate condition still holds, located by a grid
    scan downward from tau1 followed by bisection.

    Args:
        lam: Coupling strength (> 0).
        M0: Relative rate bound of D on the datum (None: trivial datum).
        L0_of_tau: Function tau -> L0 of the datum for delay tau.
        alpha: Kernel constant (>= 0).
        margin: Relative excess of mu over K (> 0).
        tau: Delay at which omega is evaluated (optional).

    Raises:
        TrivialDatumError: If M0 is None (D(0) = 0).
        ValueError: For invalid lam, alpha or margin.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if not margin > 0:
        raise ValueError(f"margin must be positive, got {margin}")
    if M0 is None:
        raise TrivialDatumError("M0 undefined: D(0) = 0, flocking is immediate")

    V0 = float(L0_of_tau(0.0))
    K = max(M0, 4.0 * lam + alpha * np.sqrt(2.0 * V0) / 2.0) / lam
    target = (1.0 + margin) * K

    def f(t: float) -> float:
        x = lam * t
        return np.log(1.0 / (2.0 * x)) / x - target

    hi = 1.0 / (2.0 * lam)
    lo = 0.5 * hi
    for _ in range(MAX_BISECTIONS):
        if f(lo) > 0:
            break
        lo *= 0.5
    tau1 = _bisect(f, lo, hi)
    mu = float(np.log(1.0 / (2.0 * lam * tau1)) / (lam * tau1))

    def n3(t: float) -> float:
        return rate_condition_margin(lam, t, mu, alpha, L0_of_tau(t))

    tau2 = _largest_holding(n3, tau1)
    tau_c = min(tau1, tau2)

    report = CriticalDelayReport(
        L0=float(L0_of_tau(tau if tau is not None else tau_c)),
        M0=float(M0),
        K=float(K),
        mu=mu,
        tau1=float(tau1),
        tau2=float(tau2),
        tau_c=float(tau_c),
        omega=decay_rate(lam, tau, mu) if tau is not None else None,
        path=GENERAL_DATUM,
        conditions=_condition_ledger(lam, alpha, mu, tau_c, L0_of_tau, M0),
        lam=lam,
        alpha=alpha,
    )
    logger.info(
        "General-datum recipe: K=%.6g tau1=%.6g tau2=%.6g tau_c=%.6g mu=%.6g",
        K, tau1, tau2, tau_c, mu,
    )
    return report


def verify_backward_forward(
    D: np.ndarray, lam: float, mu: float, tau: float, m: int
) -> Dict[str, object]:
    """
    Check e^{-mu lambda tau} D(t) < D(t - tau) < e^{mu lambda tau} D(t) at every node t > 0.

    Args:
        D: Node series starting at t = -tau (array position i <-> node i - m).
        lam, mu, tau: Rate constants.
        m: Nodes per delay interval.

    Returns:
        Dictionary with 'passed', 'worst_margin' (in log units), 'violations'
        and 'n_checked'.
    """
    margins = backward_forward_margins(np.asarray(D, dtype=float), m, lam * mu, tau / m)
    margins = margins[margins["index"] > m]
    return _summarise_margins(margins)


def verify_backward_forward_generic(
    y: np.ndarray,
    kappa: float,
    lag: int,
    step: float,
    C1: Optional[float] = None,
    C2: Optional[float] = None,
    M: Optional[float] = None,
) -> Dict[str, object]:
    """
    Two-sided estimate e^{-kappa s} y(t) < y(t - s) < e^{kappa s} y(t) for all
    shifts s = j * step, j = 1..lag.

    When the constants of the differential inequality |y'| <= C1 y + C2 y(t - tau)
    are given, the premise kappa > max{M, C1 + C2 e^{kappa tau}} is reported too.
    """
    y = np.asarray(y, dtype=float)
    frames = [backward_forward_margins(y, j, kappa, step) for j in range(1, lag + 1)]
    result = _summarise_margins(pd.concat(frames, ignore_index=True))
    if C1 is not None and C2 is not None:
        bound = C1 + C2 * np.exp(kappa * lag * step)
        if M is not None:
            bound = max(bound, M)
        result["premise_satisfied"] = bool(kappa > bound)
        result["premise_margin"] = float(kappa - bound)
    return result


def _summarise_margins(margins: pd.DataFrame) -> Dict[str, object]:
    if margins.empty:
        return {"passed": True, "worst_margin": float("inf"), "violations": 0, "n_checked": 0}
    values = margins["margin"].to_numpy()
    return {
        "passed": bool(np.all(values > 0)),
        "worst_margin": float(np.min(values)),
        "violations": int(np.sum(values <= 0)),
        "n_checked": int(len(values)),
    }


def decay_envelope(
    t: np.ndarray, V_tau: float, omega: float, phi: Union[float, np.ndarray], tau: float
) -> np.ndarray:
    """
    Envelope V(tau) exp(-omega int_tau^t phi(s) ds) on times t >= tau.

    phi is either a constant lower bound of the minimum interaction (giving a
    plain exponential) or a series sampled at t, integrated by the trapezoid rule.
    """
    t = np.asarray(t, dtype=float)
    if np.ndim(phi) == 0:
        return V_tau * np.exp(-omega * float(phi) * (t - tau))
    phi = np.asarray(phi, dtype=float)
    if phi.shape != t.shape:
        raise ValueError(f"phi series {phi.shape} must match times {t.shape}")
    exposure = cumulative_trapezoid(phi, t, initial=0.0) + phi[0] * (t[0] - tau)
    return V_tau * np.exp(-omega * exposure)


def tail_decay_slope(
    t: np.ndarray, V: np.ndarray, t_start: float = 0.0, rel_floor: float = 1e-20
) -> Dict[str, float]:
    """
    Ordinary least-squares slope of log V against t on the tail t >= t_start.

    Samples below rel_floor * max(V) are dropped (round-off plateau).

    Raises:
        ValueError: If fewer than 3 usable samples remain.
    """
    t = np.asarray(t, dtype=float)
    V = np.asarray(V, dtype=float)
    keep = (t >= t_start) & np.isfinite(V) & (V > rel_floor * np.nanmax(V)) & (V > 0)
    if keep.sum() < 3:
        raise ValueError(f"Need at least 3 positive samples for a tail fit, got {int(keep.sum())}")
    X = sm.add_constant(t[keep])
    fit = sm.OLS(np.log(V[keep]), X).fit()
    return {
        "slope": float(fit.params[1]),
        "intercept": float(fit.params[0]),
        "stderr": float(fit.bse[1]),
        "r_squared": float(fit.rsquared),
        "n": int(keep.sum()),
    }


def n_scaling_sweep(
    N_values: Sequence[int],
    lam: float,
    kernel: Kernel,
    d: int = 2,
    position_box: float = 1.0,
    velocity_spread: float = 1.0,
    seed: int = 0,
    show_progress: bool = False,
) -> Dict[str, object]:
    """
    Constant-datum critical delay as a function of the number of agents.

    Each N draws a seeded random cloud with the per-agent velocity spread held
    fixed, so V(0) grows like N^2. The log-log slope of tau_c against N is
    fitted by OLS.

    Returns:
        Dictionary with 'table' (DataFrame N, v0, d0, l0, tau_c, mu),
        'slope', 'slope_stderr' and 'strictly_decreasing'.
    """
    rows = []
    for N in tqdm(list(N_values), desc="N-scaling", disable=not show_progress):
        datum = random_cloud(N, d, position_box, velocity_spread, seed)
        state = datum.at(0.0)
        V0 = velocity_fluctuation(state)
        D0 = weighted_fluctuation(state, kernel)
        report = critical_delay_constant(lam, kernel.alpha, V0, D0)
        rows.append(
            {"N": int(N), "v0": V0, "d0": D0, "l0": report.L0, "tau_c": report.tau_c, "mu": report.mu}
        )
    table = pd.DataFrame(rows, columns=["N", "v0", "d0", "l0", "tau_c", "mu"])

    slope = stderr = float("nan")
    if len(table) >= 2:
        X = sm.add_constant(np.log(table["N"].to_numpy(dtype=float)))
        fit = sm.OLS(np.log(table["tau_c"].to_numpy()), X).fit()
        slope = float(fit.params[1])
        stderr = float(fit.bse[1]) if len(table) > 2 else float("nan")
    strictly_decreasing = bool(np.all(np.diff(table["tau_c"].to_numpy()) < 0))
    logger.info("N-scaling slope %.4f over N=%s", slope, list(table["N"]))
    return {
        "table": table,
        "slope": slope,
        "slope_stderr": stderr,
        "strictly_decreasing": strictly_decreasing,
    }
