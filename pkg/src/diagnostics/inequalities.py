"""
Inequality Ledger

Pointwise checks of the a-priori estimates along a recorded run. Each check
is evaluated on the solution nodes with analytic derivatives and node-exact
delayed values (D~(t) = D(t - tau) is the series shifted by m nodes). History
integrals use the composite trapezoid rule.

Checks:
    dVest        V' <= 2(delta - 1) lambda D~ + (2 tau lambda^3 / delta) int_{t-tau}^t D~     t > tau
    estV1        V' <= 2 lambda (V + V~)                                              t > 0
    D_ineq       |D'| <= (2 eps + alpha sqrt(2 L0) / 2) D + (2 lambda^2 / eps) D~      t > 0
    lyapunov     L(t) <= L(t - h) and L(t) <= L(tau)                                  t > tau
    EstPhi       phi(t) >= psi(d_X(0) + sqrt(2 L0) t)                                 t > tau
    fbV          e^{-mu lambda tau} D(t) < D(t - tau) < e^{mu lambda tau} D(t)         t > 0
    lyapunov_initial_bound   L(tau) <= L0
    startup_growth           V(t) <= (2 lambda tau + 1) e^{2 lambda tau} max_{[-tau,0]} V,  0 <= t <= tau
    diameter_growth          d_X(t) <= d_X(0) + sqrt(2 L0) t                       t > 0
    flocking_envelope        V(t) <= V(tau) exp(-omega int_tau^t phi)               t > tau

Checks built on the Lyapunov bound (lyapunov, D_ineq, EstPhi, diameter_growth)
need lambda * tau <= 1/2; fbV and flocking_envelope need a rate mu. Checks
that do not apply are listed in the summary with the reason.

Example:
    >>> from src.diagnostics import InequalityOptions, check_inequalities
    >>>
    >>> ledger = check_inequalities(run, params, L0, InequalityOptions(mu=16.4))
    >>> ledger.summary()["dVest[delta=0.5]"]["violations"]
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from src.diagnostics.recorder import RunHistory
from src.models.cucker_smale import ModelParams

logger = logging.getLogger(__name__)

LEDGER_COLUMNS = ["check", "t", "lhs", "rhs", "margin", "passed"]

ALL_CHECKS = (
    "dVest",
    "estV1",
    "D_ineq",
    "lyapunov",
    "EstPhi",
    "fbV",
    "lyapunov_initial_bound",
    "startup_growth",
    "diameter_growth",
    "flocking_envelope",
)


@dataclass(frozen=True)
class InequalityOptions:
    """
    Parameters of the ledger.

    Attributes:
        deltas: Values of delta for dVest.
        epsilon: epsilon in D_ineq (None -> lambda).
        slack: Relative tolerance absorbing discretisation error.
        mu: Rate for fbV and flocking_envelope (None skips both).
        checks: Subset of ALL_CHECKS to evaluate (None -> all).
    """

    deltas: Sequence[float] = (0.5, 1.0)
    epsilon: Optional[float] = None
    slack: float = 1e-8
    mu: Optional[float] = None
    checks: Optional[Sequence[str]] = None

    def __post_init__(self):
        if any(delta <= 0 for delta in self.deltas):
            raise ValueError(f"deltas must be positive, got {self.deltas}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.slack < 0:
            raise ValueError(f"slack must be non-negative, got {self.slack}")
        unknown = set(self.checks or ()) - set(ALL_CHECKS)
        if unknown:
            raise ValueError(f"Unknown checks: {sorted(unknown)}")


def _entries(
    name: str,
    t: np.ndarray,
    lhs: np.ndarray,
    rhs: np.ndarray,
    slack: float,
    scale: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """Ledger rows for lhs <= rhs with tolerance slack * scale."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    margin = rhs - lhs
    if scale is None:
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
    passed = margin >= -slack * np.asarray(scale, dtype=float)
    return pd.DataFrame(
        {
            "check": name,
            "t": np.asarray(t, dtype=float),
            "lhs": lhs,
            "rhs": rhs,
            "margin": margin,
            "passed": passed & np.isfinite(margin),
        },
        columns=LEDGER_COLUMNS,
    )


def delayed_window_integrals(D: np.ndarray, m: int, h: float) -> np.ndarray:
    """
    int_{t-tau}^t D~(s) ds for every solution node t = k h, k = 0..K.

    D is indexed from node -m; entry k of the result is the trapezoid of D over
    nodes k - 2m .. k - m (NaN where that reaches before -tau).
    """
    weights = np.full(m + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    n_solution = len(D) - m
    out = np.full(n_solution, np.nan)
    if len(D) >= m + 1:
        windows = np.lib.stride_tricks.sliding_window_view(D, m + 1)
        # node k uses array positions k - m .. k, i.e. windows[k - m]
        out[m:] = (windows @ weights)[: n_solution - m]
    return out


def backward_forward_margins(
    y: np.ndarray, lag: int, rate: float, step: float
) -> pd.DataFrame:
    """
    Log-margins of e^{-rate s} y(t) < y(t - s) < e^{rate s} y(t), s = lag * step.

    Args:
        y: Positive series on an equally spaced grid.
        lag: Shift in grid points (>= 1).
        rate: Exponential rate bound (kappa).
        step: Grid spacing.

    Returns:
        DataFrame with columns 'index' (position of t in y), 'log_ratio' and
        'margin' = rate * s - |ln(y(t - s) / y(t))|; the bound holds strictly
        where margin > 0. Non-positive samples give margin -inf.
    """
    y = np.asarray(y, dtype=float)
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    if len(y) <= lag:
        return pd.DataFrame({"index": [], "log_ratio": [], "margin": []})
    current = y[lag:]
    past = y[:-lag]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(past) - np.log(current)
    positive = (current > 0) & (past > 0)
    margin = np.where(positive, rate * lag * step - np.abs(log_ratio), -np.inf)
    return pd.DataFrame(
        {"index": np.arange(lag, len(y)), "log_ratio": log_ratio, "margin": margin}
    )


class InequalityLedger:
    """
    Per-node results of check_inequalities.

    Attributes:
        entries: DataFrame with columns check, t, lhs, rhs, margin, passed.
        skipped: Mapping check name -> reason it was not evaluated.
    """

    def __init__(self, entries: pd.DataFrame, skipped: Dict[str, str], slack: float):
        self.entries = entries
        self.skipped = skipped
        self.slack = slack

    @property
    def checks(self) -> List[str]:
        return list(dict.fromkeys(self.entries["check"]))

    def violations(self, check: Optional[str] = None) -> pd.DataFrame:
        rows = self.entries[~self.entries["passed"]]
        if check is not None:
            rows = rows[rows["check"] == check]
        return rows

    def all_passed(self) -> bool:
        return bool(self.entries["passed"].all())

    def summary(self) -> Dict[str, Dict[str, object]]:
        """Nodes evaluated, violations and worst margin per check."""
        result: Dict[str, Dict[str, object]] = {}
        for name, group in self.entries.groupby("check", sort=False):
            worst = group["margin"].idxmin()
            result[name] = {
                "applicable": True,
                "nodes": int(len(group)),
                "violations": int((~group["passed"]).sum()),
                "worst_margin": float(group.loc[worst, "margin"]),
                "worst_t": float(group.loc[worst, "t"]),
            }
        for name, reason in self.skipped.items():
            result[name] = {"applicable": False, "reason": reason}
        return result

    def worst_margins(self) -> Dict[str, float]:
        return {
            name: info["worst_margin"]
            for name, info in self.summary().items()
            if info.get("applicable")
        }


def check_inequalities(
    run: RunHistory,
    params: ModelParams,
    L0: float,
    options: Optional[InequalityOptions] = None,
) -> InequalityLedger:
    """
    Evaluate the estimate ledger on a recorded run.

    Args:
        run: RunHistory from DiagnosticsRecorder (series from node -m).
        params: Model parameters of the run (tau > 0).
        L0: Initial Lyapunov bound from initial_L0.
        options: Ledger parameters.

    Returns:
        InequalityLedger.

    Raises:
        ValueError: For tau = 0 runs (the delayed estimates are not defined).
    """
    options = options or InequalityOptions()
    if params.tau <= 0:
        raise ValueError("Inequality ledger requires a delayed run (tau > 0)")

    lam, tau, kernel = params.lam, params.tau, params.kernel
    alpha = kernel.alpha
    m, h = run.m, run.h
    slack = options.slack
    eps = options.epsilon if options.epsilon is not None else lam
    wanted = set(options.checks or ALL_CHECKS)

    V_all, D_all = run.V, run.D
    K = len(run) - m - 1
    if K < 1:
        raise ValueError("Run has no solution nodes beyond t = 0")

    k = np.arange(K + 1)
    t = k * h
    sol = k + m  # array positions of solution nodes
    V, D = V_all[sol], D_all[sol]
    V_tilde, D_tilde = V_all[k], D_all[k]  # node k - m sits at position k
    dV, dD = run.dV[sol], run.dD[sol]
    dX, phi = run.dX[sol], run.phi[sol]
    after_tau = k > m
    after_zero = k > 0
    lyapunov_regime = lam * tau <= 0.5

    frames: List[pd.DataFrame] = []
    skipped: Dict[str, str] = {}

    def need_lyapunov(name: str) -> bool:
        if name not in wanted:
            return False
        if not lyapunov_regime:
            skipped[name] = f"requires lambda*tau <= 1/2, got {lam * tau:.6g}"
            return False
        return True

    if "dVest" in wanted:
        integrals = delayed_window_integrals(D_all, m, h)
        for delta in options.deltas:
            rhs = 2.0 * (delta - 1.0) * lam * D_tilde + (2.0 * tau * lam**3 / delta) * integrals
            frames.append(
                _entries(f"dVest[delta={delta:g}]", t[after_tau], dV[after_tau], rhs[after_tau], slack)
            )

    if "estV1" in wanted:
        rhs = 2.0 * lam * (V + V_tilde)
        frames.append(_entries("estV1", t[after_zero], dV[after_zero], rhs[after_zero], slack))

    if need_lyapunov("D_ineq"):
        rhs = (2.0 * eps + alpha * np.sqrt(2.0 * L0) / 2.0) * D + (2.0 * lam**2 / eps) * D_tilde
        frames.append(
            _entries("D_ineq", t[after_zero], np.abs(dD[after_zero]), rhs[after_zero], slack)
        )

    L = run.lyapunov()[sol]
    L_tau = L[m] if K >= m else np.nan

    if need_lyapunov("lyapunov"):
        if K > m:
            scale = np.full(int(after_tau.sum()), abs(L_tau))
            frames.append(
                _entries("lyapunov", t[after_tau], L[after_tau], L[m:-1], slack, scale)
            )
            frames.append(
                _entries(
                    "lyapunov_vs_tau",
                    t[after_tau],
                    L[after_tau],
                    np.full(int(after_tau.sum()), L_tau),
                    slack,
                    scale,
                )
            )
        else:
            skipped["lyapunov"] = "run shorter than one delay"

    sqrt_2L0 = np.sqrt(2.0 * L0)
    dX0 = dX[0]

    if need_lyapunov("EstPhi"):
        bound = np.asarray(kernel.evaluate(dX0 + sqrt_2L0 * t[after_tau]))
        # phi >= bound, written as bound <= phi
        frames.append(_entries("EstPhi", t[after_tau], bound, phi[after_tau], slack))

    if need_lyapunov("diameter_growth"):
        frames.append(
            _entries(
                "diameter_growth", t[after_zero], dX[after_zero], dX0 + sqrt_2L0 * t[after_zero], slack
            )
        )

    if "lyapunov_initial_bound" in wanted:
        if K >= m:
            frames.append(_entries("lyapunov_initial_bound", [tau], [L_tau], [L0], slack))
        else:
            skipped["lyapunov_initial_bound"] = "run shorter than one delay"

    if "startup_growth" in wanted:
        window = k <= m
        bound = (2.0 * lam * tau + 1.0) * np.exp(2.0 * lam * tau) * np.max(V_all[: m + 1])
        frames.append(
            _entries("startup_growth", t[window], V[window], np.full(int(window.sum()), bound), slack)
        )

    if "fbV" in wanted:
        if options.mu is None:
            skipped["fbV"] = "no rate mu given"
        else:
            fb = backward_forward_margins(D_all, m, lam * options.mu, h)
            fb = fb[fb["index"] > m]  # t > 0
            lhs = np.abs(fb["log_ratio"].to_numpy())
            rhs = np.full(len(fb), lam * options.mu * tau)
            frames.append(
                _entries("fbV", (fb["index"].to_numpy() - m) * h, lhs, rhs, 0.0, np.ones(len(fb)))
            )

    if "flocking_envelope" in wanted:
        omega = None
        if options.mu is not None:
            omega = -2.0 * lam * np.exp(-options.mu * lam * tau) * (
                2.0 * lam * tau * np.exp(options.mu * lam * tau) - 1.0
            )
        if omega is None:
            skipped["flocking_envelope"] = "no rate mu given"
        elif omega <= 0:
            skipped["flocking_envelope"] = f"decay rate omega={omega:.6g} is not positive"
        elif K <= m:
            skipped["flocking_envelope"] = "run shorter than one delay"
        else:
            tail = k >= m
            exposure = cumulative_trapezoid(phi[tail], dx=h, initial=0.0)
            envelope = V[m] * np.exp(-omega * exposure)
            frames.append(
                _entries("flocking_envelope", t[tail][1:], V[tail][1:], envelope[1:], slack)
            )

    entries = (
        pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=LEDGER_COLUMNS)
    )
    ledger = InequalityLedger(entries, skipped, slack)
    logger.info(
        "Inequality ledger: %d checks, %d violations, %d skipped",
        len(ledger.checks), int((~entries["passed"]).sum()) if len(entries) else 0, len(skipped),
    )
    return ledger
