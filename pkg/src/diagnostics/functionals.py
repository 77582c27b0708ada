"""
Flocking Functionals

This module provides the scalar functionals used to analyse the delayed
Cucker-Smale system:

    V   = 1/2 sum_i sum_j |v_i - v_j|^2                 velocity fluctuation
    D   = 1/2 sum_i sum_j psi_ij |v_i - v_j|^2          weighted fluctuation
    d_X = max_ij |x_i - x_j|                            position diameter
    phi = min_ij psi_ij = psi(d_X)                      minimum interaction
    L   = V + 4 tau lambda^3 int_{t-tau}^t int_theta^t D~(s) ds dtheta

together with the analytic time derivatives of V and D and the datum
quantities L0 and M0 that enter the critical-delay recipe.

Double sums run over all ordered pairs with the 1/2 prefactor, so for two
agents V = |v_1 - v_2|^2.

Example:
    >>> from src.diagnostics.functionals import velocity_fluctuation
    >>> velocity_fluctuation(state)
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from src.exceptions import HistoryWindowError
from src.models.cucker_smale import (
    EnsembleState,
    ModelParams,
    pairwise_differences,
    pairwise_distances,
    velocity_update,
)
from src.models.initial_data import InitialDatum
from src.models.kernels import Kernel

logger = logging.getLogger(__name__)

# Below this distance the unit vector (x_i - x_j)/|x_i - x_j| is replaced by 0.
COINCIDENCE_RADIUS = 1e-14


def velocity_fluctuation(state: EnsembleState) -> float:
    """V = 1/2 sum_ij |v_i - v_j|^2, evaluated as N * sum_i |v_i - mean(v)|^2."""
    centred = state.v - state.v.mean(axis=0, keepdims=True)
    return float(state.N * np.sum(centred * centred))


def weighted_fluctuation(state: EnsembleState, kernel: Kernel) -> float:
    """D = 1/2 sum_ij psi(|x_i - x_j|) |v_j - v_i|^2."""
    psi = kernel.evaluate(pairwise_distances(state.x))
    dv2 = np.sum(pairwise_differences(state.v) ** 2, axis=-1)
    return float(0.5 * np.sum(psi * dv2))


def position_diameter(state: EnsembleState) -> float:
    """d_X = max_ij |x_i - x_j|."""
    return float(np.max(pairwise_distances(state.x)))


def min_interaction(state: EnsembleState, kernel: Kernel) -> float:
    """phi = psi(d_X), the minimum pairwise rate for a nonincreasing psi."""
    return float(kernel.evaluate(position_diameter(state)))


def momentum(state: EnsembleState) -> np.ndarray:
    """Total momentum sum_i v_i."""
    return state.v.sum(axis=0)


def velocity_fluctuation_rate(state: EnsembleState, v_dot: np.ndarray) -> float:
    """
    dV/dt = sum_ij <v_i - v_j, v'_i - v'_j> for given accelerations.

    Evaluated in centred form 2N sum_i <v_i - mean(v), v'_i - mean(v')>.
    """
    centred_v = state.v - state.v.mean(axis=0, keepdims=True)
    centred_a = v_dot - v_dot.mean(axis=0, keepdims=True)
    return float(2.0 * state.N * np.sum(centred_v * centred_a))


def weighted_fluctuation_rate(
    state: EnsembleState, x_dot: np.ndarray, v_dot: np.ndarray, kernel: Kernel
) -> float:
    """
    dD/dt by the chain rule for arbitrary position and velocity rates.

        1/2 sum_ij psi'_ij <e_ij, x'_i - x'_j> |v_i - v_j|^2
          + sum_ij psi_ij <v_i - v_j, v'_i - v'_j>

    with e_ij the unit vector along x_i - x_j (zero for coincident agents).
    """
    dx = pairwise_differences(state.x)
    dist = np.sqrt(np.sum(dx * dx, axis=-1))
    safe = np.where(dist < COINCIDENCE_RADIUS, 1.0, dist)
    unit = np.where((dist < COINCIDENCE_RADIUS)[..., None], 0.0, dx / safe[..., None])

    dv = pairwise_differences(state.v)
    dv2 = np.sum(dv * dv, axis=-1)
    psi = kernel.evaluate(dist)
    dpsi = kernel.derivative(dist)

    radial = np.sum(unit * pairwise_differences(x_dot), axis=-1)
    first = 0.5 * np.sum(dpsi * radial * dv2)
    second = np.sum(psi * np.sum(dv * pairwise_differences(v_dot), axis=-1))
    return float(first + second)


def velocity_fluctuation_derivative(
    state: EnsembleState, delayed: EnsembleState, params: ModelParams
) -> float:
    """Analytic dV/dt along the delayed system."""
    return velocity_fluctuation_rate(state, velocity_update(delayed, params))


def weighted_fluctuation_derivative(
    state: EnsembleState, delayed: EnsembleState, params: ModelParams
) -> float:
    """
    Analytic dD/dt along the delayed system (x' = v, v' from the delayed RHS).

    Evaluated at t = 0 with the datum value at -tau as delayed state this is
    the right derivative D'(0+).
    """
    return weighted_fluctuation_rate(
        state, state.v, velocity_update(delayed, params), params.kernel
    )


# ----------------------------------------------------------------------
# Lyapunov functional
# ----------------------------------------------------------------------


def _lyapunov_weights(m: int, h: float) -> np.ndarray:
    """Trapezoid weights of int_0^tau sigma * f(sigma) d sigma on m + 1 nodes."""
    weights = np.full(m + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    return weights * (np.arange(m + 1) * h)


def lyapunov_from_series(
    k: int, V: np.ndarray, D: np.ndarray, m: int, h: float, params: ModelParams
) -> float:
    """
    L at node k from per-node series.

    Args:
        k: Node index (t = k * h), must be >= m.
        V, D: Series indexed from node -m (array position i <-> node i - m).
        m, h: Grid layout, h = tau / m.
        params: Model parameters.

    The double integral is reduced to int_{t-tau}^t (s - (t - tau)) D(s - tau) ds
    and evaluated by the composite trapezoid rule on the node grid.

    Raises:
        HistoryWindowError: If k < m or the series does not reach node k.
    """
    if k < m or k + m >= len(V):
        raise HistoryWindowError(k * h, (-m * h, (len(V) - m - 1) * h))
    window = D[k - m : k + 1]
    integral = float(np.dot(_lyapunov_weights(m, h), window))
    return float(V[k + m]) + 4.0 * params.tau * params.lam**3 * integral


def lyapunov_series(V: np.ndarray, D: np.ndarray, m: int, h: float, params: ModelParams) -> np.ndarray:
    """L at every node k >= m (NaN before), series indexed from node -m."""
    out = np.full(len(V), np.nan)
    if len(D) < 2 * m + 1:
        return out
    windows = np.lib.stride_tricks.sliding_window_view(D, m + 1)
    integrals = windows @ _lyapunov_weights(m, h)
    # windows[j] covers nodes j - m .. j, i.e. D~ on [t - tau, t] for node k = j + m
    n_valid = len(V) - 2 * m
    out[2 * m :] = V[2 * m :] + 4.0 * params.tau * params.lam**3 * integrals[:n_valid]
    return out


def lyapunov(t: float, run_history, params: ModelParams) -> float:
    """
    Lyapunov functional L(t) for t >= tau from a recorded run.

    Args:
        t: Node time (>= tau).
        run_history: RunHistory with per-node V and D from node -tau onward.
        params: Model parameters.

    Raises:
        HistoryWindowError: If the history does not cover [t - 2 tau, t].
    """
    k = int(round(t / run_history.h))
    return lyapunov_from_series(
        k, run_history.V, run_history.D, run_history.m, run_history.h, params
    )


# ----------------------------------------------------------------------
# Initial datum quantities
# ----------------------------------------------------------------------


@dataclass
class InitialDatumReport:
    """
    Quantities computed solely from the initial datum.

    Attributes:
        L0: Bound of the Lyapunov functional at t = tau.
        M0: Relative rate bound for D, None when D(0) = 0.
        V0, D0: V and D at t = 0.
        m0_defined: False when D(0) = 0 (all initial velocities equal).
        low_confidence: True when refining the grid moved M0 by >= 1%.
    """

    L0: float
    M0: Optional[float]
    V0: float
    D0: float
    m0_defined: bool = True
    low_confidence: bool = False

    def to_dict(self) -> dict:
        return {
            "l0": self.L0,
            "m0": self.M0,
            "v0": self.V0,
            "d0": self.D0,
            "m0_defined": self.m0_defined,
            "low_confidence": self.low_confidence,
        }


def _datum_nodes(tau: float, m: int) -> np.ndarray:
    return np.arange(-m, 1) * (tau / m)


def initial_L0(datum: InitialDatum, params: ModelParams, m: int = 100) -> float:
    """
    L0 = (2 lambda tau + 1) e^{2 lambda tau} max_{[-tau,0]} V
         + 4 tau lambda^3 int_{-tau}^0 int_theta^0 D(s) ds dtheta.

    Constant data use the closed form
    (2 lambda tau + 1) e^{2 lambda tau} V(0) + 2 lambda^3 tau^3 D(0);
    otherwise max and integral are taken on the node grid with spacing tau / m.
    For tau = 0, L0 = V(0).
    """
    lam, tau = params.lam, params.tau
    state0 = datum.at(0.0)
    V0 = velocity_fluctuation(state0)
    if tau == 0:
        return V0
    growth = (2.0 * lam * tau + 1.0) * np.exp(2.0 * lam * tau)
    if datum.is_constant:
        D0 = weighted_fluctuation(state0, params.kernel)
        return float(growth * V0 + 2.0 * lam**3 * tau**3 * D0)

    s = _datum_nodes(tau, m)
    states = [datum.at(si) for si in s]
    V = np.array([velocity_fluctuation(st) for st in states])
    D = np.array([weighted_fluctuation(st, params.kernel) for st in states])
    # int_{-tau}^0 int_theta^0 D ds dtheta = int_{-tau}^0 (s + tau) D(s) ds
    integral = trapezoid((s + tau) * D, s)
    return float(growth * np.max(V) + 4.0 * tau * lam**3 * integral)


def _datum_sup_ratio(datum: InitialDatum, params: ModelParams, m: int) -> float:
    """Grid max of |D'(s)| / D(s) over interior nodes of (-tau, 0)."""
    tau = params.tau
    s = _datum_nodes(tau, m)
    states = [datum.at(si) for si in s]
    D = np.array([weighted_fluctuation(st, params.kernel) for st in states])
    if datum.derivative is not None:
        rates = []
        for si, st in zip(s, states):
            dst = datum.derivative(si)
            rates.append(weighted_fluctuation_rate(st, dst.x, dst.v, params.kernel))
        dD = np.array(rates)
    else:
        dD = np.gradient(D, s, edge_order=2)
    interior = slice(1, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(dD[interior]) / D[interior]
    if np.any(D[interior] <= 0):
        return float("inf")
    return float(np.max(ratio)) if ratio.size else 0.0


def initial_M0(datum: InitialDatum, params: ModelParams, m: int = 100) -> Optional[float]:
    """
    M0 = max( sup_{(-tau,0)} |D'(s)|/D(s), |D'(0+)|/D(0) ).

    For constant data only the right-derivative term remains. D'(0+) is the
    analytic derivative along the system with the datum value at -tau as
    delayed state.

    Returns:
        M0, or None when D(0) = 0 (flocking is then trivially achieved).
    """
    report = initial_datum_report(datum, params, m)
    return report.M0


def initial_datum_report(
    datum: InitialDatum, params: ModelParams, m: int = 100
) -> InitialDatumReport:
    """
    L0, M0, V(0) and D(0) of a datum.

    For non-constant data the supremum over (-tau, 0) is a node-grid maximum;
    the computation is repeated with 2m nodes and the report is flagged (and a
    UserWarning issued) when the value moves by 1% or more.
    """
    state0 = datum.at(0.0)
    V0 = velocity_fluctuation(state0)
    D0 = weighted_fluctuation(state0, params.kernel)
    L0 = initial_L0(datum, params, m)

    if D0 <= 0:
        logger.info("D(0) = 0: all initial velocities coincide, M0 undefined")
        return InitialDatumReport(L0=L0, M0=None, V0=V0, D0=D0, m0_defined=False)

    delayed = datum.at(-params.tau)
    right = abs(weighted_fluctuation_derivative(state0, delayed, params)) / D0

    low_confidence = False
    if datum.is_constant or params.tau == 0:
        M0 = right
    else:
        coarse = _datum_sup_ratio(datum, params, m)
        fine = _datum_sup_ratio(datum, params, 2 * m)
        if np.isfinite(fine) and abs(fine - coarse) >= 0.01 * max(abs(fine), 1e-300):
            low_confidence = True
            warnings.warn(
                f"Grid estimate of sup |D'|/D moved from {coarse:.6g} to {fine:.6g} "
                f"when refining m={m} -> {2 * m}; M0 is low confidence",
                UserWarning,
            )
        M0 = max(fine, right)

    return InitialDatumReport(
        L0=L0, M0=M0, V0=V0, D0=D0, m0_defined=True, low_confidence=low_confidence
    )
