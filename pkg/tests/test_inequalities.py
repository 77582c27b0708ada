"""
Tests for the inequality ledger.

Tests cover:
    - Option validation
    - The generic backward-forward margins on closed-form series
    - A full ledger on a subcritical run (zero violations)
    - Skip reasons for checks that do not apply
"""

import numpy as np
import pytest

from src.diagnostics import (
    DiagnosticsRecorder,
    InequalityOptions,
    backward_forward_margins,
    check_inequalities,
    initial_L0,
    velocity_fluctuation,
    weighted_fluctuation,
)
from src.diagnostics.inequalities import LEDGER_COLUMNS, delayed_window_integrals
from src.models import Kernel, ModelParams, constant_datum, random_cloud, simulate
from src.theory import critical_delay_constant

M = 20


def _record(params, datum, t_end, m=M):
    recorder = DiagnosticsRecorder(params, datum.N, datum.d, m=m, h=params.tau / m)
    result = simulate(params, datum, m=m, t_end=t_end, observers=[recorder])
    return result.observer_outputs[0]


# Fixtures


@pytest.fixture(scope="module")
def subcritical():
    """Ten-agent run at half the critical delay, with the recipe's rate mu."""
    kernel = Kernel.cucker_smale(0.25)
    datum = random_cloud(10, 2, position_box=1.0, velocity_spread=1.0, seed=0)
    state = datum.at(0.0)
    report = critical_delay_constant(
        1.0, kernel.alpha, velocity_fluctuation(state), weighted_fluctuation(state, kernel)
    )
    params = ModelParams(lam=1.0, tau=0.5 * report.tau_c, kernel=kernel)
    run = _record(params, datum, t_end=2.0)
    return {"params": params, "run": run, "L0": initial_L0(datum, params), "mu": report.mu}


# Test: options


class TestInequalityOptions:
    """Test ledger option validation."""

    def test_defaults(self):
        """Test default deltas and slack."""
        options = InequalityOptions()
        assert tuple(options.deltas) == (0.5, 1.0)
        assert options.slack == 1e-8
        assert options.mu is None

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"deltas": (0.0,)},
            {"epsilon": -1.0},
            {"slack": -1e-3},
            {"checks": ("dVest", "no_such_check")},
        ],
    )
    def test_invalid_options_raise(self, kwargs):
        """Test that invalid options are rejected."""
        with pytest.raises(ValueError):
            InequalityOptions(**kwargs)


# Test: backward-forward margins


class TestBackwardForwardMargins:
    """Test the two-sided exponential bound on closed-form series."""

    def test_constant_series_holds_strictly(self):
        """Test that a constant positive series has margin rate * s everywhere."""
        margins = backward_forward_margins(np.full(50, 3.0), lag=10, rate=0.5, step=0.1)
        assert len(margins) == 40
        np.testing.assert_allclose(margins["margin"], 0.5)

    def test_exponential_within_rate(self):
        """Test y = e^{a t} with |a| below and above the rate."""
        step, lag = 0.01, 10
        y = np.exp(1.0 * np.arange(200) * step)
        inside = backward_forward_margins(y, lag, rate=2.0, step=step)
        outside = backward_forward_margins(y, lag, rate=0.5, step=step)
        np.testing.assert_allclose(inside["log_ratio"], -0.1, atol=1e-12)
        assert (inside["margin"] > 0).all()
        assert (outside["margin"] < 0).all()

    def test_non_positive_samples(self):
        """Test that zeros give a margin of -inf."""
        margins = backward_forward_margins(np.array([1.0, 0.0, 1.0, 1.0]), lag=1, rate=1.0, step=1.0)
        assert margins["margin"].iloc[0] == -np.inf
        assert margins["margin"].iloc[2] == pytest.approx(1.0)

    def test_short_series(self):
        """Test that series not longer than the lag give no rows."""
        assert backward_forward_margins(np.ones(3), lag=3, rate=1.0, step=1.0).empty

    def test_invalid_lag_raises(self):
        """Test lag validation."""
        with pytest.raises(ValueError, match="lag"):
            backward_forward_margins(np.ones(5), lag=0, rate=1.0, step=1.0)


class TestDelayedWindowIntegrals:
    """Test the trapezoid integrals of the shifted series."""

    def test_constant_series(self):
        """Test int_{t-tau}^t c ds = c tau once the window is available."""
        m, h = 4, 0.25
        out = delayed_window_integrals(np.full(3 * m + 1, 2.0), m, h)
        assert np.all(np.isnan(out[:m]))
        np.testing.assert_allclose(out[m:], 2.0 * m * h)


# Test: ledger on a subcritical run


class TestLedger:
    """Test check_inequalities on a run below the critical delay."""

    def test_zero_violations(self, subcritical):
        """Test that every estimate holds at every node."""
        ledger = check_inequalities(
            subcritical["run"], subcritical["params"], subcritical["L0"],
            InequalityOptions(mu=subcritical["mu"]),
        )
        assert ledger.violations().empty
        assert ledger.all_passed()
        assert ledger.skipped == {}

    def test_check_names(self, subcritical):
        """Test that each inequality appears in the ledger."""
        ledger = check_inequalities(
            subcritical["run"], subcritical["params"], subcritical["L0"],
            InequalityOptions(mu=subcritical["mu"]),
        )
        expected = {
            "dVest[delta=0.5]",
            "dVest[delta=1]",
            "estV1",
            "D_ineq",
            "lyapunov",
            "lyapunov_vs_tau",
            "EstPhi",
            "diameter_growth",
            "lyapunov_initial_bound",
            "startup_growth",
            "fbV",
            "flocking_envelope",
        }
        assert set(ledger.checks) == expected
        assert list(ledger.entries.columns) == LEDGER_COLUMNS

    def test_node_ranges(self, subcritical):
        """Test that delayed checks start after one delay."""
        run = subcritical["run"]
        ledger = check_inequalities(run, subcritical["params"], subcritical["L0"])
        tau = subcritical["params"].tau
        dvest = ledger.entries[ledger.entries["check"] == "dVest[delta=0.5]"]
        assert dvest["t"].min() > tau
        estv1 = ledger.entries[ledger.entries["check"] == "estV1"]
        assert len(estv1) == len(run) - M - 1

    def test_summary_and_worst_margins(self, subcritical):
        """Test the per-check summary."""
        ledger = check_inequalities(
            subcritical["run"], subcritical["params"], subcritical["L0"],
            InequalityOptions(checks=("estV1", "fbV")),
        )
        summary = ledger.summary()
        assert summary["estV1"]["applicable"]
        assert summary["estV1"]["violations"] == 0
        assert summary["fbV"] == {"applicable": False, "reason": "no rate mu given"}
        assert set(ledger.worst_margins()) == {"estV1"}
        assert ledger.worst_margins()["estV1"] > 0

    def test_subset_of_checks(self, subcritical):
        """Test that options.checks restricts the ledger."""
        ledger = check_inequalities(
            subcritical["run"], subcritical["params"], subcritical["L0"],
            InequalityOptions(checks=("EstPhi",)),
        )
        assert ledger.checks == ["EstPhi"]


class TestLedgerApplicability:
    """Test skipped checks and rejected runs."""

    def test_large_delay_skips_lyapunov_checks(self):
        """Test that lambda*tau > 1/2 skips the checks built on the Lyapunov bound."""
        params = ModelParams(lam=1.0, tau=0.6, kernel=Kernel.constant(1.0))
        datum = constant_datum(np.array([[0.0], [1.0]]), np.array([[1.0], [-1.0]]))
        run = _record(params, datum, t_end=1.5, m=10)
        ledger = check_inequalities(run, params, initial_L0(datum, params))
        for name in ("D_ineq", "lyapunov", "EstPhi", "diameter_growth"):
            assert ledger.skipped[name].startswith("requires lambda*tau <= 1/2")
        assert ledger.skipped["fbV"] == "no rate mu given"
        assert "estV1" in ledger.checks

    def test_undelayed_run_raises(self):
        """Test that tau = 0 runs are rejected."""
        params = ModelParams(lam=1.0, tau=0.0, kernel=Kernel.constant(1.0))
        datum = constant_datum(np.array([[0.0], [1.0]]), np.array([[1.0], [-1.0]]))
        recorder = DiagnosticsRecorder(params, 2, 1, m=10, h=0.01)
        run = simulate(params, datum, m=10, t_end=0.5, observers=[recorder]).observer_outputs[0]
        with pytest.raises(ValueError, match="tau > 0"):
            check_inequalities(run, params, 2.0)
