"""
End-to-end tests for the command line subcommands.

Tests cover:
    - simulate: CSV layout, summary, oracle agreement, oscillation count
    - critical-delay: trivial and constant-datum reports
    - sweep: empty and small sweeps
    - validate and feedback artifacts
    - main(): exit codes and output files
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.cli import cmd_critical_delay, cmd_feedback, cmd_simulate, cmd_sweep, cmd_validate, parse_run_config
from src.cli.__main__ import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, main
from src.cli.commands import jsonable
from src.cli.services import SWEEP_COLUMNS, verdict_transition
from src.feedback import FeedbackProblem, exact_solve

pytestmark = pytest.mark.integration


def two_agent_raw(lam=1.0, tau=0.2, m=100, t_end=5.0, stride=1):
    return {
        "model": {"lambda": lam, "tau": tau, "kernel": {"kind": "constant", "value": 1.0}},
        "ensemble": {
            "N": 2,
            "d": 1,
            "datum": {"kind": "explicit", "x": [[0.0], [1.0]], "v": [[0.5], [-0.5]]},
        },
        "integration": {"m": m, "t_end": t_end},
        "outputs": {"stride": stride},
    }


def cloud_raw(N=10, tau=0.0, t_end=1.0, m=20):
    return {
        "model": {"lambda": 1.0, "tau": tau, "kernel": {"kind": "cucker_smale", "beta": 0.25}},
        "ensemble": {
            "N": N,
            "d": 2,
            "datum": {"kind": "random_cloud", "position_box": 1.0, "velocity_spread": 1.0},
        },
        "integration": {"m": m, "t_end": t_end},
        "seed": 7,
    }


def write_config(tmp_path, raw, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


# Test: serialisation helper


class TestJsonable:
    """Test conversion to plain JSON values."""

    def test_special_values(self):
        """Test infinities, NaN and numpy scalars."""
        out = jsonable({"a": np.inf, "b": -np.inf, "c": np.nan, "d": np.float64(1.5), "e": np.int64(3)})
        assert out == {"a": "inf", "b": "-inf", "c": None, "d": 1.5, "e": 3}

    def test_nested(self):
        """Test arrays inside lists and booleans."""
        assert jsonable([np.array([1.0, 2.0]), np.bool_(True)]) == [[1.0, 2.0], True]


# Test: simulate


class TestSimulate:
    """Test cmd_simulate."""

    def test_equal_velocities_flock(self, tmp_path):
        """Test that a datum with equal velocities is Flocking with V identically zero."""
        raw = two_agent_raw(tau=0.1, m=10, t_end=1.0)
        raw["ensemble"] = {
            "N": 3,
            "d": 1,
            "datum": {"kind": "explicit", "x": [[0.0], [1.0], [3.0]], "v": [[0.5], [0.5], [0.5]]},
        }
        config = parse_run_config(raw)
        summary = cmd_simulate(config, tmp_path)
        series = pd.read_csv(tmp_path / "series.csv")
        assert summary["verdict"] == "Flocking"
        assert list(series.columns) == ["t", "V", "D", "dX", "phi", "L", "p_1"]
        assert (series["V"] == 0.0).all()
        assert series["L"][series["t"] <= 0.1 + 1e-12].isna().all()
        assert series["L"][series["t"] > 0.1 + 1e-12].notna().all()

    def test_two_agents_match_feedback_oracle(self, tmp_path):
        """Test V = u^2 against the exact solution at lambda * tau = 0.2."""
        config = parse_run_config(two_agent_raw())
        cmd_simulate(config, tmp_path)
        series = pd.read_csv(tmp_path / "series.csv")
        problem = FeedbackProblem(lam=1.0, tau=0.2, u0=1.0, t_end=5.0)
        u = exact_solve(problem, series["t"].to_numpy())
        assert np.max(np.abs(series["V"].to_numpy() - u**2)) <= 1e-8

    def test_oscillatory_delay_reports_increase(self, tmp_path):
        """Test that lambda * tau = 0.6 gives at least one rise of V."""
        config = parse_run_config(two_agent_raw(tau=0.6, m=50, t_end=10.0))
        summary = cmd_simulate(config, tmp_path)
        assert summary["oscillations"] >= 1

    def test_summary_contents(self, tmp_path):
        """Test the summary keys and the embedded configuration."""
        config = parse_run_config(cloud_raw(tau=0.05))
        cmd_simulate(config, tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["config"] == config.to_dict()
        assert summary["diverged_at"] is None
        assert summary["momentum_drift"] <= summary["momentum_tolerance"]
        assert summary["min_L"] <= summary["max_L"]
        assert "lyapunov" in summary["ledger_worst_margins"]
        assert summary["datum"]["m0_defined"] is True

    def test_momentum_drift_is_absolute(self, tmp_path):
        """Test that the drift tolerance scales with 1 + |P(0)| for a moving flock."""
        raw = two_agent_raw(tau=0.2, m=20, t_end=2.0)
        raw["ensemble"]["datum"]["v"] = [[3.0], [1.0]]
        summary = cmd_simulate(parse_run_config(raw), tmp_path)
        assert summary["momentum_tolerance"] == pytest.approx(1e-8 * (1.0 + 4.0))
        assert 0.0 <= summary["momentum_drift"] <= summary["momentum_tolerance"]

    def test_stride(self, tmp_path):
        """Test that the CSV keeps every stride-th node plus the last one."""
        raw = two_agent_raw(m=10, t_end=1.0, stride=7)
        cmd_simulate(parse_run_config(raw), tmp_path)
        series = pd.read_csv(tmp_path / "series.csv")
        assert len(series) == 9
        assert series["t"].iloc[-1] == pytest.approx(1.0)

    def test_same_seed_same_bytes(self, tmp_path):
        """Test byte-identical CSV output for identical configurations."""
        config = parse_run_config(cloud_raw(tau=0.05, t_end=0.5))
        cmd_simulate(config, tmp_path / "a")
        cmd_simulate(config, tmp_path / "b")
        assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()


# Test: critical-delay


class TestCriticalDelay:
    """Test cmd_critical_delay."""

    def test_constant_datum_report(self, tmp_path):
        """Test the constant-datum path and lambda * tau_c < 1/(2e)."""
        payload = cmd_critical_delay(parse_run_config(cloud_raw()), tmp_path)
        report = payload["report"]
        assert report["path"] == "ConstantDatum"
        assert report["tau_c"] < 1.0 / (2.0 * np.e)
        assert json.loads((tmp_path / "critical_delay.json").read_text())["report"]["path"] == "ConstantDatum"

    def test_equal_velocities_trivial(self, tmp_path):
        """Test the infinite tau_c flag and note for coinciding velocities."""
        raw = two_agent_raw()
        raw["ensemble"]["datum"]["v"] = [[0.5], [0.5]]
        cmd_critical_delay(parse_run_config(raw), tmp_path)
        report = json.loads((tmp_path / "critical_delay.json").read_text())["report"]
        assert report["tau_c"] == "inf"
        assert "flocking is immediate" in report["note"]

    def test_ramp_uses_general_path(self, tmp_path):
        """Test that a non-constant datum takes the general path."""
        raw = two_agent_raw(tau=0.05)
        raw["ensemble"]["datum"] = {
            "kind": "linear_ramp", "x": [[0.0], [1.0]], "v": [[0.5], [-0.5]], "slope": [[0.2], [0.0]],
        }
        report = cmd_critical_delay(parse_run_config(raw), tmp_path)["report"]
        assert report["path"] == "GeneralDatum"
        assert report["mu"] > report["k"]


# Test: sweep


class TestSweep:
    """Test cmd_sweep."""

    def test_empty_sweep(self, tmp_path):
        """Test that no values give an empty table and files."""
        raw = cloud_raw(tau=0.05)
        raw["sweep"] = {"axis": "tau", "values": []}
        table = cmd_sweep(parse_run_config(raw), tmp_path, show_progress=False)
        assert table.empty
        assert list(pd.read_csv(tmp_path / "sweep.csv").columns) == SWEEP_COLUMNS
        assert json.loads((tmp_path / "sweep.json").read_text())["rows"] == 0

    def test_lambda_sweep_rows_in_order(self, tmp_path):
        """Test one row per value in input order."""
        raw = two_agent_raw(m=10, t_end=1.0)
        raw["sweep"] = {"axis": "lambda", "values": [0.5, 1.0]}
        table = cmd_sweep(parse_run_config(raw), tmp_path, show_progress=False)
        assert list(table["value"]) == [0.5, 1.0]
        assert table["tau_c"].iloc[0] > table["tau_c"].iloc[1]

    def test_verdict_transition(self):
        """Test the first non-flocking value."""
        table = pd.DataFrame({"value": [0.1, 0.2, 0.3], "verdict": ["Flocking", "Flocking", "NotDecided"]})
        assert verdict_transition(table) == {"flocking_at_start": True, "first_non_flocking": 0.3}


# Test: validate and feedback


class TestValidateAndFeedback:
    """Test cmd_validate and cmd_feedback artifacts."""

    def test_validate_writes_ledger(self, tmp_path):
        """Test ledger.csv and the validation document."""
        config = parse_run_config(cloud_raw(N=6, tau=0.02, t_end=0.5, m=10))
        result = cmd_validate(config, tmp_path)
        ledger = pd.read_csv(tmp_path / "ledger.csv")
        assert list(ledger.columns) == ["check", "t", "lhs", "rhs", "margin", "passed"]
        doc = json.loads((tmp_path / "validation.json").read_text())
        assert doc["kernel"]["all_passed"]
        assert "estV1" in doc["ledger"]["checks"]
        assert result["backward_forward"]["n_checked"] > 0

    def test_validate_undelayed_note(self, tmp_path):
        """Test that tau = 0 skips the delayed estimates."""
        result = cmd_validate(parse_run_config(cloud_raw(N=4, t_end=0.2)), tmp_path)
        assert result["ledger"] is None
        assert "undelayed" in result["note"]
        assert not (tmp_path / "ledger.csv").exists()

    def test_feedback_oscillatory(self, tmp_path):
        """Test regime, first sign change and the CSV for lambda * tau = 0.6."""
        summary = cmd_feedback(parse_run_config(two_agent_raw(tau=0.6)), tmp_path)
        assert summary["regime"] == "OscillatoryStable"
        assert summary["first_sign_change"] == pytest.approx(1.6 - np.sqrt(0.2), abs=1e-9)
        assert summary["sign_changes"] >= 2
        assert list(pd.read_csv(tmp_path / "feedback.csv").columns) == ["t", "u"]

    def test_feedback_stable_estimates(self, tmp_path):
        """Test that the decay estimates are attached below z*."""
        summary = cmd_feedback(parse_run_config(two_agent_raw(tau=0.2)), tmp_path)
        assert summary["regime"] == "NonOscillatoryStable"
        assert summary["first_sign_change"] is None
        assert summary["energy_decay"]["current"]["violations"] == 0
        assert summary["backward_forward"]["violations"] == 0


# Test: main()


class TestMain:
    """Test the entry point and its exit codes."""

    def test_success(self, tmp_path):
        """Test a successful run writes its outputs."""
        path = write_config(tmp_path, two_agent_raw(m=10, t_end=1.0))
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == EXIT_OK
        assert (out / "series.csv").exists()
        assert (out / "summary.json").exists()

    def test_schema_error(self, tmp_path):
        """Test exit code 2 on an unknown key."""
        raw = two_agent_raw()
        raw["model"]["delay"] = 0.1
        path = write_config(tmp_path, raw)
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        """Test exit code 2 for a missing file."""
        assert main(["critical-delay", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_divergence(self, tmp_path):
        """Test exit code 3 when lambda * tau is beyond pi/2."""
        path = write_config(tmp_path, two_agent_raw(lam=1.0, tau=2.0, m=20, t_end=80.0))
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == EXIT_DIVERGED
        assert json.loads((out / "summary.json").read_text())["verdict"] == "Diverged"

    def test_validate_divergence(self, tmp_path):
        """Test exit code 3 when the validated run diverges."""
        path = write_config(tmp_path, two_agent_raw(lam=1.0, tau=2.0, m=20, t_end=80.0))
        out = tmp_path / "out"
        assert main(["validate", "--config", str(path), "--out", str(out)]) == EXIT_DIVERGED
        assert json.loads((out / "validation.json").read_text())["verdict"] == "Diverged"

    def test_sweep_divergence(self, tmp_path):
        """Test exit code 3 when any sweep row diverges."""
        raw = two_agent_raw(lam=1.0, tau=0.2, m=20, t_end=80.0)
        raw["sweep"] = {"axis": "tau", "values": [0.2, 2.0]}
        path = write_config(tmp_path, raw)
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_DIVERGED

    def test_seed_override(self, tmp_path):
        """Test that --seed is embedded in the outputs."""
        path = write_config(tmp_path, cloud_raw(N=4, tau=0.05, t_end=0.2))
        main(["simulate", "--config", str(path), "--out", str(tmp_path), "--seed", "11"])
        assert json.loads((tmp_path / "summary.json").read_text())["config"]["seed"] == 11

    def test_feedback_needs_delay(self, tmp_path):
        """Test exit code 2 for the feedback oracle without a delay."""
        path = write_config(tmp_path, two_agent_raw(tau=0.0))
        assert main(["feedback", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
