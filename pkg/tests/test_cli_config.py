"""
Unit tests for the run configuration parser and process settings.
"""

import json

import numpy as np
import pytest

from src.cli import config as cli_config
from src.cli.config import (
    RunConfig,
    get_config,
    load_run_config,
    parse_run_config,
)
from src.exceptions import ConfigError


def base_raw():
    return {
        "model": {"lambda": 1.0, "tau": 0.05, "kernel": {"kind": "cucker_smale", "beta": 0.3}},
        "ensemble": {
            "N": 5,
            "d": 2,
            "datum": {"kind": "random_cloud", "position_box": 1.0, "velocity_spread": 1.0},
        },
        "integration": {"m": 20, "t_end": 1.0},
        "seed": 3,
    }


def explicit_raw():
    raw = base_raw()
    raw["ensemble"] = {
        "N": 2,
        "d": 1,
        "datum": {"kind": "explicit", "x": [[0.0], [1.0]], "v": [[0.5], [-0.5]]},
    }
    return raw


class TestParseRunConfig:
    """Test schema validation and defaults."""

    def test_defaults_filled_in(self):
        """Test that optional sections take their documented defaults."""
        config = parse_run_config(base_raw())
        assert config.outputs.csv == "series.csv"
        assert config.outputs.report == "summary.json"
        assert config.outputs.stride == 10
        assert config.detection.v_tol == 1e-6
        assert config.detection.dx_cap == 1e6
        assert config.theory.margin == 0.1
        assert config.sweep.values == ()
        assert config.feedback.horizon == 50.0
        assert config.seed == 3

    def test_round_trip(self):
        """Test that the embedded config parses back to an equal config."""
        for raw in (base_raw(), explicit_raw()):
            config = parse_run_config(raw)
            again = parse_run_config(json.loads(config.to_json()))
            assert again == config
            assert again.to_json() == config.to_json()

    def test_params_and_datum(self):
        """Test conversion to model parameters and a seeded datum."""
        config = parse_run_config(base_raw())
        params = config.params()
        assert params.lam == 1.0 and params.tau == 0.05
        assert params.kernel.alpha == pytest.approx(0.6)
        first, second = config.datum().at(0.0), config.datum().at(0.0)
        np.testing.assert_array_equal(first.v, second.v)
        assert first.v.shape == (5, 2)

    def test_explicit_datum(self):
        """Test an explicit constant datum."""
        datum = parse_run_config(explicit_raw()).datum()
        assert datum.kind == "explicit"
        assert datum.is_constant
        np.testing.assert_array_equal(datum.at(-0.05).v, [[0.5], [-0.5]])

    def test_one_dimensional_vectors(self):
        """Test that flat lists are accepted for d = 1."""
        raw = explicit_raw()
        raw["ensemble"]["datum"]["x"] = [0.0, 1.0]
        assert parse_run_config(raw).ensemble.datum.x == ((0.0,), (1.0,))

    def test_linear_ramp(self):
        """Test a ramp datum with its slope."""
        raw = explicit_raw()
        raw["ensemble"]["datum"] = {
            "kind": "linear_ramp", "x": [[0.0], [1.0]], "v": [[1.0], [0.0]], "slope": [[1.0], [-1.0]],
        }
        datum = parse_run_config(raw).datum()
        assert not datum.is_constant

    def test_constant_kernel(self):
        """Test the constant kernel section."""
        raw = base_raw()
        raw["model"]["kernel"] = {"kind": "constant", "value": 0.5}
        config = parse_run_config(raw)
        assert config.params().kernel.alpha == 0.0
        assert config.model.kernel.to_dict() == {"kind": "constant", "value": 0.5}


class TestConfigErrors:
    """Test that invalid documents name the offending field."""

    @pytest.mark.parametrize(
        "mutate,path",
        [
            (lambda raw: raw.update(extra=1), "extra"),
            (lambda raw: raw["model"].update(gamma=1), "model.gamma"),
            (lambda raw: raw["model"]["kernel"].update(beta="x"), "model.kernel.beta"),
            (lambda raw: raw["model"]["kernel"].update(kind="gaussian"), "model.kernel.kind"),
            (lambda raw: raw["model"].update(tau=-0.1), "model.tau"),
            (lambda raw: raw["model"].update({"lambda": 0.0}), "model.lambda"),
            (lambda raw: raw["ensemble"].update(N=1), "ensemble.N"),
            (lambda raw: raw["ensemble"].update(N=2.5), "ensemble.N"),
            (lambda raw: raw["ensemble"]["datum"].update(x=[[0.0]]), "ensemble.datum.x"),
            (lambda raw: raw["integration"].update(m=1), "integration.m"),
            (lambda raw: raw.update(outputs={"stride": 0}), "outputs.stride"),
            (lambda raw: raw.update(sweep={"axis": "beta"}), "sweep.axis"),
            (lambda raw: raw.update(sweep={"axis": "N", "values": [10, 2.5]}), "sweep.values[1]"),
            (lambda raw: raw.update(feedback={"u0": 0.0}), "feedback.u0"),
            (lambda raw: raw.update(feedback={"horizon": 1000}), "feedback.horizon"),
            (lambda raw: raw.update(seed="seven"), "seed"),
            (lambda raw: raw.pop("model"), "model"),
        ],
    )
    def test_error_path(self, mutate, path):
        """Test the dotted path carried by ConfigError."""
        raw = base_raw()
        mutate(raw)
        with pytest.raises(ConfigError) as info:
            parse_run_config(raw)
        assert info.value.path == path
        assert str(info.value).startswith(path)

    def test_constant_kernel_range(self):
        """Test that a constant rate must lie in (0, 1]."""
        raw = base_raw()
        raw["model"]["kernel"] = {"kind": "constant", "value": 1.5}
        with pytest.raises(ConfigError, match="model.kernel.value"):
            parse_run_config(raw)

    def test_explicit_datum_shape(self):
        """Test that explicit arrays must be (N, d)."""
        raw = explicit_raw()
        raw["ensemble"]["datum"]["v"] = [[0.5, 0.0], [-0.5, 0.0]]
        with pytest.raises(ConfigError, match="ensemble.datum.v"):
            parse_run_config(raw)

    def test_not_an_object(self):
        """Test a non-object document."""
        with pytest.raises(ConfigError):
            parse_run_config([1, 2, 3])


class TestRunConfigCopies:
    """Test seed and sweep-axis overrides."""

    def test_with_seed(self):
        """Test that the seed override changes the datum."""
        config = parse_run_config(base_raw())
        other = config.with_seed(4)
        assert other.seed == 4
        assert not np.array_equal(config.datum().at(0.0).v, other.datum().at(0.0).v)

    @pytest.mark.parametrize("axis,value", [("tau", 0.2), ("lambda", 2.0), ("N", 7)])
    def test_with_value(self, axis, value):
        """Test each sweep axis."""
        config = parse_run_config(base_raw()).with_value(axis, value)
        assert config.to_dict()["model" if axis != "N" else "ensemble"][axis] == value

    def test_n_axis_needs_random_cloud(self):
        """Test that explicit data cannot change size."""
        with pytest.raises(ConfigError, match="random_cloud"):
            parse_run_config(explicit_raw()).with_value("N", 4)

    def test_unknown_axis(self):
        """Test an unsupported sweep axis."""
        with pytest.raises(ConfigError):
            parse_run_config(base_raw()).with_value("beta", 0.1)


class TestLoadRunConfig:
    """Test reading configuration files."""

    def test_load_file(self, tmp_path):
        """Test loading a JSON file from disk."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps(base_raw()))
        assert isinstance(load_run_config(path), RunConfig)

    def test_missing_file(self, tmp_path):
        """Test a missing configuration file."""
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        """Test a file that is not JSON."""
        path = tmp_path / "broken.json"
        path.write_text("{model: ")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_run_config(path)


class TestProcessSettings:
    """Test environment-selected settings classes."""

    def test_named_environments(self):
        """Test the lookup of each environment name."""
        assert get_config("development") is cli_config.DevelopmentConfig
        assert get_config("testing") is cli_config.TestingConfig
        assert get_config("production") is cli_config.ProductionConfig

    def test_unknown_environment_falls_back(self):
        """Test the production fallback."""
        assert get_config("staging") is cli_config.ProductionConfig

    def test_environment_variable(self, monkeypatch):
        """Test that FLOCK_ENV selects the settings."""
        monkeypatch.setenv("FLOCK_ENV", "testing")
        settings = get_config()
        assert settings is cli_config.TestingConfig
        assert settings.THREADS == 1
        assert settings.SHOW_PROGRESS is False
