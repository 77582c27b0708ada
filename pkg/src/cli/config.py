"""
Configuration management for the command line front end.

Two layers:
- process settings (output directory, worker count, log level) read from the
  environment / a .env file, with development, production and testing variants;
- run configurations: JSON documents parsed into frozen dataclasses. Unknown
  keys and wrong types raise ConfigError with the dotted path of the field.

Example run configuration:

    {
      "model": {"lambda": 1.0, "tau": 0.05,
                "kernel": {"kind": "cucker_smale", "beta": 0.3}},
      "ensemble": {"N": 50, "d": 2,
                   "datum": {"kind": "random_cloud", "position_box": 1.0,
                             "velocity_spread": 1.0}},
      "integration": {"m": 100, "t_end": 20.0},
      "outputs": {"csv": "series.csv", "report": "summary.json", "stride": 10},
      "seed": 7
    }
"""

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from src.exceptions import ConfigError
from src.feedback.feedback_lab import MAX_INTERVALS
from src.models import (
    InitialDatum,
    Kernel,
    ModelParams,
    constant_datum,
    linear_ramp,
    random_cloud,
)

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent
PROJECT_ROOT = BASE_DIR.parent.parent


class Config:
    """Process-level settings shared by all subcommands."""

    OUT_DIR = Path(os.environ.get("FLOCK_OUT_DIR", str(PROJECT_ROOT / "results")))
    THREADS = int(os.environ.get("FLOCK_THREADS", 1))
    LOG_LEVEL = os.environ.get("FLOCK_LOG_LEVEL", "INFO").upper()
    SHOW_PROGRESS = True


class DevelopmentConfig(Config):
    LOG_LEVEL = os.environ.get("FLOCK_LOG_LEVEL", "DEBUG").upper()


class ProductionConfig(Config):
    pass


class TestingConfig(Config):
    THREADS = 1
    SHOW_PROGRESS = False


config = {
    "development": DevelopmentConfig,
    "production": ProductionConfig,
    "testing": TestingConfig,
    "default": ProductionConfig,
}


def get_config(env: Optional[str] = None):
    """
    Settings class for an environment name (default: FLOCK_ENV).

    Unknown names fall back to the production settings.
    """
    if env is None:
        env = os.environ.get("FLOCK_ENV", "production")
    return config.get(env, config["default"])


# ----------------------------------------------------------------------
# Run configuration
# ----------------------------------------------------------------------

DATUM_KINDS = ("random_cloud", "explicit", "linear_ramp")
SWEEP_AXES = ("tau", "lambda", "N")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _mapping(raw: Any, path: str, allowed: Sequence[str]) -> Mapping[str, Any]:
    if not isinstance(raw, Mapping):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(_join(path, unknown[0]), "unknown key")
    return raw


def _number(
    raw: Mapping[str, Any],
    key: str,
    path: str,
    default: Optional[float] = None,
    minimum: Optional[float] = None,
    strict: bool = False,
) -> float:
    where = _join(path, key)
    if key not in raw:
        if default is None:
            raise ConfigError(where, "required field missing")
        return float(default)
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(where, "must be finite")
    if minimum is not None and (value <= minimum if strict else value < minimum):
        relation = ">" if strict else ">="
        raise ConfigError(where, f"must be {relation} {minimum}, got {value}")
    return value


def _integer(
    raw: Mapping[str, Any], key: str, path: str, default: Optional[int] = None, minimum: int = 0
) -> int:
    where = _join(path, key)
    if key not in raw:
        if default is None:
            raise ConfigError(where, "required field missing")
        return int(default)
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(where, f"expected an integer, got {type(value).__name__}")
    if value < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {value}")
    return value


def _string(
    raw: Mapping[str, Any], key: str, path: str, default: Optional[str], choices: Sequence[str] = ()
) -> str:
    where = _join(path, key)
    value = raw.get(key, default)
    if value is None:
        raise ConfigError(where, "required field missing")
    if not isinstance(value, str):
        raise ConfigError(where, f"expected a string, got {type(value).__name__}")
    if choices and value not in choices:
        raise ConfigError(where, f"must be one of {list(choices)}, got '{value}'")
    return value


def _matrix(raw: Mapping[str, Any], key: str, path: str, shape: Tuple[int, int]) -> Tuple:
    where = _join(path, key)
    if key not in raw:
        raise ConfigError(where, "required field missing")
    try:
        arr = np.asarray(raw[key], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(where, "expected a numeric array")
    if arr.ndim == 1 and shape[1] == 1:
        arr = arr.reshape(-1, 1)
    if arr.shape != shape:
        raise ConfigError(where, f"expected shape {list(shape)}, got {list(arr.shape)}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(where, "must be finite")
    return tuple(tuple(float(x) for x in row) for row in arr)


@dataclass(frozen=True)
class KernelSection:
    kind: str = "cucker_smale"
    beta: float = 0.0
    value: float = 1.0
    gamma: Optional[float] = None
    c: Optional[float] = None
    R: Optional[float] = None

    def to_kernel(self) -> Kernel:
        if self.kind == "constant":
            return Kernel.constant(self.value)
        return Kernel.cucker_smale(self.beta, gamma=self.gamma, c=self.c, R=self.R)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "constant":
            return {"kind": self.kind, "value": self.value}
        out = {"kind": self.kind, "beta": self.beta}
        for name in ("gamma", "c", "R"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out


@dataclass(frozen=True)
class ModelSection:
    lam: float
    tau: float
    kernel: KernelSection

    def to_params(self) -> ModelParams:
        return ModelParams(lam=self.lam, tau=self.tau, kernel=self.kernel.to_kernel())

    def to_dict(self) -> Dict[str, Any]:
        return {"lambda": self.lam, "tau": self.tau, "kernel": self.kernel.to_dict()}


@dataclass(frozen=True)
class DatumSection:
    kind: str = "random_cloud"
    position_box: float = 1.0
    velocity_spread: float = 1.0
    x: Optional[Tuple] = None
    v: Optional[Tuple] = None
    slope: Optional[Tuple] = None

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "random_cloud":
            return {
                "kind": self.kind,
                "position_box": self.position_box,
                "velocity_spread": self.velocity_spread,
            }
        out = {"kind": self.kind, "x": [list(r) for r in self.x], "v": [list(r) for r in self.v]}
        if self.kind == "linear_ramp":
            out["slope"] = [list(r) for r in self.slope]
        return out


@dataclass(frozen=True)
class EnsembleSection:
    N: int
    d: int
    datum: DatumSection

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "d": self.d, "datum": self.datum.to_dict()}


@dataclass(frozen=True)
class IntegrationSection:
    m: int = 100
    t_end: float = 10.0
    undelayed_step: float = 1e-2

    def to_dict(self) -> Dict[str, Any]:
        return {"m": self.m, "t_end": self.t_end, "undelayed_step": self.undelayed_step}


@dataclass(frozen=True)
class OutputSection:
    csv: str = "series.csv"
    report: str = "summary.json"
    stride: int = 10

    def to_dict(self) -> Dict[str, Any]:
        return {"csv": self.csv, "report": self.report, "stride": self.stride}


@dataclass(frozen=True)
class DetectionSection:
    v_tol: float = 1e-6
    window: int = 10
    dx_cap: float = 1e6

    def to_dict(self) -> Dict[str, Any]:
        return {"v_tol": self.v_tol, "window": self.window, "dx_cap": self.dx_cap}


@dataclass(frozen=True)
class TheorySection:
    margin: float = 0.1
    datum_grid: int = 100

    def to_dict(self) -> Dict[str, Any]:
        return {"margin": self.margin, "datum_grid": self.datum_grid}


@dataclass(frozen=True)
class SweepSection:
    axis: str = "tau"
    values: Tuple[float, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"axis": self.axis, "values": list(self.values)}


@dataclass(frozen=True)
class FeedbackSection:
    """Two-agent feedback run; horizon is in delay units."""

    u0: float = 1.0
    horizon: float = 50.0
    resolution: int = 64

    def to_dict(self) -> Dict[str, Any]:
        return {"u0": self.u0, "horizon": self.horizon, "resolution": self.resolution}


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved run configuration (defaults filled in).

    to_dict() gives the canonical JSON form embedded in every output; parsing
    it again yields an equal RunConfig.
    """

    model: ModelSection
    ensemble: EnsembleSection
    integration: IntegrationSection = field(default_factory=IntegrationSection)
    outputs: OutputSection = field(default_factory=OutputSection)
    detection: DetectionSection = field(default_factory=DetectionSection)
    theory: TheorySection = field(default_factory=TheorySection)
    sweep: SweepSection = field(default_factory=SweepSection)
    feedback: FeedbackSection = field(default_factory=FeedbackSection)
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "ensemble": self.ensemble.to_dict(),
            "integration": self.integration.to_dict(),
            "outputs": self.outputs.to_dict(),
            "detection": self.detection.to_dict(),
            "theory": self.theory.to_dict(),
            "sweep": self.sweep.to_dict(),
            "feedback": self.feedback.to_dict(),
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def params(self) -> ModelParams:
        return self.model.to_params()

    def datum(self) -> InitialDatum:
        """Initial datum described by the ensemble section."""
        spec = self.ensemble.datum
        if spec.kind == "random_cloud":
            return random_cloud(
                self.ensemble.N, self.ensemble.d, spec.position_box, spec.velocity_spread, self.seed
            )
        x, v = np.array(spec.x), np.array(spec.v)
        if spec.kind == "explicit":
            return constant_datum(x, v, kind="explicit")
        return linear_ramp(x, v, np.array(spec.slope))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=int(seed))

    def with_value(self, axis: str, value: float) -> "RunConfig":
        """Copy with one sweep axis set to value."""
        if axis == "tau":
            return replace(self, model=replace(self.model, tau=float(value)))
        if axis == "lambda":
            return replace(self, model=replace(self.model, lam=float(value)))
        if axis == "N":
            if self.ensemble.datum.kind != "random_cloud":
                raise ConfigError("sweep.axis", "an N sweep needs a random_cloud datum")
            return replace(self, ensemble=replace(self.ensemble, N=int(value)))
        raise ConfigError("sweep.axis", f"must be one of {list(SWEEP_AXES)}, got '{axis}'")


def _parse_kernel(raw: Any, path: str) -> KernelSection:
    raw = _mapping(raw, path, ("kind", "beta", "value", "gamma", "c", "R"))
    kind = _string(raw, "kind", path, "cucker_smale", ("cucker_smale", "constant"))
    if kind == "constant":
        value = _number(raw, "value", path, 1.0, minimum=0.0, strict=True)
        if value > 1:
            raise ConfigError(_join(path, "value"), f"must lie in (0, 1], got {value}")
        return KernelSection(kind=kind, value=value)
    optional = {
        name: _number(raw, name, path, minimum=0.0) if name in raw else None
        for name in ("gamma", "c", "R")
    }
    return KernelSection(kind=kind, beta=_number(raw, "beta", path, 0.0, minimum=0.0), **optional)


def _parse_datum(raw: Any, path: str, N: int, d: int) -> DatumSection:
    raw = _mapping(raw, path, ("kind", "position_box", "velocity_spread", "x", "v", "slope"))
    kind = _string(raw, "kind", path, "random_cloud", DATUM_KINDS)
    if kind == "random_cloud":
        stray = sorted(set(raw) & {"x", "v", "slope"})
        if stray:
            raise ConfigError(_join(path, stray[0]), "not used by a random_cloud datum")
        return DatumSection(
            kind=kind,
            position_box=_number(raw, "position_box", path, 1.0, minimum=0.0),
            velocity_spread=_number(raw, "velocity_spread", path, 1.0, minimum=0.0),
        )
    stray = sorted(set(raw) & {"position_box", "velocity_spread"})
    if stray:
        raise ConfigError(_join(path, stray[0]), f"not used by a {kind} datum")
    if kind == "explicit" and "slope" in raw:
        raise ConfigError(_join(path, "slope"), "not used by an explicit datum")
    return DatumSection(
        kind=kind,
        x=_matrix(raw, "x", path, (N, d)),
        v=_matrix(raw, "v", path, (N, d)),
        slope=_matrix(raw, "slope", path, (N, d)) if kind == "linear_ramp" else None,
    )


def _parse_sweep(raw: Any, path: str) -> SweepSection:
    raw = _mapping(raw, path, ("axis", "values"))
    axis = _string(raw, "axis", path, "tau", SWEEP_AXES)
    values = raw.get("values", [])
    if not isinstance(values, list):
        raise ConfigError(_join(path, "values"), "expected a list")
    parsed = []
    for i, value in enumerate(values):
        where = f"{_join(path, 'values')}[{i}]"
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            raise ConfigError(where, "expected a finite number")
        if axis == "N" and (int(value) != value or value < 2):
            raise ConfigError(where, "N values must be integers >= 2")
        parsed.append(float(value))
    return SweepSection(axis=axis, values=tuple(parsed))


def parse_run_config(raw: Any) -> RunConfig:
    """
    Validate a decoded JSON document and build a RunConfig.

    Raises:
        ConfigError: On unknown keys, missing required fields, wrong types or
                     out-of-range values, with the dotted path of the field.
    """
    top = _mapping(
        raw,
        "",
        ("model", "ensemble", "integration", "outputs", "detection", "theory", "sweep", "feedback", "seed"),
    )
    for section in ("model", "ensemble"):
        if section not in top:
            raise ConfigError(section, "required section missing")

    model_raw = _mapping(top["model"], "model", ("lambda", "tau", "kernel"))
    model = ModelSection(
        lam=_number(model_raw, "lambda", "model", minimum=0.0, strict=True),
        tau=_number(model_raw, "tau", "model", minimum=0.0),
        kernel=_parse_kernel(model_raw.get("kernel", {}), "model.kernel"),
    )

    ens_raw = _mapping(top["ensemble"], "ensemble", ("N", "d", "datum"))
    N = _integer(ens_raw, "N", "ensemble", minimum=2)
    d = _integer(ens_raw, "d", "ensemble", minimum=1)
    ensemble = EnsembleSection(
        N=N, d=d, datum=_parse_datum(ens_raw.get("datum", {}), "ensemble.datum", N, d)
    )

    integ_raw = _mapping(top.get("integration", {}), "integration", ("m", "t_end", "undelayed_step"))
    integration = IntegrationSection(
        m=_integer(integ_raw, "m", "integration", 100, minimum=2),
        t_end=_number(integ_raw, "t_end", "integration", 10.0, minimum=0.0, strict=True),
        undelayed_step=_number(integ_raw, "undelayed_step", "integration", 1e-2, minimum=0.0, strict=True),
    )

    out_raw = _mapping(top.get("outputs", {}), "outputs", ("csv", "report", "stride"))
    outputs = OutputSection(
        csv=_string(out_raw, "csv", "outputs", "series.csv"),
        report=_string(out_raw, "report", "outputs", "summary.json"),
        stride=_integer(out_raw, "stride", "outputs", 10, minimum=1),
    )

    det_raw = _mapping(top.get("detection", {}), "detection", ("v_tol", "window", "dx_cap"))
    detection = DetectionSection(
        v_tol=_number(det_raw, "v_tol", "detection", 1e-6, minimum=0.0, strict=True),
        window=_integer(det_raw, "window", "detection", 10, minimum=1),
        dx_cap=_number(det_raw, "dx_cap", "detection", 1e6, minimum=0.0, strict=True),
    )

    th_raw = _mapping(top.get("theory", {}), "theory", ("margin", "datum_grid"))
    theory = TheorySection(
        margin=_number(th_raw, "margin", "theory", 0.1, minimum=0.0, strict=True),
        datum_grid=_integer(th_raw, "datum_grid", "theory", 100, minimum=2),
    )

    fb_raw = _mapping(top.get("feedback", {}), "feedback", ("u0", "horizon", "resolution"))
    u0 = _number(fb_raw, "u0", "feedback", 1.0)
    if u0 == 0:
        raise ConfigError("feedback.u0", "must be non-zero")
    horizon = _number(fb_raw, "horizon", "feedback", 50.0, minimum=0.0, strict=True)
    if horizon > MAX_INTERVALS:
        raise ConfigError("feedback.horizon", f"at most {MAX_INTERVALS} delay intervals, got {horizon}")
    feedback = FeedbackSection(
        u0=u0,
        horizon=horizon,
        resolution=_integer(fb_raw, "resolution", "feedback", 64, minimum=1),
    )

    return RunConfig(
        model=model,
        ensemble=ensemble,
        integration=integration,
        outputs=outputs,
        detection=detection,
        theory=theory,
        sweep=_parse_sweep(top.get("sweep", {}), "sweep"),
        feedback=feedback,
        seed=_integer(top, "seed", "", 0),
    )


def load_run_config(path: Path) -> RunConfig:
    """
    Read and validate a JSON run configuration file.

    Raises:
        ConfigError: If the file is missing, is not valid JSON or fails validation.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError("", f"configuration file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}")
    return parse_run_config(raw)
