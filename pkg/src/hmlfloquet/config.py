"""JSON run configuration with field-level diagnostics and CLI overrides."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import Boundary, DrivingProtocol, MQEKind, ModelParams
from .errors import ConfigError

RUN_LOCATION_FIELDS = {"output_dir", "workers"}

SWEEP_DEFAULTS = {
    "amplitude": (0.0, 40.0, 0.5),
    "frequency": (2.0, 20.0, 0.25),
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ModelSection(_Strict):
    omega0: float = 1.0
    omega_c: float = 0.5
    hopping: float = Field(1.5, gt=0)
    coupling: float = Field(1.0, ge=0)
    n_sites: int = Field(200, ge=2)
    boundary: Boundary = Boundary.OPEN

    @field_validator("omega0", "omega_c", "hopping", "coupling")
    @classmethod
    def _finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v


class DriveSection(_Strict):
    amplitude: float = 0.0
    frequency: float = Field(12.0, gt=0)
    on_fraction: float = Field(0.5, ge=0, le=1)

    @field_validator("amplitude", "frequency")
    @classmethod
    def _finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v


class GridSection(_Strict):
    steps_per_period: int = Field(512, ge=2)
    dt: Optional[float] = Field(None, gt=0)


class SweepSection(_Strict):
    parameter: Literal["amplitude", "frequency"] = "amplitude"
    start: float = 0.0
    stop: float = 40.0
    step: float = Field(0.5, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _fill(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            start, stop, step = SWEEP_DEFAULTS.get(data.get("parameter", "amplitude"),
                                                   SWEEP_DEFAULTS["amplitude"])
            for name, default in (("start", start), ("stop", stop), ("step", step)):
                if data.get(name) is None:
                    data[name] = default
        return data

    @model_validator(mode="after")
    def _check(self):
        for name in ("start", "stop", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.stop < self.start:
            raise ValueError("stop must not be below start")
        return self

    def values(self) -> list:
        """Sweep points ``start + k*step`` up to ``stop`` inclusive, rounded to kill drift."""
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [round(self.start + k * self.step, 12) for k in range(n + 1)]


class FBSSection(_Strict):
    z_min: float = Field(1e-2, gt=0, le=1)
    gap_factor: float = Field(10.0, gt=0)
    convergence_tol: float = Field(1e-3, gt=0)


class RunConfig(_Strict):
    model: ModelSection = Field(default_factory=ModelSection)
    drive: DriveSection = Field(default_factory=DriveSection)
    grid: GridSection = Field(default_factory=GridSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    fbs: FBSSection = Field(default_factory=FBSSection)
    mqe_kind: MQEKind = MQEKind.QUBIT
    squeezing: float = Field(1.0, ge=0)
    checkpoint_periods: int = Field(35, ge=1)
    backend: Literal["volterra", "lattice", "both"] = "both"
    output_dir: str = "out"
    workers: int = Field(1, ge=1)

    def model_params(self, **drive_overrides) -> ModelParams:
        d = self.drive.model_dump()
        d.update(drive_overrides)
        drive = DrivingProtocol.from_frequency(d["amplitude"], d["frequency"], d["on_fraction"])
        m = self.model
        return ModelParams(omega0=m.omega0, omega_c=m.omega_c, hopping=m.hopping,
                           coupling=m.coupling, n_sites=m.n_sites, drive=drive,
                           mqe_kind=self.mqe_kind, boundary=m.boundary)

    def physics_dump(self) -> dict:
        """Every field that can change a result; where and how fast a run executes is left out."""
        return self.model_dump(mode="json", exclude=RUN_LOCATION_FIELDS)

    def canonical_json(self) -> str:
        """Single-line, key-sorted JSON used as the header echo of every output."""
        return json.dumps(self.physics_dump(), sort_keys=True, separators=(",", ":"))


def amplitude_sweep_config(**kw) -> RunConfig:
    """Amplitude sweep preset: checkpoint 35T, qubit, lattice backend."""
    base = {"sweep": {"parameter": "amplitude"}, "checkpoint_periods": 35,
            "backend": "lattice", "mqe_kind": "qubit"}
    return RunConfig.model_validate(_deep_merge(base, kw))


def frequency_sweep_config(**kw) -> RunConfig:
    """Frequency sweep preset: F = 16, r = 1, boson, checkpoint 45T."""
    base = {"sweep": {"parameter": "frequency"}, "drive": {"amplitude": 16.0},
            "squeezing": 1.0, "checkpoint_periods": 45, "backend": "lattice",
            "mqe_kind": "boson"}
    return RunConfig.model_validate(_deep_merge(base, kw))


def _deep_merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def format_validation_error(err: ValidationError, source: str = "config") -> str:
    lines = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{source}: field '{loc}': {item['msg']}")
    return "\n".join(lines)


def parse_config_text(text: str, source: str = "config") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return data


def _set_path(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        nxt = node.setdefault(key, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override '{dotted}': '{key}' is not a section")
        node = nxt
    node[keys[-1]] = value


def parse_override(item: str) -> tuple:
    """``key.path=value``; the value is read as JSON when possible, else kept as a string."""
    if "=" not in item:
        raise ConfigError(f"override '{item}' must look like key.path=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override '{item}' has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def load_config(path=None, overrides=(), base: dict | None = None) -> RunConfig:
    """Read JSON from ``path`` (optional), apply ``(dotted_key, value)`` overrides, validate."""
    data = dict(base or {})
    source = "config"
    if path is not None:
        path = Path(path)
        source = str(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{source}: cannot read: {exc.strerror}") from exc
        data = _deep_merge(data, parse_config_text(text, source))
    for key, value in overrides:
        _set_path(data, key, value)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc, source)) from exc


def ensure_output_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir '{out}': {exc.strerror}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output_dir '{out}' is not writable")
    return out
