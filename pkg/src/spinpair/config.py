"""Run configuration: defaults, INI files, manifest re-runs and flag overrides.

A config file is INI with a single ``[spinpair]`` section of key = value
lines. Lists are comma separated. A ``manifest.json`` written by an earlier
run can be used in its place; its ``config`` entry is read back.
"""

import configparser
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional

from .exceptions import InputError
from .units import RB85_SCATTERING_LENGTHS, RB85_SCATTERING_UNCERTAINTIES

SECTION = "spinpair"


def _floats(value, count=None):
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
    else:
        parts = list(value)
    try:
        out = tuple(float(p) for p in parts)
    except (TypeError, ValueError):
        raise InputError(f"expected a list of numbers, got {value!r}") from None
    if count is not None and len(out) != count:
        raise InputError(f"expected {count} numbers, got {len(out)}")
    return out


def _optional_float(value):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    trap_khz: tuple = (8.9, 55.5, 56.055)
    temperature_uk: float = 2.0
    basis_temperature_uk: float = 2.0
    b_field: float = 8.5
    field_scan: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0, 25.0, 30.0)
    scattering_lengths: tuple = RB85_SCATTERING_LENGTHS
    scattering_uncertainties: tuple = RB85_SCATTERING_UNCERTAINTIES
    backend: str = "gaussian"
    capture: float = 0.999
    e_cut: Optional[float] = None
    time_stop_ms: float = 40.0
    time_points: int = 401
    evolution_time_ms: float = 40.0
    density_time_ms: float = 40.0
    ratio: float = 2.34
    gamma02_ratio: float = 0.0
    ratio_samples: int = 100_000
    eta_f2: float = 0.944
    eta_f3: float = 0.997
    ejected_fraction: float = 1.0 / 3.0
    variance: float = 0.032
    detection_reference: float = 0.034
    detection_tolerance: float = 0.004
    n_atoms: int = 2
    mc_trials: int = 1_000_000
    seed: int = 0
    memory_budget_mb: float = 2048.0

    def __post_init__(self):
        conv = {
            "trap_khz": lambda v: _floats(v, 3),
            "field_scan": _floats,
            "scattering_lengths": lambda v: _floats(v, 3),
            "scattering_uncertainties": lambda v: _floats(v, 3),
            "backend": lambda v: str(v).strip().lower(),
            "e_cut": _optional_float,
            "time_points": int,
            "ratio_samples": int,
            "n_atoms": int,
            "mc_trials": int,
            "seed": int,
        }
        for f in fields(self):
            value = getattr(self, f.name)
            try:
                value = conv.get(f.name, float)(value)
            except (TypeError, ValueError):
                raise InputError(f"config key {f.name!r}: cannot interpret {value!r}") from None
            object.__setattr__(self, f.name, value)
        self._validate()

    def _validate(self):
        if self.backend not in ("gaussian", "delta"):
            raise InputError(f"backend must be 'gaussian' or 'delta', got {self.backend!r}")
        if any(f <= 0 for f in self.trap_khz):
            raise InputError("trap frequencies must be positive")
        if self.temperature_uk < 0:
            raise InputError("temperature must be >= 0")
        if self.basis_temperature_uk <= 0:
            raise InputError("basis_temperature_uk must be > 0")
        if self.b_field < 0:
            raise InputError("b_field must be >= 0")
        if not self.field_scan:
            raise InputError("field_scan must list at least one field")
        if any(b < 0 for b in self.field_scan):
            raise InputError("field_scan values must be >= 0")
        if not 0 < self.capture < 1:
            raise InputError("capture must lie in (0, 1)")
        if self.time_points < 2 or self.time_stop_ms <= 0:
            raise InputError("time grid needs time_stop_ms > 0 and at least two points")
        for name in ("evolution_time_ms", "density_time_ms"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be >= 0")
        if self.ratio <= 0 or self.gamma02_ratio < 0:
            raise InputError("ratio must be > 0 and gamma02_ratio >= 0")
        if self.detection_reference < 0 or self.detection_tolerance < 0:
            raise InputError("detection_reference and detection_tolerance must be >= 0")
        for name in ("eta_f2", "eta_f3", "ejected_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise InputError(f"{name} must lie in [0, 1]")
        if self.n_atoms < 1 or self.mc_trials < 1 or self.ratio_samples < 1:
            raise InputError("n_atoms, mc_trials and ratio_samples must be >= 1")
        if self.memory_budget_mb <= 0:
            raise InputError("memory_budget_mb must be > 0")

    @property
    def zero_temperature(self):
        return self.temperature_uk == 0.0

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    def replace(self, **overrides):
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_mapping(data)

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise InputError(f"unknown config key {unknown[0]!r}")
        return cls(**dict(mapping))


def load_config(path) -> RunConfig:
    """Read an INI config or the ``config`` entry of a run manifest."""
    if str(path).endswith(".json"):
        try:
            with open(path, encoding="utf-8") as handle:
                payload = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("config"), dict):
            raise InputError(f"{path} has no 'config' object")
        return RunConfig.from_mapping(payload["config"])
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise InputError(f"cannot open config file {path}")
    if not parser.has_section(SECTION):
        raise InputError(f"{path} has no [{SECTION}] section")
    return RunConfig.from_mapping(dict(parser.items(SECTION)))
