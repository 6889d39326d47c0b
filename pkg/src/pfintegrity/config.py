"""INI scenario files.

Keys are addressed as ``section.key``::

    [gnss]
    num_faults = 4
    bias = 200

Every key is optional; unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

from .errors import ConfigError
from .scenario import ScenarioConfig

#: dotted key -> ScenarioConfig field
KEYS = {
    "scenario.num_epochs": "num_epochs",
    "scenario.epoch_dt": "epoch_dt",
    "scenario.speed": "speed",
    "scenario.segment_epochs": "segment_epochs",
    "scenario.max_turn_deg": "max_turn_deg",
    "scenario.max_climb_rate": "max_climb_rate",
    "scenario.init_sigma": "init_sigma",
    "scenario.seed": "seed",
    "gnss.num_satellites": "num_satellites",
    "gnss.num_faults": "num_gnss_faults",
    "gnss.bias": "gnss_bias",
    "gnss.one_sided_bias": "one_sided_bias",
    "gnss.meas_noise_var": "meas_noise_var",
    "gnss.min_elevation_deg": "min_elevation_deg",
    "gnss.max_elevation_deg": "max_elevation_deg",
    "camera.per_epoch": "cameras_per_epoch",
    "camera.fault_prob": "camera_fault_prob",
    "camera.fault_offset": "camera_fault_offset",
    "camera.sigma": "camera_sigma",
    "camera.tau": "tau",
    "odometry.velocity_noise": "odometry_noise",
    "odometry.accel_noise": "odometry_accel_noise",
    "filter.num_particles": "num_particles",
    "filter.prop_var": "prop_var",
    "filter.fusion": "fusion",
    "filter.estimate": "estimate",
    "integrity.alert_limits": "alert_limits",
    "integrity.perturbations": "M",
    "integrity.delta": "delta",
    "integrity.risk_threshold": "risk_threshold",
}

_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _convert(field_name: str, raw: str):
    kind = _TYPES[field_name]
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "tuple":
        return tuple(float(v) for v in raw.split(",") if v.strip())
    return raw.strip()


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            dotted = f"{section}.{key}"
            if dotted not in KEYS:
                raise ConfigError(f"{source}: unknown key {dotted!r}")
            try:
                values[KEYS[dotted]] = _convert(KEYS[dotted], raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {dotted!r}: {exc}") from exc
    return ScenarioConfig(**values).validate()


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def dump_config(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` back to INI text that ``parse_config`` reads to an equal config."""
    sections: dict[str, list[str]] = {}
    for dotted, name in KEYS.items():
        section, key = dotted.split(".")
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = ", ".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        sections.setdefault(section, []).append(f"{key} = {value}")
    return "\n".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())
