"""Scenario configuration: flat sectioned key=value files and dotted overrides.

A scenario is described by a small tree of dataclass sections whose dotted
paths (``section.key``) double as override paths on the command line.  Files
use INI syntax so they stay diff-friendly and round-trip exactly: floats are
written with ``repr`` and re-parse to identical values.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import typing
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .control import EsParams, SurgeParams
from .estimator import FilterParams
from .geometry import SourcePosition
from .plant import CurrentDisturbance, HighpassParams


class ConfigError(Exception):
    """Invalid scenario configuration; ``errors`` lists per-field messages."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ConfigWarning(UserWarning):
    """Suspicious but not fatal configuration choice."""


@dataclass
class SourceSection:
    x: float = 0.0
    y: float = 0.0
    depth: float = 5.0


@dataclass
class VehicleSection:
    x: float = 40.0
    y: float = 0.0
    heading: float = 1.0 - math.pi


@dataclass
class BaselineSection:
    d: float = 5.0
    sound_speed: float = 1500.0


@dataclass
class EsSection:
    a: float = 0.15
    omega: float = 2.0 * math.pi / 16.0
    k: float = -1.0
    h: float = 0.19


@dataclass
class SurgeSection:
    u0: float = 0.5
    m: float = 100.0
    eps: float = 4.0
    q: int = 3
    mu: float = 100.0


@dataclass
class FilterSection:
    omega1: float = 0.8
    omega2: float = 0.15
    k1: float = 1000.0
    v2_deadband: float = 1e-6
    range_scale: float = 1.0


@dataclass
class NoiseSection:
    sigma: float = 0.0
    seed: int = 0


@dataclass
class CurrentSection:
    vx: float = 0.0
    vy: float = 0.0
    reference: str = "position"


@dataclass
class PingsSection:
    mode: str = "continuous"
    period: float = 2.0


@dataclass
class SimSection:
    mode: str = "oracle"
    dt: float = 0.01
    t_max: float = 900.0
    output_every: int = 10
    r_stop: float = 0.5
    command_lag: float = 0.0


@dataclass
class ScenarioConfig:
    """Full description of one simulation run."""

    source: SourceSection = field(default_factory=SourceSection)
    vehicle: VehicleSection = field(default_factory=VehicleSection)
    baseline: BaselineSection = field(default_factory=BaselineSection)
    es: EsSection = field(default_factory=EsSection)
    surge: SurgeSection = field(default_factory=SurgeSection)
    filter: FilterSection = field(default_factory=FilterSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    current: CurrentSection = field(default_factory=CurrentSection)
    pings: PingsSection = field(default_factory=PingsSection)
    sim: SimSection = field(default_factory=SimSection)

    # Typed views used by the simulation and analysis code.
    def source_position(self) -> SourcePosition:
        return SourcePosition(self.source.x, self.source.y, self.source.depth)

    def es_params(self) -> EsParams:
        return EsParams(self.es.a, self.es.omega, self.es.k, self.es.h)

    def surge_params(self) -> SurgeParams:
        return SurgeParams(self.surge.u0, self.surge.m, self.surge.eps, self.surge.q, self.surge.mu)

    def filter_params(self) -> FilterParams:
        return FilterParams(self.filter.omega1, self.filter.omega2, self.filter.k1)

    def highpass_params(self) -> HighpassParams:
        return HighpassParams(self.es.h)

    def current_disturbance(self) -> CurrentDisturbance:
        return CurrentDisturbance(self.current.vx, self.current.vy, self.current.reference)

    def validate(self) -> None:
        """Raise ConfigError listing every violated constraint, with field paths."""
        errors: list[str] = []

        for label, build in (
            ("source", self.source_position),
            ("es", self.es_params),
            ("surge", self.surge_params),
            ("filter", self.filter_params),
            ("current", self.current_disturbance),
        ):
            try:
                build()
            except ValueError as exc:
                errors.append(f"{label}: {exc}")

        if not self.baseline.d > 0.0:
            errors.append("baseline.d: must be > 0")
        if not self.baseline.sound_speed > 0.0:
            errors.append("baseline.sound_speed: must be > 0")
        if self.filter.v2_deadband < 0.0:
            errors.append("filter.v2_deadband: must be >= 0")
        if not self.filter.range_scale > 0.0:
            errors.append("filter.range_scale: must be > 0")
        if self.noise.sigma < 0.0:
            errors.append("noise.sigma: must be >= 0")
        if self.noise.seed < 0:
            errors.append("noise.seed: must be >= 0")
        if self.pings.mode not in ("continuous", "periodic"):
            errors.append("pings.mode: must be 'continuous' or 'periodic'")
        if self.pings.mode == "periodic" and not self.pings.period > 0.0:
            errors.append("pings.period: must be > 0 in periodic mode")
        if self.sim.mode not in ("oracle", "estimated"):
            errors.append("sim.mode: must be 'oracle' or 'estimated'")
        if not self.sim.dt > 0.0:
            errors.append("sim.dt: must be > 0")
        if self.sim.t_max < 0.0:
            errors.append("sim.t_max: must be >= 0")
        if self.sim.output_every < 1:
            errors.append("sim.output_every: must be >= 1")
        if self.sim.r_stop < 0.0:
            errors.append("sim.r_stop: must be >= 0")
        if self.sim.command_lag < 0.0:
            errors.append("sim.command_lag: must be >= 0")

        if errors:
            raise ConfigError(errors)

        if self.es.omega > 0.0 and self.sim.dt > (2.0 * math.pi / self.es.omega) / 50.0:
            warnings.warn(
                "sim.dt resolves fewer than 50 steps per perturbation period; "
                "integration accuracy may suffer",
                ConfigWarning,
                stacklevel=2,
            )


_SECTION_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _field_types(section_cls) -> dict[str, type]:
    return typing.get_type_hints(section_cls)


def _convert(raw: str, target: type, path: str):
    raw = raw.strip()
    try:
        if target is float:
            return float(raw)
        if target is int:
            value = float(raw)
            if value != int(value):
                raise ValueError("not an integer")
            return int(value)
        return raw
    except ValueError as exc:
        raise ConfigError([f"{path}: cannot parse {raw!r} as {target.__name__} ({exc})"]) from exc


def parse_text(text: str) -> ScenarioConfig:
    """Parse INI-style scenario text; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from exc

    cfg = ScenarioConfig()
    errors: list[str] = []
    for section in parser.sections():
        if section not in _SECTION_TYPES:
            errors.append(f"{section}: unknown section")
            continue
        dest = getattr(cfg, section)
        types = _field_types(type(dest))
        for key, raw in parser.items(section):
            if key not in types:
                errors.append(f"{section}.{key}: unknown key")
                continue
            try:
                setattr(dest, key, _convert(raw, types[key], f"{section}.{key}"))
            except ConfigError as exc:
                errors.extend(exc.errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def load(path: str | Path) -> ScenarioConfig:
    return parse_text(Path(path).read_text())


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_text(cfg: ScenarioConfig) -> str:
    """Serialize a configuration; the output re-parses to an equal structure."""
    blocks = []
    for section_field in dataclasses.fields(ScenarioConfig):
        dest = getattr(cfg, section_field.name)
        lines = [f"[{section_field.name}]"]
        for f in dataclasses.fields(dest):
            lines.append(f"{f.name} = {_format_value(getattr(dest, f.name))}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def save(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(to_text(cfg))


def apply_override(cfg: ScenarioConfig, path: str, raw: str) -> None:
    """Set one dotted-path field from its text form; unknown paths are errors."""
    if "." not in path:
        raise ConfigError([f"{path}: override path must look like section.key"])
    section, key = path.split(".", 1)
    if section not in _SECTION_TYPES:
        raise ConfigError([f"{path}: unknown section {section!r}"])
    dest = getattr(cfg, section)
    types = _field_types(type(dest))
    if key not in types:
        raise ConfigError([f"{path}: unknown key {key!r} in section {section!r}"])
    setattr(dest, key, _convert(raw, types[key], path))


def apply_overrides(cfg: ScenarioConfig, pairs: list[str]) -> None:
    """Apply ``key=value`` overrides left to right; the last write wins."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError([f"override {pair!r} must look like section.key=value"])
        path, raw = pair.split("=", 1)
        apply_override(cfg, path.strip(), raw)
