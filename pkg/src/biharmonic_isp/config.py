"""Experiment configuration documents (JSON with a schema version)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .forward import FrequencyGrid, SensorArray
from .indicators import QuadratureSpec, SamplingGrid
from .sources import source_from_dict

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
INDICATORS = ("boundary", "source1", "source2")


class ConfigError(ValueError):
    """Invalid configuration, with the offending field (and line when known)."""


@dataclass(frozen=True)
class ExperimentConfig:
    source: dict | None = None
    L: int = 30
    R_meas: float = 3.0
    k_minus: float = 0.5
    k_plus: float = 30.0
    dk: float = 0.5
    delta: float = 0.2
    seed: int = 0
    with_laplacian: bool = False
    indicator: str = "source2"
    quadrature: dict = field(default_factory=dict)
    domain: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    resolution: tuple[int, int] = (401, 401)
    out: str = "out"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        positive = ("R_meas", "k_minus", "k_plus", "dk")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"field {name!r} must be positive, got {getattr(self, name)!r}")
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError(f"field 'L' must be a positive integer, got {self.L!r}")
        if self.delta < 0:
            raise ConfigError(f"field 'delta' must be non-negative, got {self.delta!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"field 'seed' must be a non-negative integer, got {self.seed!r}")
        if self.indicator not in INDICATORS:
            raise ConfigError(f"field 'indicator' must be one of {INDICATORS}, got {self.indicator!r}")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version!r}")
        for name, build in (("frequency grid", self.freqs), ("grid", self.grid),
                            ("quadrature", self.quad), ("sensors", self.sensors)):
            try:
                build()
            except (ValueError, TypeError, KeyError) as exc:
                raise ConfigError(f"invalid {name}: {exc}") from None
        if self.source is not None:
            try:
                self.model()
            except (ValueError, TypeError, KeyError) as exc:
                raise ConfigError(f"field 'source' is invalid: {exc}") from None

    def sensors(self) -> SensorArray:
        return SensorArray(int(self.L), float(self.R_meas))

    def freqs(self) -> FrequencyGrid:
        return FrequencyGrid(float(self.k_minus), float(self.k_plus), float(self.dk))

    def grid(self, fast: bool = False) -> SamplingGrid:
        shape = (101, 101) if fast else tuple(int(n) for n in self.resolution)
        return SamplingGrid(tuple(float(v) for v in self.domain), shape)

    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(**self.quadrature)

    def model(self):
        if self.source is None:
            raise ConfigError("field 'source' is not set")
        return source_from_dict(self.source)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain"] = list(self.domain)
        d["resolution"] = list(self.resolution)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = sorted(set(d) - known)
        if extra:
            raise ConfigError(f"unknown field(s) {extra}")
        d = dict(d)
        for key in ("domain", "resolution"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    try:
        return ExperimentConfig.from_dict(d)
    except ConfigError as exc:
        line = _field_line(text, str(exc))
        raise ConfigError(f"{path}{line}: {exc}") from None


def _field_line(text: str, message: str) -> str:
    """', line n' for the first quoted field name of ``message`` found in ``text``."""
    for token in message.split("'")[1::2]:
        for n, line in enumerate(text.splitlines(), 1):
            if f'"{token}"' in line:
                return f", line {n}"
    return ""
