"""Pipeline configuration: per-scenario defaults, key=value files and the
config hash embedded in every artifact."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

from seamsentinel.features import Scheme
from seamsentinel.signal import Axis, Scenario
from seamsentinel.sim import read_key_values


class ConfigError(ValueError):
    pass


CLASSIFIERS = ("svm", "forest")


@dataclass(frozen=True)
class PipelineConfig:
    scenario: Scenario
    axis: Axis
    scheme: Scheme
    window_seconds: float = 1.0
    validation_ratio: float = 0.25
    classifiers: tuple[str, ...] = CLASSIFIERS
    seed: int = 0
    # Wear is labeled by position in the trial
    early_span_s: float = 300.0
    late_span_s: float = 300.0
    wpd_level: int = 3
    wpd_filter: str = "db4"
    entropy_bins: int = 64
    n_trees: int = 100
    svm_c: float = 1.0
    svm_gamma: str = "scale"
    durations: tuple[float, ...] = ()
    sim: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not 0 < self.validation_ratio < 1:
            raise ConfigError("validation_ratio must lie in (0, 1)")
        if not self.window_seconds > 0:
            raise ConfigError("window_seconds must be positive")
        bad = [c for c in self.classifiers if c not in CLASSIFIERS]
        if bad or not self.classifiers:
            raise ConfigError(f"classifiers must be a non-empty subset of {CLASSIFIERS}")
        if self.svm_gamma != "scale":
            try:
                if not float(self.svm_gamma) > 0:
                    raise ValueError
            except ValueError:
                raise ConfigError("svm_gamma must be 'scale' or a positive number") from None

    @classmethod
    def for_scenario(cls, scenario: Scenario | str, **kwargs) -> "PipelineConfig":
        """Defaults: Y axis and statistical features except where the
        scenario calls for otherwise (Z for Belt, WPD RMS for Wear)."""
        scenario = Scenario.parse(scenario)
        axis = Axis.Z if scenario is Scenario.BELT else Axis.Y
        scheme = Scheme.WPD_RMS if scenario is Scenario.WEAR else Scheme.STATISTICAL
        return cls(scenario, axis, scheme).updated(kwargs)

    def updated(self, values: Mapping) -> "PipelineConfig":
        """Return a copy with textual or typed overrides applied."""
        changes = {}
        sim = dict(self.sim)
        types = {f.name: f for f in fields(self)}
        for key, value in values.items():
            if value is None:
                continue
            if key.startswith("sim."):
                sim[key[4:]] = str(value)
                continue
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                changes[key] = _coerce(key, value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        if "scenario" in changes and changes["scenario"] is not self.scenario:
            base = PipelineConfig.for_scenario(changes["scenario"])
            keep = {f.name: getattr(self, f.name) for f in fields(self)
                    if f.name not in ("scenario", "axis", "scheme")}
            merged = replace(base, **keep)
            return replace(merged, **changes, sim=tuple(sorted(sim.items())))
        return replace(self, **changes, sim=tuple(sorted(sim.items())))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "sim":
                continue
            lines.append(f"{f.name}={_render(getattr(self, f.name))}")
        for key, value in self.sim:
            lines.append(f"sim.{key}={value}")
        return "\n".join(lines) + "\n"

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]


def _render(value) -> str:
    if isinstance(value, (Scenario, Axis, Scheme)):
        return value.value
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key: str, value):
    if key == "scenario":
        return Scenario.parse(value)
    if key == "axis":
        return Axis.parse(value)
    if key == "scheme":
        return Scheme.parse(value)
    if key == "classifiers":
        if isinstance(value, str):
            value = [v.strip().lower() for v in value.split(",") if v.strip()]
        return tuple(value)
    if key == "durations":
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        return tuple(float(v) for v in value)
    if key in ("seed", "wpd_level", "entropy_bins", "n_trees"):
        return int(value)
    if key in ("wpd_filter", "svm_gamma"):
        return str(value)
    return float(value)


def load_config(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    values = read_key_values(path)
    if base is None:
        if "scenario" not in values:
            raise ConfigError(f"{path}: missing 'scenario'")
        base = PipelineConfig.for_scenario(values["scenario"])
    return base.updated(values)
