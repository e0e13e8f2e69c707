"""Triaxial acceleration recordings: representation, CSV I/O, windowing and
time-span labeling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class RecordingFormatError(ValueError):
    """Raised when a recording file does not follow the CSV format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LabelingError(ValueError):
    pass


class Axis(enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"

    @classmethod
    def parse(cls, value: "str | Axis") -> "Axis":
        if isinstance(value, Axis):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown axis {value!r}; expected X, Y or Z") from None

    @property
    def index(self) -> int:
        return "XYZ".index(self.value)


class Scenario(enum.Enum):
    WEAR = "Wear"
    BLADE_DEFECT = "BladeDefect"
    STABILITY = "Stability"
    BELT = "Belt"

    @property
    def n_classes(self) -> int:
        return _N_CLASSES[self]

    @property
    def class_names(self) -> tuple[str, ...]:
        return _CLASS_NAMES[self]

    @classmethod
    def parse(cls, value: "str | Scenario") -> "Scenario":
        if isinstance(value, Scenario):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        if key == "defect":
            return cls.BLADE_DEFECT
        raise ValueError(f"unknown scenario {value!r}")

    @property
    def cli_name(self) -> str:
        return {"Wear": "wear", "BladeDefect": "blade_defect",
                "Stability": "stability", "Belt": "belt"}[self.value]


_N_CLASSES = {Scenario.WEAR: 2, Scenario.BLADE_DEFECT: 3, Scenario.STABILITY: 2, Scenario.BELT: 3}
_CLASS_NAMES = {
    Scenario.WEAR: ("fresh", "worn"),
    Scenario.BLADE_DEFECT: ("normal", "two-worn", "six-worn"),
    Scenario.STABILITY: ("stable", "unstable"),
    Scenario.BELT: ("fixed", "partly-loose", "extremely-loose"),
}


@dataclass(frozen=True)
class ConditionLabel:
    scenario: Scenario
    class_id: int

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        if not 0 <= int(self.class_id) < self.scenario.n_classes:
            raise ValueError(
                f"class_id {self.class_id} invalid for scenario {self.scenario.value} "
                f"({self.scenario.n_classes} classes)"
            )
        object.__setattr__(self, "class_id", int(self.class_id))

    @property
    def name(self) -> str:
        return self.scenario.class_names[self.class_id]


@dataclass(frozen=True)
class MachineSettings:
    rpm: float = 41.0
    feed_mm_per_min: float = 0.0
    cut_depth_mm: float = 0.0
    blade_count: int = 32
    idle: bool = False

    def __post_init__(self):
        if self.rpm < 0:
            raise ValueError("rpm must be >= 0")
        if self.blade_count < 1:
            raise ValueError("blade_count must be >= 1")


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AccelerationRecording:
    """Three equal-length acceleration axes sampled at ``sample_rate_hz``.

    ``extra`` carries additional header directives (seed, config hash)
    through a save/load round trip.
    """

    sample_rate_hz: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    meta: MachineSettings = field(default_factory=MachineSettings)
    condition: ConditionLabel | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be a positive integer")
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))
        axes = [_frozen_array(a) for a in (self.x, self.y, self.z)]
        if any(a.ndim != 1 for a in axes):
            raise ValueError("axes must be one-dimensional")
        if not (len(axes[0]) == len(axes[1]) == len(axes[2])):
            raise ValueError("axes must have identical lengths")
        if len(axes[0]) < 1:
            raise ValueError("empty recording")
        for name, arr in zip("xyz", axes):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "extra", dict(self.extra))

    def __len__(self) -> int:
        return len(self.x)

    @property
    def duration_s(self) -> float:
        return len(self.x) / self.sample_rate_hz

    def axis(self, axis: Axis | str) -> np.ndarray:
        return (self.x, self.y, self.z)[Axis.parse(axis).index]


@dataclass(frozen=True, eq=False)
class Window:
    samples: np.ndarray
    axis: Axis
    source_offset_s: float
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_array(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class LabeledWindow:
    window: Window
    label: ConditionLabel


# ---------------------------------------------------------------------------
# CSV format

_FLOAT_KEYS = ("rpm", "feed_mm_per_min", "cut_depth_mm")


def save_recording(rec: AccelerationRecording, path: str | Path) -> None:
    """Write ``rec`` in the recording CSV format.

    Values are written with ``repr`` so that loading reproduces every sample
    bit for bit.
    """
    lines = [f"# sample_rate_hz={rec.sample_rate_hz}"]
    m = rec.meta
    lines += [
        f"# rpm={m.rpm!r}",
        f"# feed_mm_per_min={m.feed_mm_per_min!r}",
        f"# cut_depth_mm={m.cut_depth_mm!r}",
        f"# blade_count={m.blade_count}",
        f"# idle={int(m.idle)}",
    ]
    if rec.condition is not None:
        lines.append(f"# scenario={rec.condition.scenario.value}")
        lines.append(f"# class_id={rec.condition.class_id}")
    for key in sorted(rec.extra):
        lines.append(f"# {key}={rec.extra[key]}")
    lines.append("x,y,z")
    body = "\n".join(
        f"{a!r},{b!r},{c!r}" for a, b, c in zip(rec.x.tolist(), rec.y.tolist(), rec.z.tolist())
    )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
        fh.write(body)
        fh.write("\n")


def _parse_directive(text: str, lineno: int) -> tuple[str, str] | None:
    body = text[1:].strip()
    if "=" not in body:
        return None  # plain comment
    key, _, value = body.partition("=")
    key, value = key.strip(), value.strip()
    if not key or not value:
        raise RecordingFormatError(f"malformed directive {text!r}", lineno)
    return key, value


def load_recording(path: str | Path) -> AccelerationRecording:
    """Read a recording CSV written by :func:`save_recording` (or by hand)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()

    directives: dict[str, tuple[str, int]] = {}
    header_line = None
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parsed = _parse_directive(line, i + 1)
            if parsed:
                directives[parsed[0]] = (parsed[1], i + 1)
            continue
        if [c.strip().lower() for c in line.split(",")] != ["x", "y", "z"]:
            raise RecordingFormatError(f"expected header row 'x,y,z', got {line!r}", i + 1)
        header_line = i
        break
    if header_line is None:
        raise RecordingFormatError("missing header row 'x,y,z'", len(lines))
    if "sample_rate_hz" not in directives:
        raise RecordingFormatError("missing '# sample_rate_hz=<int>' directive", 1)

    def get(key, conv, default):
        if key not in directives:
            return default
        value, lineno = directives[key]
        try:
            return conv(value)
        except ValueError:
            raise RecordingFormatError(f"bad value for {key}: {value!r}", lineno) from None

    def as_int(v: str) -> int:
        return int(v)

    fs = get("sample_rate_hz", as_int, None)
    if fs <= 0:
        raise RecordingFormatError("sample_rate_hz must be positive", directives["sample_rate_hz"][1])
    idle_raw = get("idle", as_int, 0)
    if idle_raw not in (0, 1):
        raise RecordingFormatError("idle must be 0 or 1", directives["idle"][1])
    meta = MachineSettings(
        rpm=get("rpm", float, 0.0),
        feed_mm_per_min=get("feed_mm_per_min", float, 0.0),
        cut_depth_mm=get("cut_depth_mm", float, 0.0),
        blade_count=get("blade_count", as_int, 32),
        idle=bool(idle_raw),
    )
    condition = None
    if "scenario" in directives:
        scenario = get("scenario", Scenario.parse, None)
        if "class_id" in directives:
            try:
                condition = ConditionLabel(scenario, get("class_id", as_int, 0))
            except ValueError as exc:
                raise RecordingFormatError(str(exc), directives["class_id"][1]) from None
    known = {"sample_rate_hz", "idle", "blade_count", "scenario", "class_id", *_FLOAT_KEYS}
    extra = {k: v for k, (v, _) in directives.items() if k not in known}
    if "scenario" in directives and condition is None:
        extra["scenario"] = directives["scenario"][0]

    data = _parse_rows(lines, header_line + 1)
    if data.shape[0] == 0:
        raise RecordingFormatError("empty recording", header_line + 1)
    return AccelerationRecording(fs, data[:, 0], data[:, 1], data[:, 2], meta, condition, extra)


def _parse_rows(lines: Sequence[str], start: int) -> np.ndarray:
    body = [ln for ln in lines[start:]]
    while body and not body[-1].strip():
        body.pop()
    if not body:
        return np.empty((0, 3))
    try:
        data = np.loadtxt(body, delimiter=",", dtype=np.float64, ndmin=2)
        if data.shape[1] == 3 and np.all(np.isfinite(data)):
            return data
    except ValueError:
        pass
    # slow path: locate the offending line
    out = np.empty((len(body), 3))
    for i, ln in enumerate(body):
        lineno = start + i + 1
        cells = ln.split(",")
        if len(cells) != 3:
            raise RecordingFormatError(f"expected 3 columns, found {len(cells)}", lineno)
        try:
            out[i] = [float(c) for c in cells]
        except ValueError:
            raise RecordingFormatError(f"non-numeric cell in {ln!r}", lineno) from None
        if not np.all(np.isfinite(out[i])):
            raise RecordingFormatError(f"non-finite value in {ln!r}", lineno)
    return out


# ---------------------------------------------------------------------------
# windowing

def window_length(sample_rate_hz: int, window_seconds: float) -> int:
    n = sample_rate_hz * window_seconds
    n_int = int(round(n))
    if n_int < 1 or not math.isclose(n, n_int, rel_tol=0, abs_tol=1e-9):
        raise ValueError(
            f"window_seconds={window_seconds} does not give an integer number of samples "
            f"at {sample_rate_hz} Hz"
        )
    return n_int


def segment_windows(rec: AccelerationRecording, axis: Axis | str,
                    window_seconds: float = 1.0) -> list[Window]:
    """Cut one axis into consecutive, non-overlapping windows.

    Trailing samples that do not fill a whole window are dropped.
    """
    axis = Axis.parse(axis)
    n = window_length(rec.sample_rate_hz, window_seconds)
    data = rec.axis(axis)
    count = len(data) // n
    return [
        Window(data[i * n:(i + 1) * n], axis, i * n / rec.sample_rate_hz, rec.sample_rate_hz)
        for i in range(count)
    ]


def label_windows_by_time(windows: Sequence[Window], early_span_s: float, late_span_s: float,
                          early_label: ConditionLabel, late_label: ConditionLabel,
                          total_duration_s: float | None = None) -> list[LabeledWindow]:
    """Label windows lying wholly in the first ``early_span_s`` or the last
    ``late_span_s`` seconds; everything in between is dropped.

    ``total_duration_s`` defaults to the end of the last window.
    """
    if early_span_s < 0 or late_span_s < 0:
        raise LabelingError("spans must be non-negative")
    if total_duration_s is None:
        total_duration_s = max((w.source_offset_s + w.duration_s for w in windows), default=0.0)
    if early_span_s + late_span_s > total_duration_s + 1e-9:
        raise LabelingError(
            f"ambiguous labeling: spans {early_span_s}s + {late_span_s}s overlap "
            f"in a {total_duration_s}s recording"
        )
    late_start = total_duration_s - late_span_s
    eps = 1e-9
    out = []
    for w in windows:
        start, end = w.source_offset_s, w.source_offset_s + w.duration_s
        if early_span_s > 0 and end <= early_span_s + eps:
            out.append(LabeledWindow(w, early_label))
        elif late_span_s > 0 and start >= late_start - eps:
            out.append(LabeledWindow(w, late_label))
    return out


def label_windows(windows: Iterable[Window], label: ConditionLabel) -> list[LabeledWindow]:
    return [LabeledWindow(w, label) for w in windows]
