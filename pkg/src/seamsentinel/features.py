"""Feature vectors and the nine raw-signal statistical features."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from seamsentinel.signal import Window


class Scheme(enum.Enum):
    WPD_RMS = "WpdRms"
    STATISTICAL = "Statistical"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        if key in ("wpd", "wpdrms"):
            return cls.WPD_RMS
        if key in ("stat", "stats", "statistical"):
            return cls.STATISTICAL
        raise ValueError(f"unknown feature scheme {value!r}")


class DegenerateWindowError(ValueError):
    pass


STATISTICAL_NAMES = (
    "rms", "variance", "entropy", "shape_factor", "crest_factor",
    "kurtosis", "skewness", "minimum", "maximum",
)

#: kurtosis is reported as excess kurtosis (Gaussian -> 0)
KURTOSIS_CONVENTION = "excess"
DEFAULT_ENTROPY_BINS = 64


@dataclass(frozen=True, eq=False)
class FeatureVector:
    scheme: Scheme
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        if values.ndim != 1 or len(names) != len(values):
            raise ValueError("names and values must have the same length")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


def histogram_entropy(x: np.ndarray, bins: int = DEFAULT_ENTROPY_BINS) -> float:
    """Shannon entropy (nats) of an equal-width amplitude histogram over
    ``[min(x), max(x)]``.  Empty bins contribute nothing."""
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi == lo:
        return 0.0
    idx = np.floor((x - lo) * (bins / (hi - lo))).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    counts = np.bincount(idx, minlength=bins)
    p = counts[counts > 0] / len(x)
    # fsum keeps the result independent of bin order (sign symmetry)
    return -math.fsum((p * np.log(p)).tolist())


def statistical_array(x: np.ndarray, entropy_bins: int = DEFAULT_ENTROPY_BINS) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    mu = np.mean(x)
    d = x - mu
    variance = np.mean(d * d)
    if not variance > 0:
        raise DegenerateWindowError("degenerate window: zero variance")
    sigma = np.sqrt(variance)
    rms = np.sqrt(np.mean(x * x))
    mean_abs = np.mean(np.abs(x))
    d2 = d * d
    skewness = np.sum(d2 * d) / (n * sigma ** 3)
    kurtosis = np.sum(d2 * d2) / (n * variance * variance) - 3.0
    return np.array([
        rms,
        variance,
        histogram_entropy(x, entropy_bins),
        rms / mean_abs,
        np.max(np.abs(x)) / rms,
        kurtosis,
        skewness,
        np.min(x),
        np.max(x),
    ])


def statistical_features(w: Window, entropy_bins: int = DEFAULT_ENTROPY_BINS) -> FeatureVector:
    """Compute rms, variance, entropy, shape and crest factor, excess kurtosis,
    skewness, minimum and maximum over the window (population moments).

    Raises:
        DegenerateWindowError: if the window has zero variance.
    """
    return FeatureVector(Scheme.STATISTICAL, STATISTICAL_NAMES,
                         statistical_array(w.samples, entropy_bins))
