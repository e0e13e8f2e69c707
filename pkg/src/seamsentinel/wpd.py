"""Wavelet packet decomposition with periodic extension and RMS sub-band
features.

Both branches of a two-channel orthogonal filter bank are split at every
level.  Leaves are returned in frequency order, so leaf ``k`` of a level-``L``
tree covers ``[k, k+1) * fs / 2**(L+1)`` Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from seamsentinel.features import FeatureVector, Scheme
from seamsentinel.signal import Window

# Daubechies scaling (low-pass) filters, N vanishing moments, 2N taps.
_SQRT2 = np.sqrt(2.0)
FILTERS: dict[str, np.ndarray] = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "db1": np.array([1.0, 1.0]) / _SQRT2,
    # closed form (1 +- sqrt3, 3 +- sqrt3) / (4 sqrt2)
    "db2": np.array([1 + np.sqrt(3), 3 + np.sqrt(3), 3 - np.sqrt(3), 1 - np.sqrt(3)]) / (4 * _SQRT2),
    "db3": np.array([
        0.33267055295008263, 0.8068915093110925, 0.45987750211849154,
        -0.13501102001025458, -0.08544127388202666, 0.03522629188570953,
    ]),
    "db4": np.array([
        0.2303778133088965, 0.7148465705529157, 0.6308807679298589,
        -0.027983769416859854, -0.18703481171909309, 0.030841381835560764,
        0.0328830116668852, -0.010597401785069032,
    ]),
}


def filter_pair(name: str) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(lowpass, highpass)`` analysis filters for a named wavelet.

    The high-pass is the quadrature mirror ``g[n] = (-1)**n h[L-1-n]``.
    """
    try:
        h = FILTERS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown mother filter {name!r}; known: {sorted(FILTERS)}") from None
    g = h[::-1] * (-1.0) ** np.arange(len(h))
    return h.copy(), g


@dataclass(frozen=True)
class WpdConfig:
    level: int = 3
    mother_filter: str = "db4"

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be >= 1")
        filter_pair(self.mother_filter)


@dataclass(frozen=True, eq=False)
class WpdLeaves:
    leaves: tuple[np.ndarray, ...]
    level: int
    sample_rate_hz: int

    def energies(self) -> np.ndarray:
        return np.array([float(np.dot(c, c)) for c in self.leaves])


def _analysis_step(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """Periodic correlation with ``filt`` followed by keeping even samples.

    ``out[..., k] = sum_n filt[n] * x[..., (2k + n) mod N]``; works on the
    last axis so whole batches of windows go through at once.
    """
    n = x.shape[-1]
    half = n // 2
    out = np.zeros(x.shape[:-1] + (half,))
    base = 2 * np.arange(half)
    for tap, coef in enumerate(filt):
        out += coef * x[..., (base + tap) % n]
    return out


def _gray_to_natural(level: int) -> np.ndarray:
    """``perm[k]`` is the natural (Paley) tree index of frequency band ``k``."""
    k = np.arange(2 ** level)
    return k ^ (k >> 1)


def decompose_array(x: np.ndarray, level: int = 3, mother_filter: str = "db4") -> np.ndarray:
    """Decompose the last axis of ``x``.

    Returns an array of shape ``x.shape[:-1] + (2**level, N / 2**level)`` with
    the leaves in frequency order.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n % (2 ** level) != 0 or n < 2 ** level:
        raise ValueError(
            f"window length {n} must be a positive multiple of 2**level = {2 ** level}"
        )
    h, g = filter_pair(mother_filter)
    nodes = [x]
    for _ in range(level):
        nxt = []
        for node in nodes:
            nxt.append(_analysis_step(node, h))
            nxt.append(_analysis_step(node, g))
        nodes = nxt
    natural = np.stack(nodes, axis=-2)
    return natural[..., _gray_to_natural(level), :]


def wpd_decompose(w: Window, cfg: WpdConfig = WpdConfig()) -> WpdLeaves:
    leaves = decompose_array(w.samples, cfg.level, cfg.mother_filter)
    return WpdLeaves(tuple(leaves), cfg.level, w.sample_rate_hz)


def band_frequency_range(k: int, sample_rate_hz: float, level: int = 3) -> tuple[float, float]:
    if not 0 <= k < 2 ** level:
        raise IndexError(f"leaf index {k} out of range for level {level}")
    width = sample_rate_hz / 2 ** (level + 1)
    return k * width, (k + 1) * width


def _fmt_hz(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return f"{v:.3f}".rstrip("0").replace(".", "p")


def band_feature_names(sample_rate_hz: int, level: int = 3) -> tuple[str, ...]:
    names = []
    for k in range(2 ** level):
        lo, hi = band_frequency_range(k, sample_rate_hz, level)
        names.append(f"wpd_band_{k}_{_fmt_hz(lo)}_{_fmt_hz(hi)}")
    return tuple(names)


def wpd_rms_array(x: np.ndarray, level: int = 3, mother_filter: str = "db4") -> np.ndarray:
    leaves = decompose_array(x, level, mother_filter)
    return np.sqrt(np.mean(leaves ** 2, axis=-1))


def wpd_features(w: Window, cfg: WpdConfig = WpdConfig()) -> FeatureVector:
    values = wpd_rms_array(w.samples, cfg.level, cfg.mother_filter)
    return FeatureVector(Scheme.WPD_RMS, band_feature_names(w.sample_rate_hz, cfg.level), values)
