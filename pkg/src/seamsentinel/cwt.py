"""Continuous wavelet transform with real Gaussian-derivative, Morlet and
Shannon mother wavelets, pseudo-frequency mapping and scalogram export.

Coefficients are ``|sum_n x[n] / sqrt(s) * psi((n - t) / s)|`` evaluated with
zero extension at both ends; the columns near the edges therefore carry the
usual cone-of-influence artefacts and are kept rather than trimmed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite_e
from scipy import optimize, signal as sps

SUPPORT_THRESHOLD = 1e-8


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    MORLET = "morlet"
    SHANNON = "shannon"


@dataclass(frozen=True)
class WaveletSpec:
    """Mother wavelet choice.

    ``order`` applies to the Gaussian family, ``center_freq`` (cycles per
    unit time) to Morlet and Shannon, ``bandwidth`` to Shannon only.
    """

    family: Family
    order: int = 1
    center_freq: float = 0.8125
    bandwidth: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.GAUSSIAN and (int(self.order) != self.order or self.order < 1):
            raise ValueError("Gaussian order must be a positive integer")
        if self.family in (Family.MORLET, Family.SHANNON) and not self.center_freq > 0:
            raise ValueError("center frequency must be positive")
        if self.family is Family.SHANNON and not self.bandwidth > 0:
            raise ValueError("Shannon bandwidth must be positive")

    @classmethod
    def gaussian(cls, order: int = 1) -> "WaveletSpec":
        return cls(Family.GAUSSIAN, order=order)

    @classmethod
    def morlet(cls, center_freq: float = 0.8125) -> "WaveletSpec":
        return cls(Family.MORLET, center_freq=center_freq)

    @classmethod
    def shannon(cls, bandwidth: float = 0.1, center_freq: float = 3.0) -> "WaveletSpec":
        return cls(Family.SHANNON, center_freq=center_freq, bandwidth=bandwidth)

    @classmethod
    def parse(cls, text: str) -> "WaveletSpec":
        """Parse ``gaussian[:order]``, ``morlet[:fc]`` or ``shannon[:fb:fc]``."""
        name, *params = [p.strip() for p in text.split(":")]
        name = name.lower()
        try:
            if name in ("gaussian", "gaus"):
                return cls.gaussian(int(params[0]) if params else 1)
            if name in ("morlet", "morl"):
                return cls.morlet(float(params[0]) if params else 0.8125)
            if name in ("shannon", "shan"):
                fb = float(params[0]) if params else 0.1
                fc = float(params[1]) if len(params) > 1 else 3.0
                return cls.shannon(fb, fc)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"bad wavelet spec {text!r}: {exc}") from None
        raise ValueError(f"unknown wavelet family {name!r}")

    def label(self) -> str:
        if self.family is Family.GAUSSIAN:
            return f"gaussian:{self.order}"
        if self.family is Family.MORLET:
            return f"morlet:{self.center_freq!r}"
        return f"shannon:{self.bandwidth!r}:{self.center_freq!r}"

    def psi(self, t: np.ndarray) -> np.ndarray:
        """Mother wavelet sampled at ``t``."""
        t = np.asarray(t, dtype=np.float64)
        if self.family is Family.MORLET:
            return np.exp(-0.5 * t * t) * np.cos(2 * np.pi * self.center_freq * t)
        if self.family is Family.SHANNON:
            fb = self.bandwidth
            return np.sqrt(fb) * np.sinc(fb * t) * np.cos(2 * np.pi * self.center_freq * t)
        return _gaussian_norm(self.order) * _gaussian_derivative(self.order, t)

    def support_halfwidth(self) -> float:
        """Smallest T with ``|psi(t)| < threshold * max|psi|`` for all ``|t| > T``."""
        return _support_halfwidth(self)

    def central_frequency(self) -> float:
        """Pseudo-frequency constant in cycles per unit time."""
        if self.family is Family.GAUSSIAN:
            return _gaussian_center(self.order)
        return float(self.center_freq)


def _gaussian_derivative(order: int, t: np.ndarray) -> np.ndarray:
    # d^n/dt^n exp(-t^2/2) = (-1)^n He_n(t) exp(-t^2/2)
    coef = np.zeros(order + 1)
    coef[order] = 1.0
    return (-1.0) ** order * hermite_e.hermeval(t, coef) * np.exp(-0.5 * t * t)


@lru_cache(maxsize=None)
def _gaussian_norm(order: int) -> float:
    # int He_n(t)^2 exp(-t^2) dt = sqrt(pi) * (2n-1)!! / 2^n
    double_fact = math.prod(range(2 * order - 1, 0, -2)) if order > 0 else 1
    return 1.0 / math.sqrt(math.sqrt(math.pi) * double_fact / 2 ** order)


@lru_cache(maxsize=None)
def _gaussian_center(order: int) -> float:
    """Frequency (cycles) at which a 1/sqrt(s)-normalised transform of a pure
    tone peaks, i.e. the maximiser of ``sqrt(xi) * |Psi_hat(xi)|``.

    ``|Psi_hat(xi)|`` is proportional to ``w**n exp(-w**2 / 2)`` with
    ``w = 2 pi xi``.
    """
    def neg_log_response(xi):
        w = 2 * np.pi * xi
        return -(0.5 * np.log(xi) + order * np.log(w) - 0.5 * w * w)

    res = optimize.minimize_scalar(neg_log_response, bounds=(1e-6, 10.0), method="bounded",
                                   options={"xatol": 1e-12})
    return float(res.x)


@lru_cache(maxsize=None)
def _support_halfwidth(spec: WaveletSpec) -> float:
    if spec.family is Family.SHANNON:
        # sinc envelope sqrt(fb) / (pi fb |t|); peak sqrt(fb) at t = 0
        return 1.0 / (np.pi * spec.bandwidth * SUPPORT_THRESHOLD)
    if spec.family is Family.MORLET:
        return math.sqrt(-2.0 * math.log(SUPPORT_THRESHOLD))
    t = np.linspace(0.0, 60.0, 600001)
    mag = np.abs(spec.psi(t))
    above = np.nonzero(mag >= SUPPORT_THRESHOLD * mag.max())[0]
    return float(t[above[-1]] + t[1])


@dataclass(frozen=True, eq=False)
class Scalogram:
    magnitudes: np.ndarray
    scales: np.ndarray
    wavelet: WaveletSpec
    sample_rate_hz: int

    def __post_init__(self):
        for name in ("magnitudes", "scales"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.magnitudes.shape[0] != len(self.scales):
            raise ValueError("one magnitude row per scale required")

    def frequencies(self) -> np.ndarray:
        return np.array([scale_to_frequency(self.wavelet, s, self.sample_rate_hz)
                         for s in self.scales])

    def dominant_scale(self, columns: slice = slice(None)) -> float:
        """Scale with the largest energy over the selected columns."""
        energy = np.sum(self.magnitudes[:, columns] ** 2, axis=1)
        return float(self.scales[int(np.argmax(energy))])


def _check_scales(scales) -> np.ndarray:
    scales = np.asarray(scales, dtype=np.float64)
    if scales.ndim != 1 or scales.size == 0:
        raise ValueError("empty scale list")
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    if np.any(np.diff(scales) <= 0):
        raise ValueError("scales must be strictly increasing")
    return scales


def sampled_wavelet(spec: WaveletSpec, scale: float, max_halfwidth: int | None = None) -> np.ndarray:
    """Kernel ``psi(m / s) / sqrt(s)`` for ``m = -M..M`` (odd length, centred)."""
    m_half = int(math.ceil(scale * spec.support_halfwidth()))
    if max_halfwidth is not None:
        m_half = min(m_half, max_halfwidth)
    m = np.arange(-m_half, m_half + 1, dtype=np.float64)
    return spec.psi(m / scale) / np.sqrt(scale)


def cwt(signal: Sequence[float], wavelet: WaveletSpec, scales: Sequence[float],
        sample_rate_hz: int) -> Scalogram:
    """Magnitude scalogram of ``signal``; one row per scale.

    The kernel is truncated where the mother wavelet drops below 1e-8 of its
    peak, and never wider than the signal itself (anything further out only
    meets the zero extension).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("signal must be one-dimensional with at least 2 samples")
    scales = _check_scales(scales)
    n = len(x)
    rows = np.empty((len(scales), n))
    for i, s in enumerate(scales):
        kernel = sampled_wavelet(wavelet, s, max_halfwidth=n - 1)
        # correlation: y[t] = sum_m x[t + m] k[m]
        half = (len(kernel) - 1) // 2
        full = sps.fftconvolve(x, kernel[::-1], mode="full")
        rows[i] = np.abs(full[half:half + n])
    return Scalogram(rows, scales, wavelet, sample_rate_hz)


def scale_to_frequency(wavelet: WaveletSpec, scale: float, sample_rate_hz: float) -> float:
    if not scale > 0:
        raise ValueError("scale must be positive")
    return wavelet.central_frequency() * sample_rate_hz / scale


def frequency_to_scale(wavelet: WaveletSpec, frequency_hz: float, sample_rate_hz: float) -> float:
    if not frequency_hz > 0:
        raise ValueError("frequency must be positive")
    return wavelet.central_frequency() * sample_rate_hz / frequency_hz


def parse_scales(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad scale range {text!r}; expected start:stop:step")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    return np.array([float(p) for p in text.split(",")])


def export_scalogram(sc: Scalogram, path: str | Path, format: str = "csv") -> None:
    """Write ``sc`` as CSV (one row per scale) or binary 8-bit PGM.

    The PGM is min-max normalised over the whole image with the smallest
    scale on the top row; a constant image maps to all zeros.
    """
    format = format.lower()
    if format == "csv":
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for row in sc.magnitudes:
                fh.write(",".join(repr(v) for v in row.tolist()))
                fh.write("\n")
    elif format == "pgm":
        mag = sc.magnitudes
        lo, hi = float(mag.min()), float(mag.max())
        if hi > lo:
            img = np.round((mag - lo) / (hi - lo) * 255.0).astype(np.uint8)
        else:
            img = np.zeros(mag.shape, dtype=np.uint8)
        rows, cols = img.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
            fh.write(img.tobytes())
    else:
        raise ValueError(f"unknown scalogram format {format!r}; expected csv or pgm")


def read_scalogram_csv(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
