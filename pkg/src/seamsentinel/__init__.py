"""Wavelet-based vibration analysis and lightweight classification for
condition monitoring of round-seam milling machines."""

__version__ = "0.1.0"
