"""Shared numerical kernels: window, FFT magnitude spectrum, mel filterbank, DCT.

Everything here is pure and deterministic; filterbanks are cached and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import InvalidArgument


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum of a single frame."""

    magnitudes: np.ndarray  # (n_fft // 2 + 1,) non-negative
    bin_width_hz: float

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.magnitudes.shape[0]) * self.bin_width_hz


@dataclass(frozen=True)
class FilterbankMatrix:
    """Triangular mel filters sampled at FFT bin frequencies."""

    weights: np.ndarray  # (n_filters, n_fft // 2 + 1)
    center_freqs_hz: np.ndarray  # (n_filters,), strictly increasing


def hamming_normalized(n: int) -> np.ndarray:
    """Hamming window rescaled to unit sum (unit DC gain)."""
    if n < 1:
        raise InvalidArgument(f"window length must be >= 1, got {n}")
    w = np.hamming(n)  # 0.54 - 0.46*cos(2*pi*k/(n-1)); [1.0] for n == 1
    return w / w.sum()


def fft_power(frame: np.ndarray, n_fft: int = 1024,
              sample_rate_hz: int = 16000) -> Spectrum:
    """Magnitude spectrum of a frame, zero-padded up to ``n_fft``.

    The frame must not be longer than ``n_fft``; silently truncating would
    corrupt downstream features, so that case raises.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if n_fft < 1 or (n_fft & (n_fft - 1)) != 0:
        raise InvalidArgument(f"n_fft must be a power of two, got {n_fft}")
    if frame.ndim != 1:
        raise InvalidArgument("frame must be one-dimensional")
    if frame.shape[0] > n_fft:
        raise InvalidArgument(
            f"frame length {frame.shape[0]} exceeds n_fft {n_fft}")
    mags = np.abs(np.fft.rfft(frame, n=n_fft))
    return Spectrum(magnitudes=mags, bin_width_hz=sample_rate_hz / n_fft)


def hz_to_mel(f: float | np.ndarray) -> float | np.ndarray:
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: float | np.ndarray) -> float | np.ndarray:
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int = 40, n_fft: int = 1024,
                   sample_rate_hz: int = 16000) -> FilterbankMatrix:
    """Triangular filters with centers equally spaced on the mel scale.

    Centers span (0, Nyquist); triangles are sampled at the FFT bin
    frequencies with no area normalization, so construction is reproducible
    bit-for-bit.
    """
    if n_filters < 1:
        raise InvalidArgument(f"n_filters must be >= 1, got {n_filters}")
    weights, centers = _filterbank_arrays(n_filters, n_fft, sample_rate_hz)
    return FilterbankMatrix(weights=weights, center_freqs_hz=centers)


@lru_cache(maxsize=8)
def _filterbank_arrays(n_filters: int, n_fft: int, sample_rate_hz: int):
    nyquist = sample_rate_hz / 2.0
    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), n_filters + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate_hz / n_fft)

    weights = np.zeros((n_filters, bin_freqs.shape[0]))
    for i in range(n_filters):
        left, center, right = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        weights[i] = np.maximum(0.0, np.minimum(rising, falling))
        if not np.any(weights[i] > 0):
            raise InvalidArgument(
                f"filter {i} is empty: {n_filters} filters exceed the "
                f"resolution of a {n_fft}-point FFT at {sample_rate_hz} Hz")
    return weights, edges_hz[1:-1].copy()


def dct2_orthonormal(v: np.ndarray, n_out: int = 13) -> np.ndarray:
    """First ``n_out`` coefficients of the orthonormal DCT-II of ``v``."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidArgument("input must be one-dimensional")
    if n_out > v.shape[0]:
        raise InvalidArgument(
            f"n_out {n_out} exceeds input length {v.shape[0]}")
    return scipy.fft.dct(v, type=2, norm="ortho")[:n_out]
