"""Per-frame acoustic features for a fixed-length cough segment.

A 500 ms / 16 kHz segment is cut into 19 half-overlapping 50 ms frames; each
frame yields 4 temporal features, 5 spectral features, 40 log filterbank
energies, and 13 MFCCs (62 rows total, in a fixed order).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import CoughSegment
from .dsp import (FilterbankMatrix, Spectrum, dct2_orthonormal, fft_power,
                  hamming_normalized, mel_filterbank)
from .errors import InvalidArgument

EPS = 1e-10

TEMPORAL_NAMES = ("zcr", "energy", "energy_entropy", "intensity")
SPECTRAL_NAMES = ("centroid", "spread", "spectral_entropy", "flux", "rolloff90")


@dataclass(frozen=True)
class FeatureParams:
    """Extraction knobs; the defaults are the production configuration."""

    sample_rate_hz: int = 16000
    frame_samples: int = 800   # 50 ms
    hop_samples: int = 400     # 50% overlap
    n_fft: int = 1024
    n_filters: int = 40
    n_mfcc: int = 13
    n_energy_blocks: int = 10

    def feature_names(self) -> list[str]:
        names = list(TEMPORAL_NAMES) + list(SPECTRAL_NAMES)
        names += [f"fbank_{i}" for i in range(1, self.n_filters + 1)]
        names += [f"mfcc_{i}" for i in range(1, self.n_mfcc + 1)]
        return names


DEFAULT_PARAMS = FeatureParams()
FRAME_FEATURE_NAMES = tuple(DEFAULT_PARAMS.feature_names())


@dataclass(frozen=True)
class FrameSeries:
    """Windowed analysis frames of one segment."""

    frames: np.ndarray  # (n_frames, frame_samples), window already applied
    frame_samples: int
    hop_samples: int
    sample_rate_hz: int


@dataclass(frozen=True)
class FrameFeatureMatrix:
    """Feature rows x frame columns, rows in the order of ``feature_names``."""

    values: np.ndarray
    feature_names: tuple[str, ...]


def frame_signal(segment: CoughSegment,
                 params: FeatureParams = DEFAULT_PARAMS) -> FrameSeries:
    """Slice a segment into half-overlapping frames and apply the window."""
    x = np.asarray(segment.samples, dtype=np.float64)
    frame_len, hop = params.frame_samples, params.hop_samples
    if x.shape[0] < frame_len:
        raise InvalidArgument(
            f"segment of {x.shape[0]} samples is shorter than one "
            f"{frame_len}-sample frame")
    n_frames = (x.shape[0] - frame_len) // hop + 1
    window = hamming_normalized(frame_len)
    starts = np.arange(n_frames) * hop
    frames = x[starts[:, None] + np.arange(frame_len)] * window
    return FrameSeries(frames=frames, frame_samples=frame_len,
                       hop_samples=hop, sample_rate_hz=segment.sample_rate_hz)


def temporal_features(frame: np.ndarray,
                      n_energy_blocks: int = 10) -> tuple[float, float, float, float]:
    """(zero-crossing rate, energy, energy entropy, intensity in dB)."""
    x = np.asarray(frame, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise InvalidArgument("frame must hold at least 2 samples")

    signs = np.sign(x)
    zcr = float(np.abs(np.diff(signs)).sum() / (2.0 * (n - 1)))
    energy = float(np.mean(x * x))

    block_len = n // n_energy_blocks
    blocks = x[:block_len * n_energy_blocks].reshape(n_energy_blocks, block_len)
    block_energy = (blocks * blocks).sum(axis=1) + EPS
    p = block_energy / block_energy.sum()
    energy_entropy = float(-(p * np.log2(p)).sum())

    intensity = float(10.0 * np.log10(energy + EPS))
    return zcr, energy, energy_entropy, intensity


def spectral_features(spec: Spectrum, prev: Spectrum | None
                      ) -> tuple[float, float, float, float, float]:
    """(centroid, spread, entropy, flux, 90% roll-off); flux is 0 for frame 0."""
    mags = spec.magnitudes
    freqs = spec.freqs_hz
    power = mags * mags

    p = mags / (mags.sum() + EPS)
    centroid = float((freqs * p).sum())
    spread = float(np.sqrt((((freqs - centroid) ** 2) * p).sum()))

    q = (power + EPS) / (power.sum() + EPS * power.shape[0])
    entropy = float(-(q * np.log2(q)).sum())

    if prev is None:
        flux = 0.0
    else:
        p_prev = prev.magnitudes / (prev.magnitudes.sum() + EPS)
        flux = float(((p - p_prev) ** 2).sum())

    cum_power = np.cumsum(power)
    rolloff_idx = int(np.argmax(cum_power >= 0.9 * cum_power[-1]))
    rolloff90 = float(freqs[rolloff_idx])
    return centroid, spread, entropy, flux, rolloff90


def fbank_features(spec: Spectrum, fb: FilterbankMatrix) -> np.ndarray:
    """Log filterbank energies of the power spectrum."""
    power = spec.magnitudes * spec.magnitudes
    if fb.weights.shape[1] != power.shape[0]:
        raise InvalidArgument(
            f"filterbank expects {fb.weights.shape[1]} bins, "
            f"spectrum has {power.shape[0]}")
    return np.log(fb.weights @ power + EPS)


def mfcc_features(fbank: np.ndarray, n_mfcc: int = 13) -> np.ndarray:
    """Orthonormal DCT-II of the log filterbank energies (0th kept)."""
    return dct2_orthonormal(fbank, n_mfcc)


def extract_frame_features(segment: CoughSegment,
                           params: FeatureParams = DEFAULT_PARAMS
                           ) -> FrameFeatureMatrix:
    """Full per-frame feature matrix for one segment."""
    series = frame_signal(segment, params)
    fb = mel_filterbank(params.n_filters, params.n_fft, params.sample_rate_hz)
    columns = []
    prev: Spectrum | None = None
    for frame in series.frames:
        spec = fft_power(frame, params.n_fft, params.sample_rate_hz)
        col = np.empty(len(TEMPORAL_NAMES) + len(SPECTRAL_NAMES)
                       + params.n_filters + params.n_mfcc)
        col[0:4] = temporal_features(frame, params.n_energy_blocks)
        col[4:9] = spectral_features(spec, prev)
        fbank = fbank_features(spec, fb)
        col[9:9 + params.n_filters] = fbank
        col[9 + params.n_filters:] = mfcc_features(fbank, params.n_mfcc)
        columns.append(col)
        prev = spec
    values = np.stack(columns, axis=1)
    return FrameFeatureMatrix(values=values,
                              feature_names=tuple(params.feature_names()))


def write_frame_matrix_csv(matrix: FrameFeatureMatrix, path: str | Path) -> None:
    """Debug export: one row per feature, one column per frame."""
    n_frames = matrix.values.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature"] + [f"frame_{i}" for i in range(n_frames)])
        for name, row in zip(matrix.feature_names, matrix.values):
            writer.writerow([name] + [repr(float(v)) for v in row])
