"""WAV decoding, polyphase resampling, and fixed-length cough segments."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.signal

from .errors import DecodeError, EmptyAudio, InvalidArgument, RateMismatch, UnsupportedFormat

WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

TARGET_RATE_HZ = 16000
SEGMENT_MS = 500


@dataclass(frozen=True)
class AudioClip:
    """Decoded mono audio: float64 amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int


@dataclass(frozen=True)
class CoughSegment:
    """Fixed-duration cough at 16 kHz (8000 samples for 500 ms)."""

    samples: np.ndarray
    sample_rate_hz: int
    source_id: str = ""


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte blob to a mono clip.

    Supports PCM16 and IEEE float32, any channel count (channels are averaged
    to mono). Integer samples are scaled by 2**(bits-1).
    """
    if len(data) < 12:
        raise DecodeError(f"file too short for a RIFF header ({len(data)} bytes)")
    if data[0:4] != b"RIFF":
        raise DecodeError(f"bad container magic {data[0:4]!r}, expected b'RIFF'")
    if data[8:12] != b"WAVE":
        raise DecodeError(f"bad RIFF form type {data[8:12]!r}, expected b'WAVE'")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            if chunk_size == 0:
                raise EmptyAudio("zero-length data chunk")
            if len(body) < chunk_size:
                raise DecodeError(
                    f"data chunk declares {chunk_size} bytes but only "
                    f"{len(body)} are present")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise DecodeError("missing fmt chunk")
    if payload is None:
        raise DecodeError("missing data chunk")

    audio_format, channels, rate, bits = fmt
    if channels < 1:
        raise DecodeError("fmt chunk declares zero channels")
    if rate < 1:
        raise DecodeError(f"fmt chunk declares invalid sample rate {rate}")

    if audio_format == WAVE_FORMAT_PCM:
        if bits != 16:
            raise UnsupportedFormat(f"PCM with {bits} bits per sample")
        raw = np.frombuffer(payload[:len(payload) - len(payload) % 2],
                            dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedFormat(f"IEEE float with {bits} bits per sample")
        raw = np.frombuffer(payload[:len(payload) - len(payload) % 4],
                            dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedFormat(f"audio format tag {audio_format}")

    if samples.size == 0:
        raise EmptyAudio("data chunk holds no complete sample")
    if samples.size % channels != 0:
        raise DecodeError(
            f"data chunk length is not a multiple of the {channels}-channel "
            "frame size")
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    if not np.all(np.isfinite(samples)):
        raise DecodeError("non-finite sample values")
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples=samples, sample_rate_hz=rate)


def _parse_fmt(body: bytes):
    if len(body) < 16:
        raise DecodeError(f"fmt chunk too short ({len(body)} bytes)")
    audio_format, channels, rate = struct.unpack_from("<HHI", body, 0)
    (bits,) = struct.unpack_from("<H", body, 14)
    if audio_format == WAVE_FORMAT_EXTENSIBLE:
        # the real format tag lives in the first two bytes of the SubFormat GUID
        if len(body) < 26:
            raise DecodeError("extensible fmt chunk missing SubFormat")
        (audio_format,) = struct.unpack_from("<H", body, 24)
    return audio_format, channels, rate, bits


def read_wav_file(path: str | Path) -> AudioClip:
    return decode_wav(Path(path).read_bytes())


def resample_polyphase(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Rational-ratio resampling with a Kaiser-windowed sinc FIR.

    Output length is ceil(n * L / M) for the reduced ratio L/M. The
    anti-alias cutoff sits at 0.9x the Nyquist of the lower rate.
    """
    if target_rate_hz < 1:
        raise InvalidArgument(f"target rate must be positive, got {target_rate_hz}")
    source_rate = clip.sample_rate_hz
    if target_rate_hz == source_rate:
        return clip

    g = math.gcd(source_rate, target_rate_hz)
    up = target_rate_hz // g
    down = source_rate // g
    h = _resampling_filter(up, down, source_rate, target_rate_hz)
    out = scipy.signal.resample_poly(clip.samples, up, down, window=h)
    return AudioClip(samples=out, sample_rate_hz=target_rate_hz)


@lru_cache(maxsize=8)
def _resampling_filter(up: int, down: int, source_rate: int,
                       target_rate: int) -> np.ndarray:
    # 64 taps per polyphase branch; pure decimation (up == 1) keys the length
    # to the decimation factor instead so the filter stays sharp.
    n_taps = 64 * (up if up > 1 else down)
    cutoff_hz = 0.9 * (min(source_rate, target_rate) / 2.0)
    return scipy.signal.firwin(n_taps, cutoff_hz, window=("kaiser", 8.6),
                               fs=float(source_rate) * up)


def to_cough_segment(clip: AudioClip, duration_ms: int = SEGMENT_MS,
                     source_id: str = "") -> CoughSegment:
    """Normalize a 16 kHz clip to exactly ``duration_ms`` of audio.

    Longer clips keep their maximum-energy window (coughs are energy bursts);
    shorter clips are zero-padded symmetrically.
    """
    if clip.sample_rate_hz != TARGET_RATE_HZ:
        raise RateMismatch(
            f"expected {TARGET_RATE_HZ} Hz, got {clip.sample_rate_hz} Hz")
    n_target = duration_ms * TARGET_RATE_HZ // 1000
    x = np.asarray(clip.samples, dtype=np.float64)
    n = x.shape[0]
    if n == n_target:
        out = x
    elif n < n_target:
        pad = n_target - n
        out = np.pad(x, (pad // 2, pad - pad // 2))
    else:
        start = _max_energy_offset(x, n_target)
        out = x[start:start + n_target]
    return CoughSegment(samples=out, sample_rate_hz=TARGET_RATE_HZ,
                        source_id=source_id)


def _max_energy_offset(x: np.ndarray, width: int) -> int:
    cum = np.concatenate(([0.0], np.cumsum(x * x)))
    window_energy = cum[width:] - cum[:-width]
    return int(np.argmax(window_energy))


def load_cough(path: str | Path, duration_ms: int = SEGMENT_MS,
               source_id: str = "") -> CoughSegment:
    """Decode, resample to 16 kHz, and cut to a fixed-length segment."""
    clip = read_wav_file(path)
    clip = resample_polyphase(clip, TARGET_RATE_HZ)
    return to_cough_segment(clip, duration_ms=duration_ms,
                            source_id=source_id or str(path))
