"""Synthetic demo dataset: tone-plus-noise bursts with planted class separation.

Lets the whole pipeline run without clinical recordings. Normal patients get
low-frequency bursts, abnormal patients high-frequency ones; everything else
(envelope, noise, level) is shared. Usage:

    python -m coughtriage.demo out/demo --patients 8 --coughs 5 --seed 0
"""

from __future__ import annotations

import argparse
import csv
import wave
from pathlib import Path

import numpy as np

from .manifest import MANIFEST_HEADER
from .summarize import LABEL_NAMES

DEMO_RATE_HZ = 44100  # recorded rate; the pipeline downsamples to 16 kHz


def _cough_burst(rng: np.random.Generator, base_freq: float,
                 duration_s: float) -> np.ndarray:
    n = int(duration_s * DEMO_RATE_HZ)
    t = np.arange(n) / DEMO_RATE_HZ
    attack = 0.02
    envelope = np.minimum(t / attack, 1.0) * np.exp(-t / (0.35 * duration_s))
    freq = base_freq * (1.0 + rng.uniform(-0.05, 0.05))
    tone = (np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
            + 0.4 * np.sin(2 * np.pi * 2 * freq * t))
    noise = 0.3 * rng.standard_normal(n)
    x = envelope * (tone + noise)
    return 0.6 * x / np.max(np.abs(x))


def write_wav_pcm16(path: Path, samples: np.ndarray,
                    rate_hz: int = DEMO_RATE_HZ) -> None:
    pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate_hz)
        wav.writeframes(pcm.tobytes())


def make_demo_dataset(out_dir: str | Path, n_patients: int = 8,
                      coughs_per_patient: int = 5, seed: int = 0) -> Path:
    """Write WAVs plus manifest.csv; returns the manifest path.

    Patients alternate normal/abnormal so any even count splits evenly.
    """
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wavs"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n_patients):
        patient_id = f"demo{i + 1:02d}"
        label = i % 2  # odd-indexed patients are abnormal
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        base = rng.uniform(1300.0, 1900.0) if label else rng.uniform(350.0, 650.0)
        for c in range(coughs_per_patient):
            duration = rng.uniform(0.45, 0.65)
            rel = f"wavs/{patient_id}_c{c + 1}.wav"
            write_wav_pcm16(out_dir / rel, _cough_burst(rng, base, duration))
            rows.append((patient_id, rel, LABEL_NAMES[label]))
    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    return manifest_path


def permute_patient_labels(label_of_patient: dict[str, int],
                           seed: int) -> dict[str, int]:
    """Reassign the same multiset of labels to patients at random."""
    pids = sorted(label_of_patient)
    labels = [label_of_patient[p] for p in pids]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBADD]))
    shuffled = [labels[i] for i in rng.permutation(len(labels))]
    return dict(zip(pids, shuffled))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Generate the bundled synthetic demo dataset.")
    parser.add_argument("out_dir")
    parser.add_argument("--patients", type=int, default=8)
    parser.add_argument("--coughs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    manifest = make_demo_dataset(args.out_dir, n_patients=args.patients,
                                 coughs_per_patient=args.coughs, seed=args.seed)
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
