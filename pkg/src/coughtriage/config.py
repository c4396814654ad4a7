"""Run configuration: flat key=value files with production defaults.

An empty config reproduces the standard analysis exactly (500 ms segments at
16 kHz, 50 ms frames with 50% overlap, 1024-point FFT, 40 filterbanks,
13 MFCCs, 4 outer / 5 inner folds).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .evaluation import MODEL_FAMILIES
from .features import FeatureParams

OUTPUT_DIR_ENV = "COUGHTRIAGE_OUTPUT_DIR"


@dataclass(frozen=True)
class RunConfig:
    manifest: str | None = None
    features_csv: str | None = None  # reuse a previous extraction
    models: tuple[str, ...] = ("lr", "svm", "mlp")
    k_outer: int = 4
    k_inner: int = 5
    seed: int = 0
    threshold: float = 0.5
    output_dir: str = "out"
    jobs: int = 1
    sample_rate_hz: int = 16000
    duration_ms: int = 500
    frame_ms: int = 50
    frame_overlap: float = 0.5
    n_fft: int = 1024
    n_filters: int = 40
    n_mfcc: int = 13
    abort_on_decode_error: bool = False

    def feature_params(self) -> FeatureParams:
        frame_samples = self.sample_rate_hz * self.frame_ms // 1000
        hop = round(frame_samples * (1.0 - self.frame_overlap))
        if frame_samples < 2 or hop < 1:
            raise ConfigError(
                f"degenerate framing: frame={frame_samples} hop={hop}")
        return FeatureParams(sample_rate_hz=self.sample_rate_hz,
                             frame_samples=frame_samples, hop_samples=hop,
                             n_fft=self.n_fft, n_filters=self.n_filters,
                             n_mfcc=self.n_mfcc)

    def validate(self) -> "RunConfig":
        for fam in self.models:
            if fam not in MODEL_FAMILIES:
                raise ConfigError(
                    f"unknown model family {fam!r}; "
                    f"choose from {', '.join(MODEL_FAMILIES)}")
        if not self.models:
            raise ConfigError("no model families selected")
        if self.k_outer < 2 or self.k_inner < 2:
            raise ConfigError("k_outer and k_inner must be >= 2")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self.feature_params()
        return self

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["models"] = list(self.models)
        return doc


_BOOL_TOKENS = {"true": True, "1": True, "yes": True,
                "false": False, "0": False, "no": False}


def _parse_value(name: str, kind, raw: str):
    try:
        if name == "models":
            return tuple(tok.strip() for tok in raw.split(",") if tok.strip())
        if kind is bool:
            if raw.lower() not in _BOOL_TOKENS:
                raise ValueError(raw)
            return _BOOL_TOKENS[raw.lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def load_config(path: str | Path) -> RunConfig:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    kinds = {"manifest": str, "features_csv": str, "models": tuple,
             "k_outer": int, "k_inner": int, "seed": int, "threshold": float,
             "output_dir": str, "jobs": int, "sample_rate_hz": int,
             "duration_ms": int, "frame_ms": int, "frame_overlap": float,
             "n_fft": int, "n_filters": int, "n_mfcc": int,
             "abort_on_decode_error": bool}
    overrides = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        overrides[key] = _parse_value(key, kinds[key], raw)
    return replace(RunConfig(), **overrides)
