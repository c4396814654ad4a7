"""Collapse per-frame feature matrices into per-cough summary vectors.

Each of the 62 feature rows is summarized by eight order-free statistics,
giving a 496-dim vector (feature-major, statistic-minor ordering).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .audio_io import CoughSegment
from .errors import InvalidArgument
from .features import DEFAULT_PARAMS, FeatureParams, FrameFeatureMatrix, extract_frame_features

STAT_NAMES = ("mean", "std", "median", "skewness", "kurtosis",
              "p1", "p99", "p99_minus_p1")


@dataclass(frozen=True)
class FeatureVector:
    """Per-cough summary vector (496 values for the default configuration)."""

    values: np.ndarray
    cough_id: str = ""
    patient_id: str = ""


def summary_feature_names(params: FeatureParams = DEFAULT_PARAMS) -> list[str]:
    """Stable column headers, e.g. ``zcr_mean`` ... ``mfcc_13_p99_minus_p1``."""
    return [f"{feat}_{stat}"
            for feat in params.feature_names() for stat in STAT_NAMES]


def _row_stats(row: np.ndarray) -> np.ndarray:
    mean = row.mean()
    std = row.std()  # population (1/n)
    median = float(np.median(row))
    if np.ptp(row) == 0.0:  # constant row: sigma == 0 convention
        skew = kurt = 0.0
        std = 0.0
    else:
        centered = row - mean
        m2 = np.mean(centered ** 2)
        skew = float(np.mean(centered ** 3) / m2 ** 1.5)
        kurt = float(np.mean(centered ** 4) / m2 ** 2 - 3.0)
    p1, p99 = np.percentile(row, [1.0, 99.0])
    return np.array([mean, std, median, skew, kurt, p1, p99, p99 - p1])


def summarize_cough(matrix: FrameFeatureMatrix, cough_id: str = "",
                    patient_id: str = "") -> FeatureVector:
    """Eight summary statistics per feature row, concatenated feature-major."""
    values = matrix.values
    if values.ndim != 2 or values.shape[1] < 2:
        raise InvalidArgument(
            "feature matrix needs at least 2 frame columns to summarize")
    stats = np.concatenate([_row_stats(row) for row in values])
    return FeatureVector(values=stats, cough_id=cough_id, patient_id=patient_id)


class CoughFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transformer: cough segments -> summary-vector matrix.

    ``transform`` accepts a sequence of :class:`CoughSegment` and returns an
    ``(n_coughs, n_features)`` array, so the extraction step drops into
    scikit-learn pipelines.
    """

    def __init__(self, params: FeatureParams = DEFAULT_PARAMS):
        self.params = params

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        rows = [summarize_cough(extract_frame_features(seg, self.params)).values
                for seg in X]
        return np.stack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(summary_feature_names(self.params), dtype=object)


LABEL_TOKENS = {"normal": 0, "abnormal": 1}
LABEL_NAMES = {0: "normal", 1: "abnormal"}


@dataclass
class FeatureTable:
    """Per-cough feature matrix plus identity and label columns."""

    cough_ids: list[str]
    patient_ids: list[str]
    labels: np.ndarray          # (n,) int, abnormal == 1
    X: np.ndarray               # (n, n_features)
    feature_names: list[str]

    def __len__(self) -> int:
        return len(self.cough_ids)

    def with_patient_labels(self, label_of_patient: dict[str, int]) -> "FeatureTable":
        """Same features, labels replaced patient-wise (for permutation runs)."""
        labels = np.array([label_of_patient[p] for p in self.patient_ids],
                          dtype=int)
        return FeatureTable(cough_ids=list(self.cough_ids),
                            patient_ids=list(self.patient_ids),
                            labels=labels, X=self.X,
                            feature_names=list(self.feature_names))


def write_feature_csv(table: FeatureTable, path: str | Path) -> None:
    """One row per cough: cough_id, patient_id, label, then feature columns.

    Floats are written with ``repr`` so a rerun is byte-identical and a
    read-back is lossless.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cough_id", "patient_id", "label"] + table.feature_names)
        for i in range(len(table)):
            writer.writerow([table.cough_ids[i], table.patient_ids[i],
                             LABEL_NAMES[int(table.labels[i])]]
                            + [repr(float(v)) for v in table.X[i]])


def read_feature_csv(path: str | Path) -> FeatureTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["cough_id", "patient_id", "label"]:
            raise InvalidArgument(
                f"unexpected feature CSV header: {header[:3]}")
        names = header[3:]
        cough_ids, patient_ids, labels, rows = [], [], [], []
        for row in reader:
            cough_ids.append(row[0])
            patient_ids.append(row[1])
            if row[2] not in LABEL_TOKENS:
                raise InvalidArgument(f"unknown label token {row[2]!r}")
            labels.append(LABEL_TOKENS[row[2]])
            rows.append([float(v) for v in row[3:]])
    if not rows:
        raise InvalidArgument(f"feature CSV {path} holds no rows")
    return FeatureTable(cough_ids=cough_ids, patient_ids=patient_ids,
                        labels=np.array(labels, dtype=int),
                        X=np.array(rows, dtype=np.float64),
                        feature_names=names)
