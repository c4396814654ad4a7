"""Grouped, stratified cross-validation and triage metrics.

Folds are built at the patient level (a patient's coughs never straddle the
train/test boundary); cough probabilities are averaged into a per-patient
probability before any metric is computed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateLabels, InfeasibleStratification, InvalidArgument,
                     UndefinedAUC)
from .models import (LogisticRegressionClassifier, MLPClassifier, SVMClassifier,
                     Standardizer)
from .summarize import FeatureTable, LABEL_NAMES

METRIC_NAMES = ("sensitivity", "specificity", "precision", "f1", "roc_auc")


@dataclass(frozen=True)
class PatientRecord:
    """One study participant: CV group, binary CXR label, cough references."""

    patient_id: str
    label: int  # abnormal == 1
    cough_ids: tuple[str, ...]

    def __post_init__(self):
        if self.label not in (0, 1):
            raise InvalidArgument(f"label must be 0/1, got {self.label!r}")
        if not self.cough_ids:
            raise InvalidArgument(f"patient {self.patient_id!r} has no coughs")


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of_patient: dict[str, int]

    def patients_in_fold(self, fold: int) -> list[str]:
        return sorted(p for p, f in self.fold_of_patient.items() if f == fold)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int


@dataclass(frozen=True)
class ThresholdMetrics:
    sensitivity: float
    specificity: float
    precision: float
    f1: float
    degenerate: tuple[str, ...] = ()


def derive_seed(root_seed: int, *tags: int) -> int:
    """Stable child seed for one purpose, so parallel and serial runs agree."""
    ss = np.random.SeedSequence(entropy=[int(root_seed), *map(int, tags)])
    return int(ss.generate_state(1)[0])


def patients_from_table(table: FeatureTable) -> list[PatientRecord]:
    """Group feature rows into PatientRecords, enforcing one label each."""
    coughs: dict[str, list[str]] = {}
    labels: dict[str, int] = {}
    for cid, pid, label in zip(table.cough_ids, table.patient_ids, table.labels):
        if pid in labels and labels[pid] != int(label):
            raise InvalidArgument(f"patient {pid!r} appears with two labels")
        labels[pid] = int(label)
        coughs.setdefault(pid, []).append(cid)
    return [PatientRecord(patient_id=pid, label=labels[pid],
                          cough_ids=tuple(coughs[pid]))
            for pid in sorted(coughs)]


def stratified_group_kfold(patients: list[PatientRecord], k: int,
                           seed: int = 0) -> FoldAssignment:
    """Shuffle patients within each class, then deal them round-robin.

    Guarantees per-fold class counts within +-1 of the stratified ideal and
    absolute group integrity. Deterministic in (patient set, seed): patients
    are sorted by id before shuffling, so manifest row order is irrelevant.
    """
    if k < 2:
        raise InvalidArgument(f"k must be >= 2, got {k}")
    ids = [p.patient_id for p in patients]
    if len(set(ids)) != len(ids):
        raise InvalidArgument("duplicate patient ids")
    by_class = {1: [], 0: []}
    for p in sorted(patients, key=lambda p: p.patient_id):
        by_class[p.label].append(p.patient_id)
    for label, members in by_class.items():
        if len(members) < k:
            raise InfeasibleStratification(
                f"{len(members)} patients labeled {LABEL_NAMES[label]} "
                f"cannot be stratified into {k} folds")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    fold_of = {}
    for label in (1, 0):  # fixed order keeps the random stream stable
        members = by_class[label]
        for i, j in enumerate(rng.permutation(len(members))):
            fold_of[members[j]] = i % k
    return FoldAssignment(k=k, fold_of_patient=fold_of)


def aggregate_patient_probability(cough_probs) -> float:
    """Arithmetic mean of one patient's per-cough probabilities."""
    probs = np.asarray(list(cough_probs), dtype=np.float64)
    if probs.size == 0:
        raise InvalidArgument("no cough probabilities to aggregate")
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise InvalidArgument("probabilities must lie strictly inside (0, 1)")
    return float(probs.mean())


def confusion_at_threshold(labels, probs,
                           threshold: float = 0.5) -> ConfusionCounts:
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=np.float64)
    if labels.shape != probs.shape:
        raise InvalidArgument(
            f"{labels.shape[0]} labels vs {probs.shape[0]} probabilities")
    pred = probs >= threshold
    pos = labels == 1
    return ConfusionCounts(tp=int(np.sum(pred & pos)),
                           tn=int(np.sum(~pred & ~pos)),
                           fp=int(np.sum(pred & ~pos)),
                           fn=int(np.sum(~pred & pos)))


def metrics_from_confusion(c: ConfusionCounts) -> ThresholdMetrics:
    """Sensitivity, specificity, precision, F1. 0/0 yields 0, flagged."""
    degenerate = []

    def ratio(num, den, name):
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    sens = ratio(c.tp, c.tp + c.fn, "sensitivity")
    spec = ratio(c.tn, c.tn + c.fp, "specificity")
    prec = ratio(c.tp, c.tp + c.fp, "precision")
    f1 = ratio(2.0 * (sens * prec), sens + prec, "f1")
    return ThresholdMetrics(sensitivity=sens, specificity=spec, precision=prec,
                            f1=f1, degenerate=tuple(degenerate))


def roc_auc(labels, probs) -> float:
    """Probability a random abnormal outranks a random normal (ties = 0.5)."""
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=np.float64)
    if labels.shape != probs.shape:
        raise InvalidArgument(
            f"{labels.shape[0]} labels vs {probs.shape[0]} probabilities")
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUC("both classes are required to compute ROC-AUC")
    order = np.argsort(probs, kind="mergesort")
    sorted_probs = probs[order]
    ranks = np.empty(labels.shape[0])
    i = 0
    while i < labels.shape[0]:
        j = i
        while j < labels.shape[0] and sorted_probs[j] == sorted_probs[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j + 1)  # average of ranks i+1 .. j
        i = j
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(labels, probs) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) along the ROC polygon, tied scores grouped."""
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=np.float64)
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUC("both classes are required for a ROC curve")
    order = np.argsort(-probs, kind="mergesort")
    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    while i < labels.shape[0]:
        j = i
        while j < labels.shape[0] and probs[order[j]] == probs[order[i]]:
            tp += int(labels[order[j]] == 1)
            fp += int(labels[order[j]] == 0)
            j += 1
        points.append((fp / n_neg, tp / n_pos, float(probs[order[i]])))
        i = j
    return points


# ---------------------------------------------------------------------------
# model families and tuning

DEFAULT_GRIDS: dict[str, list[dict]] = {
    "lr": [{"lambda_l2": v} for v in (0.01, 0.1, 1.0, 10.0)],
    "svm": ([{"kernel": "linear", "C": c} for c in (0.1, 1.0, 10.0)]
            + [{"kernel": "rbf", "C": c, "gamma": g}
               for c in (0.1, 1.0, 10.0)
               for g in (None, 0.01, 0.1)]),  # None -> 1 / n_features
    "mlp": [{"hidden_sizes": h, "learning_rate": lr}
            for h in ((64,), (128,), (64, 32))
            for lr in (1e-3, 1e-2)],
}

MODEL_FAMILIES = tuple(DEFAULT_GRIDS)


def make_model(family: str, params: dict, seed: int = 0):
    if family == "lr":
        return LogisticRegressionClassifier(**params)
    if family == "svm":
        return SVMClassifier(**params)
    if family == "mlp":
        return MLPClassifier(**params, seed=seed)
    raise InvalidArgument(f"unknown model family {family!r}")


@dataclass(frozen=True)
class TuningResult:
    params: dict
    index: int
    scores: tuple[float, ...]  # mean inner AUC per grid point (nan if skipped)
    inner_k_used: int


def _rows_of_patients(table: FeatureTable, patient_ids: set[str]) -> np.ndarray:
    return np.flatnonzero(np.isin(np.asarray(table.patient_ids, dtype=object),
                                  list(patient_ids)))


def _patient_probabilities(table: FeatureTable, rows: np.ndarray,
                           cough_probs: np.ndarray):
    """Per-patient mean probability over the given rows; sorted by id."""
    by_patient: dict[str, list[float]] = {}
    label_of: dict[str, int] = {}
    for r, p in zip(rows, cough_probs):
        pid = table.patient_ids[r]
        by_patient.setdefault(pid, []).append(float(p))
        label_of[pid] = int(table.labels[r])
    pids = sorted(by_patient)
    probs = np.array([aggregate_patient_probability(by_patient[p]) for p in pids])
    labels = np.array([label_of[p] for p in pids], dtype=int)
    return pids, labels, probs


def tune_hyperparameters(train_patients: list[PatientRecord],
                         table: FeatureTable, model_family: str,
                         grid: list[dict], inner_k: int = 5,
                         seed: int = 0) -> TuningResult:
    """Pick the grid point with the best mean inner per-patient ROC-AUC.

    Ties go to the earliest grid point. The inner fold count is capped at the
    smaller per-class patient count so small training splits stay feasible;
    below 2 the stratification is infeasible outright.
    """
    if not grid:
        raise InvalidArgument("empty hyperparameter grid")
    if len(grid) == 1:
        return TuningResult(params=grid[0], index=0, scores=(float("nan"),),
                            inner_k_used=0)
    class_counts = [sum(1 for p in train_patients if p.label == c)
                    for c in (0, 1)]
    k_eff = min(inner_k, *class_counts)
    if k_eff < 2:
        raise InfeasibleStratification(
            f"cannot tune with class counts {class_counts}")
    assignment = stratified_group_kfold(train_patients, k_eff,
                                        derive_seed(seed, 101))
    scores = []
    for gi, params in enumerate(grid):
        fold_aucs = []
        for f in range(k_eff):
            val_pids = set(assignment.patients_in_fold(f))
            fit_pids = {p.patient_id for p in train_patients} - val_pids
            fit_rows = _rows_of_patients(table, fit_pids)
            val_rows = _rows_of_patients(table, val_pids)
            std = Standardizer().fit(table.X[fit_rows])
            model = make_model(model_family, params,
                               seed=derive_seed(seed, 202, gi, f))
            model.fit(std.transform(table.X[fit_rows]),
                      table.labels[fit_rows])
            probs = model.predict_proba(std.transform(table.X[val_rows]))[:, 1]
            _, labels, patient_probs = _patient_probabilities(
                table, val_rows, probs)
            fold_aucs.append(roc_auc(labels, patient_probs))
        scores.append(float(np.mean(fold_aucs)))
    best = int(np.argmax(scores))  # argmax takes the first maximum
    return TuningResult(params=grid[best], index=best, scores=tuple(scores),
                        inner_k_used=k_eff)


# ---------------------------------------------------------------------------
# outer cross-validation

@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_test_patients: int
    chosen_params: dict
    inner_k_used: int
    confusion: ConfusionCounts
    sensitivity: float
    specificity: float
    precision: float
    f1: float
    roc_auc: float
    degenerate: tuple[str, ...]


@dataclass
class CVReport:
    model_family: str
    k: int
    seed: int
    inner_k: int
    threshold: float
    folds: list[FoldResult]
    metric_means: dict[str, float]
    metric_stds: dict[str, float]
    patient_probs: list[tuple[str, int, float, int]]  # id, label, prob, fold
    roc_curve: list[tuple[int, float, float, float]]  # fold, fpr, tpr, thr
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model_family": self.model_family,
            "k_outer": self.k,
            "k_inner": self.inner_k,
            "seed": self.seed,
            "threshold": self.threshold,
            "config": self.config,
            "folds": [
                {
                    "fold": fr.fold,
                    "n_test_patients": fr.n_test_patients,
                    "chosen_params": _json_safe(fr.chosen_params),
                    "inner_k_used": fr.inner_k_used,
                    "confusion": {"tp": fr.confusion.tp, "tn": fr.confusion.tn,
                                  "fp": fr.confusion.fp, "fn": fr.confusion.fn},
                    "metrics": {"sensitivity": fr.sensitivity,
                                "specificity": fr.specificity,
                                "precision": fr.precision,
                                "f1": fr.f1,
                                "roc_auc": fr.roc_auc},
                    "degenerate_metrics": list(fr.degenerate),
                }
                for fr in self.folds
            ],
            "mean": dict(self.metric_means),
            "std": dict(self.metric_stds),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def _json_safe(params: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in params.items()}


def fit_fold_model(table: FeatureTable, train_pids: set[str],
                   train_patients: list[PatientRecord], model_family: str,
                   grid: list[dict], inner_k: int, seed: int):
    """Standardize on the training split, tune, and fit the final model.

    Only rows of ``train_pids`` are ever touched, so fold leakage is
    structurally impossible here.
    """
    train_rows = _rows_of_patients(table, train_pids)
    standardizer = Standardizer().fit(table.X[train_rows])
    tuning = tune_hyperparameters(train_patients, table, model_family, grid,
                                  inner_k=inner_k, seed=derive_seed(seed, 11))
    model = make_model(model_family, tuning.params,
                       seed=derive_seed(seed, 12))
    model.fit(standardizer.transform(table.X[train_rows]),
              table.labels[train_rows])
    return model, standardizer, tuning


def run_cross_validation(patients: list[PatientRecord], table: FeatureTable,
                         model_family: str, k: int = 4, seed: int = 0, *,
                         inner_k: int = 5, threshold: float = 0.5,
                         grid: list[dict] | None = None,
                         config: dict | None = None) -> CVReport:
    """Outer stratified group k-fold with nested tuning on each train split."""
    if model_family not in DEFAULT_GRIDS:
        raise InvalidArgument(f"unknown model family {model_family!r}")
    if len({p.label for p in patients}) < 2:
        raise DegenerateLabels("need both classes to cross-validate")
    grid = grid if grid is not None else DEFAULT_GRIDS[model_family]
    assignment = stratified_group_kfold(patients, k, derive_seed(seed, 1))

    folds: list[FoldResult] = []
    prob_rows: list[tuple[str, int, float, int]] = []
    curve_rows: list[tuple[int, float, float, float]] = []
    for f in range(k):
        try:
            test_pids = set(assignment.patients_in_fold(f))
            train_pids = {p.patient_id for p in patients} - test_pids
            train_patients = [p for p in patients if p.patient_id in train_pids]
            model, standardizer, tuning = fit_fold_model(
                table, train_pids, train_patients, model_family, grid,
                inner_k, derive_seed(seed, 2, f))
            test_rows = _rows_of_patients(table, test_pids)
            cough_probs = model.predict_proba(
                standardizer.transform(table.X[test_rows]))[:, 1]
            pids, labels, patient_probs = _patient_probabilities(
                table, test_rows, cough_probs)
        except Exception as exc:
            exc.args = (f"fold {f}: {exc}",) + exc.args[1:]
            raise

        confusion = confusion_at_threshold(labels, patient_probs, threshold)
        tm = metrics_from_confusion(confusion)
        auc = roc_auc(labels, patient_probs)
        folds.append(FoldResult(
            fold=f, n_test_patients=len(pids), chosen_params=tuning.params,
            inner_k_used=tuning.inner_k_used, confusion=confusion,
            sensitivity=tm.sensitivity, specificity=tm.specificity,
            precision=tm.precision, f1=tm.f1, roc_auc=auc,
            degenerate=tm.degenerate))
        prob_rows.extend(
            (pid, int(lab), float(prob), f)
            for pid, lab, prob in zip(pids, labels, patient_probs))
        curve_rows.extend((f, fpr, tpr, thr)
                          for fpr, tpr, thr in roc_points(labels, patient_probs))

    columns = {name: np.array([getattr(fr, name) for fr in folds])
               for name in METRIC_NAMES}
    means = {name: float(vals.mean()) for name, vals in columns.items()}
    stds = {name: float(vals.std()) for name, vals in columns.items()}
    return CVReport(model_family=model_family, k=k, seed=seed, inner_k=inner_k,
                    threshold=threshold, folds=folds, metric_means=means,
                    metric_stds=stds, patient_probs=prob_rows,
                    roc_curve=curve_rows, config=dict(config or {}))


# ---------------------------------------------------------------------------
# report writers

def write_cv_report_json(report: CVReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json())


def write_patient_probs_csv(report: CVReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["patient_id", "label", "mean_prob", "fold"])
        for pid, label, prob, fold in report.patient_probs:
            writer.writerow([pid, LABEL_NAMES[label], repr(prob), fold])


def write_roc_points_csv(report: CVReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "fpr", "tpr", "threshold"])
        for fold, fpr, tpr, thr in report.roc_curve:
            writer.writerow([fold, repr(fpr), repr(tpr), repr(thr)])
