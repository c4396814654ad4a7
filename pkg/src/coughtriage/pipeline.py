"""Batch orchestration: manifest -> features -> cross-validated reports."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ._version import __version__
from .audio_io import load_cough
from .config import RunConfig
from .errors import DecodeError
from .evaluation import (patients_from_table, run_cross_validation,
                         write_cv_report_json, write_patient_probs_csv,
                         write_roc_points_csv)
from .features import FeatureParams, extract_frame_features
from .manifest import Manifest, load_manifest
from .summarize import (FeatureTable, read_feature_csv, summarize_cough,
                        summary_feature_names, write_feature_csv)

log = logging.getLogger("coughtriage")


def _extract_row(args):
    """Worker for one manifest row; returns (cough_id, vector|None, error|None)."""
    cough_id, patient_id, path, duration_ms, params = args
    try:
        segment = load_cough(path, duration_ms=duration_ms, source_id=cough_id)
        vec = summarize_cough(extract_frame_features(segment, params),
                              cough_id=cough_id, patient_id=patient_id)
        return cough_id, vec.values, None
    except DecodeError as exc:
        return cough_id, None, f"{type(exc).__name__}: {exc}"


def extract_feature_table(manifest: Manifest, params: FeatureParams,
                          duration_ms: int = 500, jobs: int = 1,
                          abort_on_decode_error: bool = False
                          ) -> tuple[FeatureTable, list[dict]]:
    """Extract one summary vector per manifest row, in manifest order.

    Decode failures are logged, skipped, and reported back (never silently
    dropped); ``abort_on_decode_error`` turns the first failure into a raise.
    The result is independent of ``jobs``.
    """
    tasks = [(row.cough_id, row.patient_id, str(row.cough_path), duration_ms,
              params) for row in manifest.rows]
    if jobs > 1:
        chunk = max(1, len(tasks) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_row, tasks, chunksize=chunk))
    else:
        results = [_extract_row(t) for t in tasks]

    cough_ids, patient_ids, labels, vectors = [], [], [], []
    failures = []
    for row, (cough_id, values, error) in zip(manifest.rows, results):
        if error is not None:
            log.warning("skipping %s: %s", cough_id, error)
            failures.append({"cough_id": cough_id, "error": error})
            if abort_on_decode_error:
                raise DecodeError(f"{cough_id}: {error}")
            continue
        cough_ids.append(cough_id)
        patient_ids.append(row.patient_id)
        labels.append(row.label)
        vectors.append(values)
    if not vectors:
        raise DecodeError("no manifest row could be decoded")
    table = FeatureTable(cough_ids=cough_ids, patient_ids=patient_ids,
                         labels=np.array(labels, dtype=int),
                         X=np.stack(vectors),
                         feature_names=summary_feature_names(params))
    return table, failures


def _load_or_extract(config: RunConfig, summary: dict) -> FeatureTable:
    if config.features_csv:
        log.info("reusing features from %s", config.features_csv)
        table = read_feature_csv(config.features_csv)
        summary["n_decode_failures"] = 0
        summary["decode_failures"] = []
        return table
    if not config.manifest:
        from .errors import ConfigError
        raise ConfigError("either manifest or features_csv must be set")
    manifest = load_manifest(config.manifest)
    summary["n_manifest_rows"] = len(manifest)
    t0 = time.perf_counter()
    table, failures = extract_feature_table(
        manifest, config.feature_params(), duration_ms=config.duration_ms,
        jobs=config.jobs, abort_on_decode_error=config.abort_on_decode_error)
    summary["timings_s"]["extract"] = time.perf_counter() - t0
    summary["n_decode_failures"] = len(failures)
    summary["decode_failures"] = failures
    return table


def _new_summary(config: RunConfig) -> dict:
    return {
        "status": "incomplete",
        "version": __version__,
        "seed": config.seed,
        "config": config.to_dict(),
        "timings_s": {},
    }


def _write_summary(out_dir: Path, summary: dict) -> None:
    (out_dir / "run_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1) + "\n")


def extract_only(config: RunConfig) -> Path:
    """Run audio -> features and write features.csv; no model training."""
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = _new_summary(config)
    try:
        table = _load_or_extract(config, summary)
        features_path = out_dir / "features.csv"
        write_feature_csv(table, features_path)
        summary["n_coughs"] = len(table)
        summary["status"] = "ok"
        return features_path
    except Exception as exc:
        summary["status"] = "failed"
        summary["error"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        _write_summary(out_dir, summary)


def run_pipeline(config: RunConfig) -> dict:
    """Extraction plus cross-validation for every configured model family.

    Writes features.csv, per-family cv_report.json / roc_points.csv /
    patient_probs.csv, and run_summary.json. Raises on failure after marking
    the summary as failed, so partial outputs are never mistaken for results.
    """
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = _new_summary(config)
    try:
        table = _load_or_extract(config, summary)
        write_feature_csv(table, out_dir / "features.csv")
        summary["n_coughs"] = len(table)
        patients = patients_from_table(table)
        summary["n_patients"] = len(patients)
        config_echo = config.to_dict()
        for family in config.models:
            t0 = time.perf_counter()
            report = run_cross_validation(
                patients, table, family, k=config.k_outer, seed=config.seed,
                inner_k=config.k_inner, threshold=config.threshold,
                config=config_echo)
            family_dir = out_dir / family
            family_dir.mkdir(exist_ok=True)
            write_cv_report_json(report, family_dir / "cv_report.json")
            write_roc_points_csv(report, family_dir / "roc_points.csv")
            write_patient_probs_csv(report, family_dir / "patient_probs.csv")
            summary["timings_s"][f"cv_{family}"] = time.perf_counter() - t0
            log.info("%s: mean ROC-AUC %.3f", family,
                     report.metric_means["roc_auc"])
        summary["status"] = "ok"
        return summary
    except Exception as exc:
        summary["status"] = "failed"
        summary["error"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        _write_summary(out_dir, summary)
