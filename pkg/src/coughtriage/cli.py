"""Command-line front door: ``extract``, ``cv``, and ``report`` subcommands."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .config import OUTPUT_DIR_ENV, RunConfig, load_config
from .errors import ConfigError, CoughTriageError

log = logging.getLogger("coughtriage")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--manifest", help="patient_id,cough_path,label CSV")
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--seed", type=int, help="root random seed")
    sub.add_argument("--jobs", type=int, help="worker processes for extraction")
    sub.add_argument("--output-dir", help="where artifacts are written")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coughtriage",
        description="Cough-sound features and cross-validated CXR triage models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser(
        "extract", help="decode audio and write features.csv only")
    _add_common_flags(p_extract)

    p_cv = sub.add_parser(
        "cv", help="extract features and run cross-validation per model family")
    _add_common_flags(p_cv)
    p_cv.add_argument("--models",
                      help="comma-separated subset of lr,svm,mlp")

    p_report = sub.add_parser(
        "report", help="print a metrics table from cv_report.json files")
    p_report.add_argument("--output-dir", default="out",
                          help="directory holding <family>/cv_report.json")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for flag in ("manifest", "seed", "jobs", "output_dir"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    if getattr(args, "models", None):
        overrides["models"] = tuple(
            tok.strip() for tok in args.models.split(",") if tok.strip())
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:  # env var wins, and only for the output directory
        overrides["output_dir"] = env_out
    return dataclasses.replace(config, **overrides).validate()


def _cmd_report(output_dir: str) -> int:
    reports = {}
    for report_path in sorted(Path(output_dir).glob("*/cv_report.json")):
        doc = json.loads(report_path.read_text())
        reports[doc["model_family"]] = doc
    if not reports:
        log.error("no cv_report.json found under %s", output_dir)
        return EXIT_RUNTIME
    families = list(reports)
    print(f"{'metric':<14}" + "".join(f"{fam:<16}" for fam in families))
    for metric in ("sensitivity", "specificity", "precision", "f1", "roc_auc"):
        cells = []
        for fam in families:
            mean = reports[fam]["mean"][metric]
            std = reports[fam]["std"][metric]
            cells.append(f"{mean:.2f} ({std:.2f})")
        print(f"{metric:<14}" + "".join(f"{c:<16}" for c in cells))
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "report":
            return _cmd_report(args.output_dir)
        config = _resolve_config(args)
        # imported here so `report` stays fast and dependency-light
        from .pipeline import extract_only, run_pipeline
        if args.command == "extract":
            path = extract_only(config)
            log.info("wrote %s", path)
        else:
            summary = run_pipeline(config)
            log.info("run complete: %s", Path(config.output_dir) / "run_summary.json")
            for family in config.models:
                log.info("artifacts for %s in %s", family,
                         Path(config.output_dir) / family)
        return EXIT_OK
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_USAGE
    except CoughTriageError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
