"""Patient/cough manifest: the CSV that ties recordings to CXR labels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import (BadLabel, DuplicateEntry, LabelConflict, ManifestEmpty,
                     ManifestError, MissingAudio)
from .summarize import LABEL_TOKENS

MANIFEST_HEADER = ["patient_id", "cough_path", "label"]


@dataclass(frozen=True)
class ManifestRow:
    patient_id: str
    cough_path: Path  # resolved against the manifest's directory
    label: int        # abnormal == 1
    cough_id: str     # the path string as written in the manifest


@dataclass(frozen=True)
class Manifest:
    path: Path
    rows: tuple[ManifestRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def label_of_patient(self) -> dict[str, int]:
        return {r.patient_id: r.label for r in self.rows}


def load_manifest(path: str | Path) -> Manifest:
    """Load and validate a ``patient_id,cough_path,label`` CSV.

    Relative cough paths are resolved against the manifest's directory. Every
    path must exist, labels must be ``normal``/``abnormal``, one label per
    patient, and no repeated (patient, path) rows.
    """
    path = Path(path)
    base = path.parent
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestEmpty(f"{path} is empty") from None
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise ManifestError(
                f"bad manifest header {header!r}, expected {MANIFEST_HEADER}")
        rows = []
        seen: set[tuple[str, str]] = set()
        label_of: dict[str, int] = {}
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != 3:
                raise ManifestError(
                    f"{path}:{lineno}: expected 3 columns, got {len(raw)}")
            patient_id, cough_path, label_token = (c.strip() for c in raw)
            if label_token not in LABEL_TOKENS:
                raise BadLabel(
                    f"{path}:{lineno}: unknown label {label_token!r}")
            label = LABEL_TOKENS[label_token]
            if patient_id in label_of and label_of[patient_id] != label:
                raise LabelConflict(patient_id)
            label_of[patient_id] = label
            key = (patient_id, cough_path)
            if key in seen:
                raise DuplicateEntry(
                    f"{path}:{lineno}: duplicate row {key}")
            seen.add(key)
            resolved = (base / cough_path).resolve() \
                if not Path(cough_path).is_absolute() else Path(cough_path)
            if not resolved.is_file():
                raise MissingAudio(str(resolved))
            rows.append(ManifestRow(patient_id=patient_id, cough_path=resolved,
                                    label=label, cough_id=cough_path))
    if not rows:
        raise ManifestEmpty(f"{path} holds no data rows")
    return Manifest(path=path, rows=tuple(rows))
