"""Typed exceptions used across the package."""


class CoughTriageError(Exception):
    """Base class for all package errors."""


class InvalidArgument(CoughTriageError, ValueError):
    """An argument violates an operation's precondition."""


class DecodeError(CoughTriageError):
    """Malformed or unreadable audio container."""


class UnsupportedFormat(DecodeError):
    """Well-formed container but a codec we do not handle."""


class EmptyAudio(DecodeError):
    """Audio container with a zero-length data payload."""


class RateMismatch(CoughTriageError, ValueError):
    """Clip is not at the sample rate an operation requires."""


class DegenerateLabels(CoughTriageError, ValueError):
    """Training set does not contain both classes."""


class InfeasibleStratification(CoughTriageError, ValueError):
    """Too few patients of some class to build stratified folds."""


class UndefinedAUC(CoughTriageError, ValueError):
    """ROC-AUC requested for a single-class label set."""


class ManifestError(CoughTriageError):
    """Base class for manifest loading failures."""


class LabelConflict(ManifestError):
    """One patient appears with more than one label."""

    def __init__(self, patient_id: str):
        super().__init__(f"conflicting labels for patient {patient_id!r}")
        self.patient_id = patient_id


class MissingAudio(ManifestError):
    """A manifest row points at a file that does not exist."""

    def __init__(self, path: str):
        super().__init__(f"audio file not found: {path}")
        self.path = path


class BadLabel(ManifestError):
    """Unknown label token in a manifest row."""


class DuplicateEntry(ManifestError):
    """The same (patient, path) row appears twice."""


class ManifestEmpty(ManifestError):
    """Manifest has a header but no rows."""


class ConfigError(CoughTriageError):
    """Bad run configuration (unknown key, unparsable value, ...)."""
