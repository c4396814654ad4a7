"""coughtriage: acoustic cough features and classifiers for CXR triage.

Pipeline: decode WAV -> resample to 16 kHz -> 500 ms segment -> 62 per-frame
features -> 496-dim per-cough vector -> LR / SVM / MLP under stratified group
cross-validation with per-patient probability averaging.
"""

from ._version import __version__
from .audio_io import (AudioClip, CoughSegment, decode_wav, load_cough,
                       read_wav_file, resample_polyphase, to_cough_segment)
from .dsp import (FilterbankMatrix, Spectrum, dct2_orthonormal, fft_power,
                  hamming_normalized, mel_filterbank)
from .errors import (BadLabel, ConfigError, CoughTriageError, DecodeError,
                     DegenerateLabels, DuplicateEntry, EmptyAudio,
                     InfeasibleStratification, InvalidArgument, LabelConflict,
                     ManifestEmpty, ManifestError, MissingAudio, RateMismatch,
                     UnsupportedFormat)
from .evaluation import (ConfusionCounts, CVReport, FoldAssignment,
                         PatientRecord, ThresholdMetrics,
                         aggregate_patient_probability, confusion_at_threshold,
                         metrics_from_confusion, patients_from_table, roc_auc,
                         roc_points, run_cross_validation,
                         stratified_group_kfold, tune_hyperparameters)
from .features import (FeatureParams, FrameFeatureMatrix, FrameSeries,
                       extract_frame_features, frame_signal,
                       write_frame_matrix_csv)
from .manifest import Manifest, load_manifest
from .models import (LogisticRegressionClassifier, MLPClassifier,
                     SVMClassifier, Standardizer, load_model, save_model)
from .summarize import (CoughFeaturizer, FeatureTable, FeatureVector,
                        read_feature_csv, summarize_cough,
                        summary_feature_names, write_feature_csv)

__all__ = [name for name in dir() if not name.startswith("_")]
