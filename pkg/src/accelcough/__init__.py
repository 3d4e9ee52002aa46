"""Cough detection from bed-mounted accelerometer recordings.

Pipeline: corpus I/O -> energy-threshold event detection -> fixed-shape
spectral/statistical feature matrices -> minority oversampling -> from-scratch
neural classifiers (CNN, LSTM, reduced residual net) -> leave-one-patient-out
evaluation. A seeded synthetic-corpus generator supplies ground truth for
end-to-end runs, and the ``accelcough`` CLI wires the stages together.
"""

from .balance import SmoteOversampler, balance_training_set, needed_synthetics, smote
from .corpus import (
    COUGH,
    LABELS,
    NON_COUGH,
    CorpusError,
    Dataset,
    Event,
    LabeledInterval,
    SampleSeries,
    dataset_summary,
    label_to_int,
    load_annotations,
    load_corpus,
    load_signal,
    slice_events,
    summary_to_csv,
    summary_to_text,
    write_annotations,
    write_corpus,
    write_signal,
)
from .detect import (
    EnergyDetector,
    detect_events,
    energy_event_scores,
    noise_floor,
    short_time_energy,
)
from .evaluation import (
    FEATURE_GRID,
    CrossvalResult,
    Fold,
    FoldReport,
    GridSearchResult,
    MeanRoc,
    auc,
    auc_score,
    crossval,
    grid_search,
    loocv_folds,
    mean_roc,
    metrics_at_threshold,
    roc_curve,
    run_fold,
    youden_threshold,
)
from .features import (
    ColumnStandardizer,
    FeatureConfig,
    FeatureExtractor,
    FeatureMatrix,
    featurize,
    frame_starts,
    periodogram,
    power_spectrum,
    scalar_features,
)
from .nnet import (
    CnnClassifier,
    LstmClassifier,
    MiniResnetClassifier,
    load_model,
    make_classifier,
    save_model,
)
from .synth import (
    SynthConfig,
    corpus_difficulty,
    energy_baseline_auc,
    generate_corpus,
    generate_dataset,
    write_synth_corpus,
)
from .validation import NumericError

__version__ = "1.0.0"

__all__ = [
    "COUGH",
    "ColumnStandardizer",
    "CnnClassifier",
    "CorpusError",
    "CrossvalResult",
    "Dataset",
    "EnergyDetector",
    "Event",
    "FEATURE_GRID",
    "FeatureConfig",
    "FeatureExtractor",
    "FeatureMatrix",
    "Fold",
    "FoldReport",
    "GridSearchResult",
    "LABELS",
    "LabeledInterval",
    "LstmClassifier",
    "MeanRoc",
    "MiniResnetClassifier",
    "NON_COUGH",
    "NumericError",
    "SampleSeries",
    "SmoteOversampler",
    "SynthConfig",
    "auc",
    "auc_score",
    "balance_training_set",
    "corpus_difficulty",
    "crossval",
    "dataset_summary",
    "detect_events",
    "energy_baseline_auc",
    "energy_event_scores",
    "featurize",
    "frame_starts",
    "generate_corpus",
    "generate_dataset",
    "grid_search",
    "label_to_int",
    "load_annotations",
    "load_corpus",
    "load_model",
    "load_signal",
    "loocv_folds",
    "make_classifier",
    "mean_roc",
    "metrics_at_threshold",
    "needed_synthetics",
    "noise_floor",
    "periodogram",
    "power_spectrum",
    "roc_curve",
    "run_fold",
    "save_model",
    "scalar_features",
    "short_time_energy",
    "slice_events",
    "smote",
    "summary_to_csv",
    "summary_to_text",
    "write_annotations",
    "write_corpus",
    "write_signal",
    "write_synth_corpus",
    "youden_threshold",
]
