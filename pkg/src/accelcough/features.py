"""Fixed-shape spectral/statistical features for variable-length events.

Each event is summarized by a ``(segments, frame_len/2 + 5)`` matrix: one row
per frame position, holding the log power spectrum of the frame followed by
its RMS, kurtosis, mean, and crest factor. Frame positions are spread evenly
over the event (first frame anchored at the start, last at the end) so the
row count is the same for every event; events shorter than one frame are
right-padded with zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Event
from .validation import check_feature_stack, check_finite

N_SCALAR_FEATURES = 4


def _is_power_of_two(n):
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FeatureConfig:
    """Feature-extraction hyperparameters.

    ``frame_len`` must be a power of two (the search grid uses 16/32/64) and
    ``segments`` is the fixed number of frame positions per event (5 or 10 in
    the search grid).
    """

    frame_len: int = 32
    segments: int = 10
    log_epsilon: float = 1e-10

    def __post_init__(self):
        if not _is_power_of_two(self.frame_len):
            raise ValueError(f"frame_len must be a power of two >= 2, got {self.frame_len}")
        if self.segments < 2:
            raise ValueError(f"segments must be >= 2, got {self.segments}")
        if self.log_epsilon <= 0:
            raise ValueError(f"log_epsilon must be > 0, got {self.log_epsilon}")

    @property
    def n_columns(self):
        return self.frame_len // 2 + 1 + N_SCALAR_FEATURES

    @property
    def shape(self):
        return (self.segments, self.n_columns)


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature matrix for one event, with provenance for fold bookkeeping."""

    values: np.ndarray
    patient_id: str
    label: str
    event_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise ValueError(f"feature matrix must be 2d, got shape {values.shape}")
        check_finite(values, "feature matrix")


def frame_starts(event_len, frame_len, segments):
    """Start indices of the ``segments`` frames covering an event.

    Computed on the zero-padded length ``max(event_len, frame_len)``:
    ``start_i = round(i * (N - frame_len) / (segments - 1))``, which anchors
    the first frame at 0 and the last at ``N - frame_len``. Rounding is
    half-up, done in exact integer arithmetic.
    """
    if event_len < 1:
        raise ValueError("event_len must be >= 1")
    n = max(event_len, frame_len)
    span = n - frame_len
    denom = segments - 1
    return np.array(
        [(2 * i * span + denom) // (2 * denom) for i in range(segments)],
        dtype=np.int64,
    )


def periodogram(frame):
    """Single-sided power spectrum, ``|DFT|^2 / frame_len``, bins 0..frame_len/2."""
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError(f"frame must be a non-empty 1d array, got shape {x.shape}")
    spectrum = np.fft.rfft(x)
    return (spectrum.real**2 + spectrum.imag**2) / len(x)


def power_spectrum(frame, log_epsilon=1e-10):
    """Log-compressed periodogram: ``log10(power + log_epsilon)`` per bin."""
    return np.log10(periodogram(frame) + log_epsilon)


def scalar_features(frame):
    """Frame statistics ``(rms, kurtosis, moving_average, crest_factor)``.

    Kurtosis is the raw fourth standardized moment ``m4 / m2**2`` of the
    mean-removed frame (Gaussian ~= 3). Degenerate frames get sentinels
    instead of errors, since zero-padded silent frames legitimately occur:
    constant frames have kurtosis 0 and all-zero frames have crest factor 0.
    """
    x = np.asarray(frame, dtype=np.float64)
    rms = float(np.sqrt(np.mean(x * x)))
    moving_average = float(np.mean(x))

    if np.all(x == x[0]):
        kurtosis = 0.0
    else:
        centered = x - np.mean(x)
        m2 = np.mean(centered**2)
        kurtosis = float(np.mean(centered**4) / m2**2) if m2 > 0 else 0.0

    crest_factor = float(np.max(np.abs(x)) / rms) if rms > 0 else 0.0
    return rms, kurtosis, moving_average, crest_factor


def featurize(event: Event, cfg: FeatureConfig) -> FeatureMatrix:
    """Build the ``(segments, frame_len/2 + 5)`` feature matrix of one event."""
    x = np.asarray(event.samples, dtype=np.float64)
    if len(x) < cfg.frame_len:
        x = np.pad(x, (0, cfg.frame_len - len(x)))
    starts = frame_starts(len(x), cfg.frame_len, cfg.segments)

    rows = np.empty(cfg.shape, dtype=np.float64)
    n_bins = cfg.frame_len // 2 + 1
    for i, s in enumerate(starts):
        frame = x[s : s + cfg.frame_len]
        rows[i, :n_bins] = power_spectrum(frame, cfg.log_epsilon)
        rows[i, n_bins:] = scalar_features(frame)

    return FeatureMatrix(rows, event.patient_id, event.label, event.event_id)


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Transformer from events to a stacked feature array of shape (n, segments, cols).

    Stateless; ``fit`` is a no-op kept for pipeline compatibility. Featurizing
    is pure per event, so callers may process events concurrently.
    """

    def __init__(self, frame_len=32, segments=10, log_epsilon=1e-10):
        self.frame_len = frame_len
        self.segments = segments
        self.log_epsilon = log_epsilon

    def _config(self):
        return FeatureConfig(self.frame_len, self.segments, self.log_epsilon)

    def fit(self, events, y=None):
        self._config()
        return self

    def transform(self, events):
        cfg = self._config()
        if len(events) == 0:
            return np.empty((0, *cfg.shape), dtype=np.float64)
        return np.stack([featurize(e, cfg).values for e in events])


class ColumnStandardizer(BaseEstimator, TransformerMixin):
    """Per-column standardization fitted on training feature matrices only.

    Columns are the ``frame_len/2 + 5`` feature columns; statistics pool every
    row of every training matrix. Columns with std below 1e-12 keep scale 1 so
    constant features pass through centered but unscaled.
    """

    def __init__(self):
        pass

    def fit(self, X, y=None):
        stack = check_feature_stack(X)
        if stack.shape[0] == 0:
            raise ValueError("cannot fit standardizer on an empty training set")
        flat = stack.reshape(-1, stack.shape[-1])
        self.mean_ = flat.mean(axis=0)
        std = flat.std(axis=0)
        self.scale_ = np.where(std < 1e-12, 1.0, std)
        return self

    def transform(self, X):
        if not hasattr(self, "mean_"):
            raise ValueError("standardizer is not fitted")
        stack = np.asarray(X, dtype=np.float64)
        return (stack - self.mean_) / self.scale_


def fit_standardizer(train_matrices) -> ColumnStandardizer:
    """Fit a ColumnStandardizer on a sequence of (rows, cols) training matrices."""
    return ColumnStandardizer().fit(np.stack([np.asarray(m) for m in train_matrices]))


def apply_standardizer(matrix, standardizer: ColumnStandardizer):
    return standardizer.transform(np.asarray(matrix, dtype=np.float64))
