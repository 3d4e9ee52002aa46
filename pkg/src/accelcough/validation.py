"""Input validation helpers shared by the estimators and pipeline functions."""

from __future__ import annotations

import numpy as np


class NumericError(RuntimeError):
    """Raised when a computation produces or receives non-finite values."""


def as_float_array(x, name="array"):
    """Coerce to a float64 ndarray, rejecting non-numeric input."""
    return np.asarray(x, dtype=np.float64)


def check_finite(arr, name="array", context=""):
    """Raise NumericError if any entry is NaN or infinite."""
    if not np.all(np.isfinite(arr)):
        where = f" during {context}" if context else ""
        raise NumericError(f"non-finite values in {name}{where}")
    return arr


def check_feature_stack(X, name="X"):
    """Validate a stack of feature matrices, shape (n_events, n_rows, n_cols).

    Accepts a single matrix (2d) and promotes it to a stack of one.
    Returns a float64 array of shape (n_events, n_rows, n_cols).
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise ValueError(f"{name} must have shape (n_events, n_rows, n_cols), got {arr.shape}")
    return arr


def check_binary_labels(y, name="y"):
    """Validate labels as a 1d int array with values in {0, 1}."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1d, got shape {arr.shape}")
    arr = arr.astype(np.int64)
    bad = set(np.unique(arr)) - {0, 1}
    if bad:
        raise ValueError(f"{name} must contain only 0/1 labels, got extra values {sorted(bad)}")
    return arr


def check_both_classes(y, name="labels"):
    """Require that both classes 0 and 1 are present."""
    arr = check_binary_labels(y, name)
    if len(np.unique(arr)) < 2:
        raise ValueError(f"{name} must contain both classes")
    return arr


def check_positive(value, name):
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_range(value, name, allowed):
    """Validate a hyperparameter against its allowed grid values."""
    if value not in allowed:
        raise ValueError(f"{name} must be one of {sorted(allowed)}, got {value}")
    return value
