"""SMOTE oversampling of the minority class for training folds.

Synthetic vectors are drawn on segments between a minority point and one of
its k nearest minority neighbours (Euclidean): ``x_new = x + lam * (nn - x)``
with ``lam ~ U[0, 1]``. Only training splits are ever balanced; the interface
receives the train split alone, so test data cannot leak in.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .validation import check_both_classes


def _nearest_neighbor_indices(points, k, chunk=512):
    """Indices of the k nearest neighbours (self excluded) for each row.

    Brute-force Euclidean, chunked so the pairwise block stays small even for
    minority sets in the thousands.
    """
    n = len(points)
    sq = np.sum(points**2, axis=1)
    out = np.empty((n, k), dtype=np.int64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block = points[lo:hi]
        d2 = sq[lo:hi, None] - 2.0 * block @ points.T + sq[None, :]
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[lo:hi] = order[:, :k]
    return out


def smote(minority, k_neighbors, needed, rng):
    """Generate ``needed`` synthetic vectors from the minority set.

    Parameters
    ----------
    minority : array of shape (n_minority, dim)
        Real minority vectors; must share one dimension.
    k_neighbors : int
        Neighbourhood size; must be smaller than the minority count.
    needed : int
        Number of synthetic vectors to produce.
    rng : numpy.random.Generator
        Source of randomness; a fixed seed gives bit-identical output.
    """
    X = np.asarray(minority, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"minority vectors must form a 2d array, got shape {X.shape}")
    if k_neighbors < 1:
        raise ValueError(f"k_neighbors must be >= 1, got {k_neighbors}")
    if len(X) <= k_neighbors:
        raise ValueError(
            f"minority count {len(X)} must exceed k_neighbors {k_neighbors}"
        )
    if needed < 0:
        raise ValueError(f"needed must be >= 0, got {needed}")
    if needed == 0:
        return np.empty((0, X.shape[1]), dtype=np.float64)

    neighbors = _nearest_neighbor_indices(X, k_neighbors)
    base = rng.integers(0, len(X), size=needed)
    pick = rng.integers(0, k_neighbors, size=needed)
    lam = rng.uniform(0.0, 1.0, size=needed)
    anchor = X[base]
    partner = X[neighbors[base, pick]]
    return anchor + lam[:, None] * (partner - anchor)


def needed_synthetics(minority_count, majority_count, target_ratio):
    """Synthetic count required to reach ``minority/majority == target_ratio``."""
    if not 0.0 < target_ratio <= 1.0:
        raise ValueError(f"target_ratio must be in (0, 1], got {target_ratio}")
    return max(0, round(target_ratio * majority_count) - minority_count)


def balance_training_set(X, y, k_neighbors=5, target_ratio=1.0, rng=None):
    """Append SMOTE synthetics until the class ratio reaches ``target_ratio``.

    ``X`` may be a stack of feature matrices (n, rows, cols) or flat vectors
    (n, dim); matrices are flattened for interpolation and restored afterwards.
    Originals are preserved verbatim, synthetics appended with the minority
    label. Returns ``(X_balanced, y_balanced)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = _check_balanceable(y)
    if len(X) != len(y):
        raise ValueError(f"got {len(X)} feature rows but {len(y)} labels")
    if rng is None:
        rng = np.random.default_rng(0)

    counts = np.bincount(y, minlength=2)
    minority_label = int(np.argmin(counts))
    majority_label = 1 - minority_label
    needed = needed_synthetics(counts[minority_label], counts[majority_label], target_ratio)
    if needed == 0:
        return X.copy(), y.copy()

    event_shape = X.shape[1:]
    flat = X.reshape(len(X), -1)
    synthetic = smote(flat[y == minority_label], k_neighbors, needed, rng)
    X_out = np.concatenate([flat, synthetic]).reshape(len(X) + needed, *event_shape)
    y_out = np.concatenate([y, np.full(needed, minority_label, dtype=y.dtype)])
    return X_out, y_out


def _check_balanceable(y):
    try:
        return check_both_classes(y)
    except ValueError as exc:
        if "both classes" in str(exc):
            raise ValueError("cannot balance single-class data") from None
        raise


class SmoteOversampler(BaseEstimator):
    """Resampler with the canonical SMOTE defaults (k=5, full parity).

    Parameters
    ----------
    k_neighbors : int
        Number of nearest minority neighbours to interpolate toward.
    target_ratio : float
        Desired minority/majority count ratio after balancing, in (0, 1].
    random_state : int
        Seed; identical seeds give bit-identical synthetic sets.
    """

    def __init__(self, k_neighbors=5, target_ratio=1.0, random_state=0):
        self.k_neighbors = k_neighbors
        self.target_ratio = target_ratio
        self.random_state = random_state

    def fit_resample(self, X, y):
        rng = np.random.default_rng(self.random_state)
        return balance_training_set(
            X, y, k_neighbors=self.k_neighbors, target_ratio=self.target_ratio, rng=rng
        )
