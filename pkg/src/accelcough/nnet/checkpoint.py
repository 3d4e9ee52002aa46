"""Save/load trained classifiers as self-describing JSON checkpoints.

The file carries everything needed to rebuild the exact estimator: the
classifier class and its hyperparameters, the feature configuration and
per-column standardizer used in front of it, and the flat parameter vector.
Floats are written with ``repr`` semantics (the json module's default), which
round-trips IEEE doubles bit-exactly.
"""

from __future__ import annotations

import json

import numpy as np

from ..features import ColumnStandardizer, FeatureConfig
from .models import CLASSIFIER_KINDS

CHECKPOINT_FORMAT = "accelcough.model/1"

_BY_CLASS_NAME = {cls.__name__: cls for cls in CLASSIFIER_KINDS.values()}


def save_model(path, model, feature_config=None, standardizer=None):
    """Write a fitted classifier (plus its preprocessing state) to ``path``."""
    if not hasattr(model, "net_"):
        raise ValueError("cannot checkpoint an unfitted classifier")
    if type(model).__name__ not in _BY_CLASS_NAME:
        raise ValueError(f"unknown classifier class {type(model).__name__!r}")
    doc = {
        "format": CHECKPOINT_FORMAT,
        "classifier": type(model).__name__,
        "hyperparameters": model.get_params(),
        "input_shape": [int(model.input_rows_), int(model.input_cols_)],
        "feature_config": None
        if feature_config is None
        else {
            "frame_len": feature_config.frame_len,
            "segments": feature_config.segments,
            "log_epsilon": feature_config.log_epsilon,
        },
        "standardizer": None
        if standardizer is None
        else {
            "mean": np.asarray(standardizer.mean_).tolist(),
            "scale": np.asarray(standardizer.scale_).tolist(),
        },
        "parameters": model.net_.parameter_vector().tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Rebuild (model, feature_config, standardizer) from a checkpoint file.

    The returned model predicts bit-identically to the one that was saved.
    feature_config/standardizer are None when they were not stored.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    cls = _BY_CLASS_NAME.get(doc["classifier"])
    if cls is None:
        raise ValueError(f"{path}: unknown classifier class {doc['classifier']!r}")
    model = cls(**doc["hyperparameters"])
    rows, cols = doc["input_shape"]
    model.input_rows_, model.input_cols_ = rows, cols
    model.classes_ = np.array([0, 1])
    model.net_ = model.build_network(rows, cols)
    model.net_.load_parameter_vector(np.asarray(doc["parameters"], dtype=np.float64))

    feature_config = None
    if doc.get("feature_config") is not None:
        feature_config = FeatureConfig(**doc["feature_config"])
    standardizer = None
    if doc.get("standardizer") is not None:
        standardizer = ColumnStandardizer()
        standardizer.mean_ = np.asarray(doc["standardizer"]["mean"], dtype=np.float64)
        standardizer.scale_ = np.asarray(doc["standardizer"]["scale"], dtype=np.float64)
    return model, feature_config, standardizer
