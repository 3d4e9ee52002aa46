"""Leave-one-patient-out evaluation: ROC/AUC, threshold metrics, cross
validation, and the feature/classifier grid search.

Scores follow the convention p(cough); an event is called a cough when its
score is >= the threshold. Per-fold metrics are averaged across folds (mean
AUC is the mean of fold AUCs, not the area under the mean curve), and the mean
ROC is built by vertical averaging on a fixed 101-point FPR grid.

Everything here is deterministic for a fixed seed and independent of the
worker count: each (grid point, fold) task derives its own seed from
``SeedSequence([seed, point_index, fold_index])`` and results are merged by
index, never by arrival order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .balance import balance_training_set
from .features import ColumnStandardizer, FeatureConfig, FeatureExtractor
from .nnet import make_classifier
from .validation import (
    as_float_array,
    check_binary_labels,
    check_both_classes,
    check_feature_stack,
    check_finite,
)

FPR_GRID = np.linspace(0.0, 1.0, 101)

# The supported search space: every grid point must come from these sets.
FEATURE_GRID = ((16, 5), (16, 10), (32, 5), (32, 10), (64, 5), (64, 10))
BATCH_SIZES = (64, 128, 256)
EPOCH_CHOICES = tuple(range(10, 200, 20))
CONV_FILTER_CHOICES = (24, 48, 96)
KERNEL_CHOICES = (2, 3)
DROPOUT_CHOICES = (0.1, 0.3, 0.5)
DENSE_SIZE_CHOICES = (16, 32)
LSTM_UNIT_CHOICES = (64, 128, 256)
LSTM_LR_CHOICES = (1e-2, 1e-3, 1e-4)


# ---------------------------------------------------------------------------
# ROC / AUC / threshold metrics


def roc_curve(scores, labels):
    """ROC sweep over all distinct scores plus +/-inf sentinels.

    Returns (fpr, tpr, thresholds), aligned arrays; equal scores are grouped
    into a single step so ties never create intermediate points. The curve
    starts at (0, 0) with threshold +inf and ends at (1, 1) with -inf.
    """
    scores = as_float_array(scores, "scores")
    check_finite(scores, "scores", "roc_curve")
    labels = check_both_classes(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"scores and labels must align, got {scores.shape} vs {labels.shape}")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos

    # index of the last element of each tie group
    ends = np.flatnonzero(np.diff(s) != 0.0)
    ends = np.concatenate([ends, [len(s) - 1]])
    tp = np.cumsum(y)[ends]
    fp = np.cumsum(1 - y)[ends]

    fpr = np.concatenate([[0.0], fp / n_neg, [1.0]])
    tpr = np.concatenate([[0.0], tp / n_pos, [1.0]])
    thresholds = np.concatenate([[np.inf], s[ends], [-np.inf]])
    return fpr, tpr, thresholds


def auc(fpr, tpr):
    """Trapezoidal area under an ROC polyline."""
    return float(np.trapezoid(np.asarray(tpr, dtype=np.float64), np.asarray(fpr, dtype=np.float64)))


def auc_score(scores, labels):
    """Convenience: trapezoidal AUC straight from scores and labels."""
    fpr, tpr, _ = roc_curve(scores, labels)
    return auc(fpr, tpr)


def metrics_at_threshold(scores, labels, threshold):
    """(sensitivity, specificity, accuracy) calling cough when score >= threshold."""
    scores = as_float_array(scores, "scores")
    labels = check_both_classes(labels)
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    tn = int(np.sum(~pred & ~pos))
    n_pos = int(np.sum(pos))
    n_neg = len(labels) - n_pos
    sensitivity = tp / n_pos
    specificity = tn / n_neg
    accuracy = (tp + tn) / len(labels)
    return sensitivity, specificity, accuracy


def youden_threshold(scores, labels):
    """Threshold maximizing sensitivity + specificity - 1 (first maximum wins)."""
    fpr, tpr, thresholds = roc_curve(scores, labels)
    return float(thresholds[np.argmax(tpr - fpr)])


# ---------------------------------------------------------------------------
# Folds


@dataclass(frozen=True)
class Fold:
    """One leave-one-patient-out split, referencing events by id."""

    test_patient: str
    train_events: tuple
    test_events: tuple


def loocv_folds(dataset):
    """One fold per patient; test sets partition the corpus exactly."""
    patients = dataset.patients
    if len(patients) < 2:
        raise ValueError(f"leave-one-patient-out needs at least 2 patients, got {len(patients)}")
    folds = []
    for patient in patients:
        train, test = [], []
        for event in dataset.events:
            (test if event.patient_id == patient else train).append(event.event_id)
        folds.append(Fold(patient, tuple(train), tuple(test)))
    return folds


def fold_indices(dataset, fold):
    """Map a fold's event ids to positions in dataset.events."""
    position = {}
    for i, event in enumerate(dataset.events):
        if event.event_id in position:
            raise ValueError(f"duplicate event id {event.event_id!r}")
        position[event.event_id] = i
    train = np.array([position[eid] for eid in fold.train_events], dtype=np.intp)
    test = np.array([position[eid] for eid in fold.test_events], dtype=np.intp)
    return train, test


# ---------------------------------------------------------------------------
# Single fold: train on one split, score the held-out patient


@dataclass(frozen=True)
class FoldReport:
    """Held-out metrics for one fold.

    roc_points is a (k, 2) array of (fpr, tpr) from (0,0) to (1,1); the
    report metrics are taken at ``threshold``, and the Youden-optimal
    operating point (max sens + spec - 1) is carried alongside since a fixed
    0.5 cut is rarely where a screening system would run.
    """

    test_patient: str
    threshold: float
    roc_points: np.ndarray
    auc: float
    sensitivity: float
    specificity: float
    accuracy: float
    youden_threshold: float
    youden_sensitivity: float
    youden_specificity: float
    youden_accuracy: float


def _derived_seeds(seed):
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(seed)
    balance_ss, model_ss = root.spawn(2)
    return np.random.default_rng(balance_ss), int(model_ss.generate_state(1, np.uint64)[0])


def run_fold(X_train, y_train, X_test, y_test, *, classifier_kind="cnn",
             classifier_params=None, threshold=0.5, k_neighbors=5, target_ratio=1.0,
             balance=True, seed=0, test_patient="", fit_only=False):
    """Standardize, oversample, and train on the training split, then score the test split.

    The test arrays contribute nothing to standardizer fitting, oversampling,
    or training; with ``fit_only=True`` they are never read at all and the
    trained ``(model, standardizer)`` pair is returned instead of a report.
    ``seed`` may be an int or a ``SeedSequence``.
    """
    X_train = check_feature_stack(X_train, "X_train")
    y_train = check_binary_labels(y_train, "y_train")
    balance_rng, model_seed = _derived_seeds(seed)

    standardizer = ColumnStandardizer().fit(X_train)
    if balance:
        X_bal, y_bal = balance_training_set(
            standardizer.transform(X_train), y_train,
            k_neighbors=k_neighbors, target_ratio=target_ratio, rng=balance_rng,
        )
    else:
        X_bal, y_bal = standardizer.transform(X_train), y_train
    params = dict(classifier_params or {})
    params["random_state"] = model_seed
    model = make_classifier(classifier_kind, **params)
    model.fit(X_bal, y_bal)
    if fit_only:
        return model, standardizer

    y_test = check_both_classes(y_test, "y_test")
    scores = model.predict_proba(standardizer.transform(check_feature_stack(X_test, "X_test")))[:, 1]
    fpr, tpr, thresholds = roc_curve(scores, y_test)
    sens, spec, acc = metrics_at_threshold(scores, y_test, threshold)
    y_thr = float(thresholds[np.argmax(tpr - fpr)])
    y_sens, y_spec, y_acc = metrics_at_threshold(scores, y_test, y_thr)
    return FoldReport(
        test_patient=test_patient,
        threshold=float(threshold),
        roc_points=np.column_stack([fpr, tpr]),
        auc=auc(fpr, tpr),
        sensitivity=sens,
        specificity=spec,
        accuracy=acc,
        youden_threshold=y_thr,
        youden_sensitivity=y_sens,
        youden_specificity=y_spec,
        youden_accuracy=y_acc,
    )


# ---------------------------------------------------------------------------
# Mean ROC and cross-validation


@dataclass(frozen=True)
class MeanRoc:
    """Vertically averaged ROC on the fixed FPR grid, plus the mean of fold AUCs."""

    fpr: np.ndarray
    tpr: np.ndarray
    mean_auc: float


def _interp_on_grid(roc_points):
    fpr = roc_points[:, 0]
    tpr = roc_points[:, 1]
    # ties in fpr: keep the last (highest-tpr) point of each vertical segment
    keep = np.concatenate([fpr[1:] != fpr[:-1], [True]])
    return np.interp(FPR_GRID, fpr[keep], tpr[keep])


def mean_roc(fold_reports):
    """Average fold curves vertically; mean AUC is the mean of per-fold AUCs."""
    if not fold_reports:
        raise ValueError("mean_roc needs at least one fold report")
    curves = np.stack([_interp_on_grid(r.roc_points) for r in fold_reports])
    return MeanRoc(
        fpr=FPR_GRID.copy(),
        tpr=curves.mean(axis=0),
        mean_auc=float(np.mean([r.auc for r in fold_reports])),
    )


@dataclass(frozen=True)
class CrossvalResult:
    """All folds of one (feature config, classifier spec) evaluation."""

    frame_len: int
    segments: int
    classifier_kind: str
    classifier_params: dict
    threshold: float
    fold_reports: tuple
    mean_curve: MeanRoc

    @property
    def mean_auc(self):
        return self.mean_curve.mean_auc

    def _mean(self, attr):
        return float(np.mean([getattr(r, attr) for r in self.fold_reports]))

    @property
    def mean_sensitivity(self):
        return self._mean("sensitivity")

    @property
    def mean_specificity(self):
        return self._mean("specificity")

    @property
    def mean_accuracy(self):
        return self._mean("accuracy")

    @property
    def mean_youden_threshold(self):
        return self._mean("youden_threshold")

    @property
    def mean_youden_sensitivity(self):
        return self._mean("youden_sensitivity")

    @property
    def mean_youden_specificity(self):
        return self._mean("youden_specificity")

    @property
    def mean_youden_accuracy(self):
        return self._mean("youden_accuracy")


def _run_fold_task(payload):
    (fold_index, X_train, y_train, X_test, y_test, kind, params, threshold,
     k_neighbors, target_ratio, seed_seq, test_patient) = payload
    report = run_fold(
        X_train, y_train, X_test, y_test,
        classifier_kind=kind, classifier_params=params, threshold=threshold,
        k_neighbors=k_neighbors, target_ratio=target_ratio, seed=seed_seq,
        test_patient=test_patient,
    )
    return fold_index, report


def _run_tasks(payloads, n_jobs):
    if n_jobs == 1:
        results = [_run_fold_task(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_fold_task, payloads))
    # merge by task index, not completion order
    return [report for _, report in sorted(results, key=lambda item: item[0])]


def _fold_payloads(dataset, X, y, folds, *, kind, params, threshold, k_neighbors,
                   target_ratio, seed, point_index):
    payloads = []
    for fold_index, fold in enumerate(folds):
        train_idx, test_idx = fold_indices(dataset, fold)
        payloads.append((
            fold_index,
            X[train_idx], y[train_idx], X[test_idx], y[test_idx],
            kind, params, threshold, k_neighbors, target_ratio,
            np.random.SeedSequence([seed, point_index, fold_index]),
            fold.test_patient,
        ))
    return payloads


def crossval(dataset, *, frame_len=32, segments=10, classifier_kind="cnn",
             classifier_params=None, threshold=0.5, k_neighbors=5, target_ratio=1.0,
             seed=0, n_jobs=1, point_index=0) -> CrossvalResult:
    """Full leave-one-patient-out evaluation of one configuration."""
    cfg = FeatureConfig(frame_len=frame_len, segments=segments)
    X = FeatureExtractor(frame_len=cfg.frame_len, segments=cfg.segments).transform(dataset.events)
    y = dataset.labels()
    folds = loocv_folds(dataset)
    payloads = _fold_payloads(
        dataset, X, y, folds, kind=classifier_kind, params=classifier_params,
        threshold=threshold, k_neighbors=k_neighbors, target_ratio=target_ratio,
        seed=seed, point_index=point_index,
    )
    reports = _run_tasks(payloads, n_jobs)
    return CrossvalResult(
        frame_len=cfg.frame_len,
        segments=cfg.segments,
        classifier_kind=classifier_kind,
        classifier_params=dict(classifier_params or {}),
        threshold=float(threshold),
        fold_reports=tuple(reports),
        mean_curve=mean_roc(reports),
    )


# ---------------------------------------------------------------------------
# Grid search


DEFAULT_CLASSIFIER_SPECS = {
    "cnn": {"conv_filters": 24, "kernel_size": 2, "dropout_rate": 0.1, "dense_size": 16,
            "learning_rate": 1e-3, "batch_size": 64, "epochs": 10},
    "lstm": {"lstm_units": 64, "dropout_rate": 0.1, "dense_size": 16,
             "learning_rate": 1e-3, "batch_size": 64, "epochs": 10},
    "resnet": {"stages": 2, "blocks_per_stage": 1, "base_channels": 8,
               "block_kind": "bottleneck", "learning_rate": 1e-3, "batch_size": 64,
               "epochs": 10},
}


def _check_choice(kind, params, key, choices, approx=False):
    if key not in params:
        return
    value = params[key]
    ok = (
        any(abs(value - c) <= 1e-12 + 1e-9 * abs(c) for c in choices)
        if approx
        else value in choices
    )
    if not ok:
        raise ValueError(f"{kind}: {key}={value!r} is outside the search space {choices}")


def validate_grid_spec(kind, params):
    """Reject classifier specs outside the supported search space.

    Training-budget knobs (batch size, epochs) are checked for every kind;
    architecture knobs are checked where the space defines them. The reduced
    residual network's shape parameters are free apart from the model's own
    under-50-layers limit.
    """
    _check_choice(kind, params, "batch_size", BATCH_SIZES)
    _check_choice(kind, params, "epochs", EPOCH_CHOICES)
    if kind == "cnn":
        _check_choice(kind, params, "conv_filters", CONV_FILTER_CHOICES)
        _check_choice(kind, params, "kernel_size", KERNEL_CHOICES)
        _check_choice(kind, params, "dropout_rate", DROPOUT_CHOICES, approx=True)
        _check_choice(kind, params, "dense_size", DENSE_SIZE_CHOICES)
    elif kind == "lstm":
        _check_choice(kind, params, "lstm_units", LSTM_UNIT_CHOICES)
        _check_choice(kind, params, "learning_rate", LSTM_LR_CHOICES, approx=True)
        _check_choice(kind, params, "dropout_rate", DROPOUT_CHOICES, approx=True)
        _check_choice(kind, params, "dense_size", DENSE_SIZE_CHOICES)


@dataclass(frozen=True)
class GridSearchResult:
    """Grid rows in evaluation order, the same rows ranked by mean AUC, and the
    best row per classifier kind."""

    points: tuple
    ranked: tuple
    best_by_kind: dict


def grid_search(dataset, feature_grid=FEATURE_GRID, classifier_specs=None, *,
                threshold=0.5, k_neighbors=5, target_ratio=1.0, seed=0, n_jobs=1):
    """LOOCV every (frame_len, segments) x classifier-kind combination.

    ``classifier_specs`` maps kind -> fixed hyperparameters for that kind;
    each spec is validated against the supported search space before any
    training starts.
    """
    if classifier_specs is None:
        classifier_specs = DEFAULT_CLASSIFIER_SPECS
    if not feature_grid or not classifier_specs:
        raise ValueError("feature_grid and classifier_specs must be non-empty")
    feature_grid = [(int(f), int(c)) for f, c in feature_grid]
    for pair in feature_grid:
        if pair not in FEATURE_GRID:
            raise ValueError(f"feature grid point {pair} is outside the search space {FEATURE_GRID}")
    kinds = sorted(classifier_specs)
    for kind in kinds:
        validate_grid_spec(kind, classifier_specs[kind])

    y = dataset.labels()
    folds = loocv_folds(dataset)
    points = []
    point_index = 0
    for frame_len, segments in feature_grid:
        X = FeatureExtractor(frame_len=frame_len, segments=segments).transform(dataset.events)
        for kind in kinds:
            params = dict(classifier_specs[kind])
            payloads = _fold_payloads(
                dataset, X, y, folds, kind=kind, params=params, threshold=threshold,
                k_neighbors=k_neighbors, target_ratio=target_ratio, seed=seed,
                point_index=point_index,
            )
            reports = _run_tasks(payloads, n_jobs)
            points.append(CrossvalResult(
                frame_len=frame_len,
                segments=segments,
                classifier_kind=kind,
                classifier_params=params,
                threshold=float(threshold),
                fold_reports=tuple(reports),
                mean_curve=mean_roc(reports),
            ))
            point_index += 1

    ranked = sorted(points, key=lambda r: (-r.mean_auc, r.frame_len, r.segments, r.classifier_kind))
    best_by_kind = {}
    for row in ranked:
        best_by_kind.setdefault(row.classifier_kind, row)
    return GridSearchResult(points=tuple(points), ranked=tuple(ranked), best_by_kind=best_by_kind)


# ---------------------------------------------------------------------------
# Report rendering (data only; the CLI writes these to disk)


REPORT_COLUMNS = ("Frame", "Seg", "Classifier", "Mean Spec", "Mean Sens",
                  "Mean Accuracy", "Mean AUC")

EXTENDED_REPORT_COLUMNS = REPORT_COLUMNS + ("Threshold", "Youden Threshold",
                                            "Youden Spec", "Youden Sens",
                                            "Youden Accuracy")


def _report_row(r):
    return [
        str(r.frame_len),
        str(r.segments),
        r.classifier_kind,
        f"{r.mean_specificity:.4f}",
        f"{r.mean_sensitivity:.4f}",
        f"{r.mean_accuracy:.4f}",
        f"{r.mean_auc:.4f}",
    ]


def report_csv(results):
    """Render CrossvalResults as the summary CSV (one row per configuration).

    Columns are exactly ``REPORT_COLUMNS``, nothing more; rates are fractions
    in [0, 1] with four decimals.
    """
    lines = [",".join(REPORT_COLUMNS)]
    for r in results:
        lines.append(",".join(_report_row(r)))
    return "\n".join(lines) + "\n"


def extended_report_csv(results):
    """Summary CSV plus the operating points: the fixed decision threshold and
    the fold-averaged Youden-optimal one with its metrics."""
    lines = [",".join(EXTENDED_REPORT_COLUMNS)]
    for r in results:
        lines.append(",".join(_report_row(r) + [
            f"{r.threshold:.4f}",
            f"{r.mean_youden_threshold:.4f}",
            f"{r.mean_youden_specificity:.4f}",
            f"{r.mean_youden_sensitivity:.4f}",
            f"{r.mean_youden_accuracy:.4f}",
        ]))
    return "\n".join(lines) + "\n"


def fold_roc_csv(result: CrossvalResult):
    """Per-fold ROC points, long format, for external plotting."""
    lines = ["fold,test_patient,fpr,tpr"]
    for i, report in enumerate(result.fold_reports):
        for fpr, tpr in report.roc_points:
            lines.append(f"{i},{report.test_patient},{float(fpr)!r},{float(tpr)!r}")
    return "\n".join(lines) + "\n"


def mean_roc_csv(curve: MeanRoc):
    lines = ["fpr,mean_tpr"]
    for fpr, tpr in zip(curve.fpr, curve.tpr):
        lines.append(f"{float(fpr)!r},{float(tpr)!r}")
    return "\n".join(lines) + "\n"
