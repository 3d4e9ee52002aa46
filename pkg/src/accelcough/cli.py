"""Command-line front end: one ``accelcough`` binary, seven subcommands.

    synth      generate a synthetic corpus directory
    detect     run the energy detector over a signal CSV
    featurize  extract feature matrices from a labeled corpus
    train      fit a classifier on a feature directory, save a checkpoint
    predict    score a feature directory with a saved checkpoint
    crossval   leave-one-patient-out evaluation (single config or full grid)
    report     render a crossval directory's mean ROC curves as SVG

Every subcommand writes a manifest JSON capturing its resolved configuration
(sorted keys, no timestamps), so re-running with identical arguments produces
byte-identical outputs. Exit codes: 0 success, 1 runtime failure (bad data,
numeric trouble), 2 usage errors such as unknown flags or missing inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .corpus import (
    CorpusError,
    dataset_summary,
    label_to_int,
    load_corpus,
    load_signal,
    summary_to_text,
)
from .detect import EnergyDetector
from .evaluation import (
    FEATURE_GRID,
    crossval,
    extended_report_csv,
    fold_roc_csv,
    grid_search,
    mean_roc_csv,
    report_csv,
)
from .features import FeatureConfig, FeatureExtractor
from .nnet import CLASSIFIER_KINDS, load_model, save_model
from .synth import SynthConfig, write_synth_corpus
from .validation import NumericError


class UsageError(Exception):
    """Bad invocation discovered after argparse (e.g. a missing input path)."""


def _require_exists(path, what):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"missing {what}: {path}")
    return path


def _write_manifest(path, command, config, outputs):
    doc = {
        "command": command,
        "config": config,
        "outputs": sorted(str(p) for p in outputs),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _parse_params(text):
    """Classifier hyperparameters as inline JSON or @file.json."""
    if text is None:
        return {}
    if text.startswith("@"):
        path = _require_exists(text[1:], "params file")
        text = path.read_text(encoding="utf-8")
    try:
        params = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise UsageError("--params must be a JSON object")
    return params


# ---------------------------------------------------------------------------
# synth


def _add_synth(sub):
    p = sub.add_parser("synth", help="generate a synthetic corpus directory")
    p.add_argument("--out", required=True, help="corpus directory to create")
    for f in fields(SynthConfig):
        flag = "--" + f.name.replace("_", "-")
        p.add_argument(flag, type=type(f.default), default=f.default,
                       help=f"generator knob (default {f.default})")
    p.set_defaults(func=_cmd_synth)


def _cmd_synth(args):
    cfg = SynthConfig(**{f.name: getattr(args, f.name) for f in fields(SynthConfig)})
    out = Path(args.out)
    series_list, intervals, dataset = write_synth_corpus(out, cfg)
    print(f"wrote {len(series_list)} signals, {len(intervals)} events to {out}")
    if dataset.events:
        print(summary_to_text(dataset_summary(dataset)), end="")
    return 0


# ---------------------------------------------------------------------------
# detect


def _cmd_detect(args):
    signal_path = _require_exists(args.signal, "signal file")
    series = load_signal(signal_path)
    detector = EnergyDetector(window_len=args.window_len, hop=args.hop,
                              threshold=args.threshold, min_event_len=args.min_event_len,
                              merge_gap=args.merge_gap)
    spans = detector.detect_series(series)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("patient_id,start_s,end_s\n")
        for start_s, end_s in spans:
            fh.write(f"{series.patient_id},{float(start_s)!r},{float(end_s)!r}\n")
    _write_manifest(out.with_name(out.name + ".manifest.json"), "detect", {
        "signal": str(signal_path), "window_len": args.window_len, "hop": args.hop,
        "threshold": args.threshold, "min_event_len": args.min_event_len,
        "merge_gap": args.merge_gap,
    }, [out])
    print(f"{len(spans)} events detected in {signal_path.name}")
    return 0


def _add_detect(sub):
    p = sub.add_parser("detect", help="energy-threshold event detection on a signal CSV")
    p.add_argument("--signal", required=True, help="signal CSV to scan")
    p.add_argument("--out", required=True, help="detected-intervals CSV to write")
    p.add_argument("--window-len", type=int, default=16)
    p.add_argument("--hop", type=int, default=8)
    p.add_argument("--threshold", type=float, default=4.0)
    p.add_argument("--min-event-len", type=int, default=20)
    p.add_argument("--merge-gap", type=int, default=30)
    p.set_defaults(func=_cmd_detect)


# ---------------------------------------------------------------------------
# featurize


def _cmd_featurize(args):
    corpus_dir = _require_exists(args.corpus, "corpus directory")
    dataset = load_corpus(corpus_dir)
    if not dataset.events:
        raise ValueError(f"corpus {corpus_dir} contains no events")
    cfg = FeatureConfig(frame_len=args.frame_len, segments=args.segments,
                        log_epsilon=args.log_epsilon)
    X = FeatureExtractor(frame_len=cfg.frame_len, segments=cfg.segments,
                         log_epsilon=cfg.log_epsilon).transform(dataset.events)
    y = dataset.labels()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # JSON-lines keeps the artifact binary-free; json's repr-style floats make
    # the matrices round-trip bit-exactly.
    with open(out / "features.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for event, matrix in zip(dataset.events, X):
            fh.write(json.dumps({
                "event_id": event.event_id,
                "patient_id": event.patient_id,
                "label": event.label,
                "matrix": matrix.tolist(),
            }, sort_keys=True))
            fh.write("\n")
    _write_manifest(out / "manifest.json", "featurize", {
        "corpus": str(corpus_dir),
        "frame_len": cfg.frame_len,
        "segments": cfg.segments,
        "log_epsilon": cfg.log_epsilon,
        "n_events": int(len(X)),
        "matrix_shape": [int(s) for s in X.shape[1:]],
    }, [out / "features.jsonl"])
    print(f"featurized {len(X)} events to {out} (shape {X.shape[1]}x{X.shape[2]})")
    return 0


def _add_featurize(sub):
    p = sub.add_parser("featurize", help="extract feature matrices from a labeled corpus")
    p.add_argument("--corpus", required=True, help="corpus directory (signals/ + annotations.csv)")
    p.add_argument("--out", required=True, help="feature directory to write")
    p.add_argument("--frame-len", type=int, default=32)
    p.add_argument("--segments", type=int, default=10)
    p.add_argument("--log-epsilon", type=float, default=1e-10)
    p.set_defaults(func=_cmd_featurize)


def _load_feature_dir(path):
    feat_dir = _require_exists(path, "feature directory")
    for name in ("features.jsonl", "manifest.json"):
        _require_exists(feat_dir / name, "feature file")
    with open(feat_dir / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg_doc = manifest.get("config", {})
    cfg = FeatureConfig(frame_len=cfg_doc["frame_len"], segments=cfg_doc["segments"],
                        log_epsilon=cfg_doc["log_epsilon"])
    matrices, labels, event_rows = [], [], []
    with open(feat_dir / "features.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            matrices.append(np.asarray(record["matrix"], dtype=np.float64))
            labels.append(label_to_int(record["label"]))
            event_rows.append((record["event_id"], record["patient_id"], record["label"]))
    if not matrices:
        raise ValueError(f"{feat_dir / 'features.jsonl'}: no feature records")
    X = np.stack(matrices)
    y = np.asarray(labels, dtype=np.int64)
    return X, y, cfg, event_rows


# ---------------------------------------------------------------------------
# train


def _cmd_train(args):
    from .evaluation import run_fold

    X, y, cfg, _ = _load_feature_dir(args.features)
    params = _parse_params(args.params)
    if args.classifier not in CLASSIFIER_KINDS:
        raise UsageError(f"unknown classifier {args.classifier!r}, "
                         f"expected one of {sorted(CLASSIFIER_KINDS)}")
    empty = X[:0]
    model, standardizer = run_fold(
        X, y, empty, y[:0],
        classifier_kind=args.classifier, classifier_params=params,
        k_neighbors=args.k_neighbors, target_ratio=args.target_ratio,
        balance=not args.no_balance, seed=args.seed, fit_only=True,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model, feature_config=cfg, standardizer=standardizer)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "train", {
        "features": str(args.features), "classifier": args.classifier,
        "params": params, "seed": args.seed, "k_neighbors": args.k_neighbors,
        "target_ratio": args.target_ratio, "balance": not args.no_balance,
    }, [out])
    print(f"trained {args.classifier} on {len(X)} events; final epoch loss "
          f"{model.loss_curve_[-1]:.4f}" if model.loss_curve_ else
          f"trained {args.classifier} on {len(X)} events")
    return 0


def _add_train(sub):
    p = sub.add_parser("train", help="fit a classifier on a feature directory")
    p.add_argument("--features", required=True, help="directory written by featurize")
    p.add_argument("--classifier", default="cnn", help="cnn | lstm | resnet")
    p.add_argument("--params", default=None,
                   help="classifier hyperparameters as JSON (or @file.json)")
    p.add_argument("--k-neighbors", type=int, default=5)
    p.add_argument("--target-ratio", type=float, default=1.0)
    p.add_argument("--no-balance", action="store_true",
                   help="skip minority oversampling before training")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model checkpoint JSON to write")
    p.set_defaults(func=_cmd_train)


# ---------------------------------------------------------------------------
# predict


def _cmd_predict(args):
    model_path = _require_exists(args.model, "model checkpoint")
    model, _cfg, standardizer = load_model(model_path)
    X, _y, _feat_cfg, event_rows = _load_feature_dir(args.features)
    if standardizer is not None:
        X = standardizer.transform(X)
    scores = model.predict_proba(X)[:, 1]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("event_id,patient_id,label,score,predicted\n")
        for i, score in enumerate(scores):
            event_id, patient_id, label = (
                event_rows[i] if i < len(event_rows) else (str(i), "", "")
            )
            predicted = "cough" if score >= args.threshold else "non-cough"
            fh.write(f"{event_id},{patient_id},{label},{float(score)!r},{predicted}\n")
    _write_manifest(out.with_name(out.name + ".manifest.json"), "predict", {
        "model": str(model_path), "features": str(args.features),
        "threshold": args.threshold,
    }, [out])
    print(f"scored {len(scores)} events -> {out}")
    return 0


def _add_predict(sub):
    p = sub.add_parser("predict", help="score a feature directory with a saved model")
    p.add_argument("--model", required=True, help="checkpoint written by train")
    p.add_argument("--features", required=True, help="directory written by featurize")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, help="scores CSV to write")
    p.set_defaults(func=_cmd_predict)


# ---------------------------------------------------------------------------
# crossval


def _cmd_crossval(args):
    corpus_dir = _require_exists(args.corpus, "corpus directory")
    dataset = load_corpus(corpus_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = _parse_params(args.params)

    if args.grid:
        specs = None
        if params:
            # --params in grid mode: {"cnn": {...}, "lstm": {...}, ...}
            specs = {kind: dict(spec) for kind, spec in params.items()}
        result = grid_search(dataset, FEATURE_GRID, specs, threshold=args.threshold,
                             k_neighbors=args.k_neighbors, target_ratio=args.target_ratio,
                             seed=args.seed, n_jobs=args.jobs)
        rows = result.ranked
        (out / "report.csv").write_text(report_csv(rows), encoding="utf-8")
        (out / "report_extended.csv").write_text(extended_report_csv(rows), encoding="utf-8")
        for kind, best in sorted(result.best_by_kind.items()):
            (out / f"folds_roc_{kind}.csv").write_text(fold_roc_csv(best), encoding="utf-8")
            (out / f"mean_roc_{kind}.csv").write_text(mean_roc_csv(best.mean_curve),
                                                      encoding="utf-8")
    else:
        result = crossval(dataset, frame_len=args.frame_len, segments=args.segments,
                          classifier_kind=args.classifier, classifier_params=params,
                          threshold=args.threshold, k_neighbors=args.k_neighbors,
                          target_ratio=args.target_ratio, seed=args.seed, n_jobs=args.jobs)
        rows = [result]
        (out / "report.csv").write_text(report_csv(rows), encoding="utf-8")
        (out / "report_extended.csv").write_text(extended_report_csv(rows), encoding="utf-8")
        (out / "folds_roc.csv").write_text(fold_roc_csv(result), encoding="utf-8")
        (out / "mean_roc.csv").write_text(mean_roc_csv(result.mean_curve), encoding="utf-8")

    _write_manifest(out / "manifest.json", "crossval", {
        "corpus": str(corpus_dir), "grid": bool(args.grid),
        "frame_len": args.frame_len, "segments": args.segments,
        "classifier": args.classifier, "params": params,
        "threshold": args.threshold, "seed": args.seed,
        "k_neighbors": args.k_neighbors, "target_ratio": args.target_ratio,
        "jobs": args.jobs,
    }, sorted(p for p in out.iterdir() if p.name != "manifest.json"))
    for row in rows:
        print(f"{row.frame_len:>5} {row.segments:>3} {row.classifier_kind:>7}  "
              f"spec {row.mean_specificity:.3f}  sens {row.mean_sensitivity:.3f}  "
              f"acc {row.mean_accuracy:.3f}  auc {row.mean_auc:.4f}")
    return 0


def _add_crossval(sub):
    p = sub.add_parser("crossval", help="leave-one-patient-out evaluation")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--grid", action="store_true",
                   help="run the full feature-grid x classifier-kind search")
    p.add_argument("--frame-len", type=int, default=32)
    p.add_argument("--segments", type=int, default=10)
    p.add_argument("--classifier", default="cnn", help="cnn | lstm | resnet")
    p.add_argument("--params", default=None,
                   help="classifier hyperparameters as JSON (or @file.json); in grid "
                        "mode, an object keyed by classifier kind")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--k-neighbors", type=int, default=5)
    p.add_argument("--target-ratio", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes; results are identical for any value")
    p.set_defaults(func=_cmd_crossval)


# ---------------------------------------------------------------------------
# report


_SVG_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def roc_svg(curves, title="Mean ROC"):
    """Render (label, fpr, tpr) curves as a static SVG string.

    Pure text generation with fixed float formatting, so identical curves
    yield identical bytes.
    """
    width, height = 640, 480
    ml, mr, mt, mb = 64, 20, 44, 56
    pw, ph = width - ml - mr, height - mt - mb

    def px(f):
        return ml + f * pw

    def py(t):
        return mt + (1.0 - t) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
    ]
    for i in range(6):
        f = i / 5.0
        parts.append(f'<line x1="{px(f):.2f}" y1="{py(0):.2f}" x2="{px(f):.2f}" '
                     f'y2="{py(1):.2f}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<line x1="{px(0):.2f}" y1="{py(f):.2f}" x2="{px(1):.2f}" '
                     f'y2="{py(f):.2f}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{px(f):.2f}" y="{py(0) + 18:.2f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{f:.1f}</text>')
        parts.append(f'<text x="{px(0) - 8:.2f}" y="{py(f) + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{f:.1f}</text>')
    parts.append(f'<line x1="{px(0):.2f}" y1="{py(1):.2f}" x2="{px(0):.2f}" y2="{py(0):.2f}" '
                 f'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(1):.2f}" y2="{py(0):.2f}" '
                 f'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{px(0):.2f}" y1="{py(0):.2f}" x2="{px(1):.2f}" y2="{py(1):.2f}" '
                 f'stroke="#999999" stroke-width="1" stroke-dasharray="5,4"/>')
    parts.append(f'<text x="{px(0.5):.2f}" y="{height - 14}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">False positive rate</text>')
    parts.append(f'<text x="18" y="{py(0.5):.2f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 18 {py(0.5):.2f})">True positive rate</text>')

    for i, (label, fpr, tpr) in enumerate(curves):
        color = _SVG_PALETTE[i % len(_SVG_PALETTE)]
        points = " ".join(f"{px(f):.2f},{py(t):.2f}" for f, t in zip(fpr, tpr))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        ly = mt + 16 + 18 * i
        parts.append(f'<line x1="{ml + pw - 170:.2f}" y1="{ly - 4}" x2="{ml + pw - 146:.2f}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw - 140:.2f}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmd_report(args):
    crossval_dir = _require_exists(args.crossval, "crossval directory")
    curve_paths = sorted(crossval_dir.glob("mean_roc*.csv"))
    if not curve_paths:
        raise UsageError(f"no mean_roc*.csv files in {crossval_dir}")
    curves = []
    for path in curve_paths:
        rows = [line.split(",") for line in
                path.read_text(encoding="utf-8").splitlines()[1:] if line]
        fpr = np.array([float(r[0]) for r in rows])
        tpr = np.array([float(r[1]) for r in rows])
        label = path.stem.replace("mean_roc", "").lstrip("_") or "mean"
        curves.append((label, fpr, tpr))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "roc.svg").write_text(roc_svg(curves), encoding="utf-8")
    _write_manifest(out / "manifest.json", "report",
                    {"crossval": str(crossval_dir)}, [out / "roc.svg"])
    print(f"wrote {out / 'roc.svg'} ({len(curves)} curves)")
    return 0


def _add_report(sub):
    p = sub.add_parser("report", help="render mean ROC curves from a crossval directory")
    p.add_argument("--crossval", required=True, help="directory written by crossval")
    p.add_argument("--out", required=True, help="output directory for roc.svg")
    p.set_defaults(func=_cmd_report)


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="accelcough",
        description="Accelerometer cough detection: synthesis, detection, features, "
                    "training, and leave-one-patient-out evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_synth(sub)
    _add_detect(sub)
    _add_featurize(sub)
    _add_train(sub)
    _add_predict(sub)
    _add_crossval(sub)
    _add_report(sub)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 1
    except (CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
