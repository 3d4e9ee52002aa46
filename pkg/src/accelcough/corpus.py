"""Data model and on-disk I/O for accelerometer signals, annotations, and event datasets.

File formats
------------
Signal CSV (UTF-8, ``\\n`` line endings, ``.`` decimal separator)::

    patient_id,p01
    sample_rate_hz,100.0
    9.8123
    9.8077
    ...

Two key/value header lines, then one magnitude per row, in sample order.

Annotation CSV::

    patient_id,start_s,end_s,label
    p01,12.30,13.45,cough
    p01,40.00,41.20,non-cough

Labels are the literals ``cough`` and ``non-cough``; times are seconds on the
same clock as the signal's ``start_time``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COUGH = "cough"
NON_COUGH = "non-cough"
LABELS = (NON_COUGH, COUGH)


class CorpusError(ValueError):
    """Malformed corpus file (bad header, bad row, inconsistent annotations)."""


def label_to_int(label):
    """Map a label string to the classifier convention: cough=1, non-cough=0."""
    if label not in LABELS:
        raise ValueError(f"unknown label {label!r}, expected one of {LABELS}")
    return 1 if label == COUGH else 0


@dataclass(frozen=True)
class SampleSeries:
    """Uniformly sampled accelerometer magnitude stream.

    Sample ``k`` is at time ``start_time + k / sample_rate_hz``.
    """

    patient_id: str
    sample_rate_hz: float
    samples: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1d sequence")

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate_hz

    @property
    def end_time(self):
        return self.start_time + self.duration_s


@dataclass(frozen=True)
class LabeledInterval:
    """A labeled time span ``[start_s, end_s)`` owned by a patient."""

    patient_id: str
    start_s: float
    end_s: float
    label: str

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError(
                f"interval end must exceed start, got [{self.start_s}, {self.end_s})"
            )
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}, expected one of {LABELS}")


@dataclass(frozen=True)
class Event:
    """A labeled contiguous slice of a signal, the unit of classification."""

    patient_id: str
    label: str
    samples: np.ndarray
    duration_s: float
    event_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if len(self.samples) < 1:
            raise ValueError("event must contain at least one sample")
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}, expected one of {LABELS}")


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of events; safe to share across concurrent readers."""

    events: tuple

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def patients(self):
        return sorted({e.patient_id for e in self.events})

    def events_for(self, patient_id):
        return [e for e in self.events if e.patient_id == patient_id]

    def labels(self):
        return np.array([label_to_int(e.label) for e in self.events], dtype=np.int64)


def load_signal(path) -> SampleSeries:
    """Read a signal CSV into a SampleSeries.

    Raises CorpusError naming the offending line for malformed rows, and for a
    missing/invalid header or an empty data section.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    if len(lines) < 2:
        raise CorpusError(f"{path}: missing header (expected patient_id and sample_rate_hz lines)")

    def header_value(lineno, key):
        parts = lines[lineno].split(",")
        if len(parts) != 2 or parts[0] != key:
            raise CorpusError(f"{path}: line {lineno + 1}: expected '{key},<value>' header")
        return parts[1]

    patient_id = header_value(0, "patient_id")
    rate_text = header_value(1, "sample_rate_hz")
    try:
        sample_rate_hz = float(rate_text)
    except ValueError:
        raise CorpusError(f"{path}: line 2: sample_rate_hz is not a number: {rate_text!r}") from None
    if not math.isfinite(sample_rate_hz) or sample_rate_hz <= 0:
        raise CorpusError(f"{path}: line 2: sample_rate_hz must be > 0, got {rate_text}")

    values = np.empty(len(lines) - 2, dtype=np.float64)
    for i, row in enumerate(lines[2:]):
        try:
            values[i] = float(row)
        except ValueError:
            raise CorpusError(f"{path}: line {i + 3}: malformed sample row: {row!r}") from None
    if len(values) == 0:
        raise CorpusError(f"{path}: no samples")

    return SampleSeries(patient_id=patient_id, sample_rate_hz=sample_rate_hz, samples=values)


def write_signal(series: SampleSeries, path):
    """Write a signal CSV; sample values round-trip bit-exactly through load_signal."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"patient_id,{series.patient_id}\n")
        fh.write(f"sample_rate_hz,{float(series.sample_rate_hz)!r}\n")
        for v in series.samples:
            fh.write(f"{float(v)!r}\n")


def load_annotations(path) -> list:
    """Read an annotation CSV into LabeledIntervals.

    Overlapping intervals for one patient are rejected: annotation ambiguity
    should fail loudly rather than be merged silently.
    """
    path = Path(path)
    intervals = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: missing header") from None
        expected = ["patient_id", "start_s", "end_s", "label"]
        if header != expected:
            raise CorpusError(f"{path}: line 1: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise CorpusError(f"{path}: line {lineno}: expected 4 columns, got {len(row)}")
            patient_id, start_text, end_text, label = row
            try:
                start_s, end_s = float(start_text), float(end_text)
            except ValueError:
                raise CorpusError(f"{path}: line {lineno}: malformed times {start_text!r},{end_text!r}") from None
            if label not in LABELS:
                raise CorpusError(f"{path}: line {lineno}: unknown label {label!r}")
            try:
                intervals.append(LabeledInterval(patient_id, start_s, end_s, label))
            except ValueError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from None

    _check_no_overlap(intervals, path)
    return intervals


def _check_no_overlap(intervals, path):
    by_patient = {}
    for iv in intervals:
        by_patient.setdefault(iv.patient_id, []).append(iv)
    for patient_id, ivs in by_patient.items():
        ivs = sorted(ivs, key=lambda iv: iv.start_s)
        for a, b in zip(ivs, ivs[1:]):
            if b.start_s < a.end_s:
                raise CorpusError(
                    f"{path}: overlapping annotations for patient {patient_id}: "
                    f"[{a.start_s}, {a.end_s}) and [{b.start_s}, {b.end_s})"
                )


def write_annotations(intervals, path):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("patient_id,start_s,end_s,label\n")
        for iv in intervals:
            fh.write(f"{iv.patient_id},{float(iv.start_s)!r},{float(iv.end_s)!r},{iv.label}\n")


def slice_events(series: SampleSeries, annotations) -> list:
    """Cut labeled events out of a series.

    Event k holds samples with index ``floor(start_s*fs) <= i < floor(end_s*fs)``
    (times relative to the series start), half-open so that disjoint covering
    intervals partition the samples exactly.
    """
    fs = series.sample_rate_hz
    n = len(series.samples)
    events = []
    for k, iv in enumerate(annotations):
        if iv.patient_id != series.patient_id:
            raise ValueError(
                f"interval patient {iv.patient_id!r} does not match series patient "
                f"{series.patient_id!r}"
            )
        lo = math.floor((iv.start_s - series.start_time) * fs)
        hi = math.floor((iv.end_s - series.start_time) * fs)
        if lo < 0 or hi > n:
            raise ValueError(
                f"interval [{iv.start_s}, {iv.end_s}) for patient {iv.patient_id} "
                f"lies outside the series span [{series.start_time}, {series.end_time})"
            )
        if hi <= lo:
            raise ValueError(
                f"interval [{iv.start_s}, {iv.end_s}) for patient {iv.patient_id} "
                f"covers no samples at {fs} Hz"
            )
        events.append(
            Event(
                patient_id=iv.patient_id,
                label=iv.label,
                samples=series.samples[lo:hi].copy(),
                duration_s=(hi - lo) / fs,
                event_id=f"{iv.patient_id}-{k:05d}",
            )
        )
    return events


@dataclass(frozen=True)
class SummaryRow:
    patient_id: str
    cough_count: int
    non_cough_count: int
    cough_seconds: float
    non_cough_seconds: float


@dataclass(frozen=True)
class DatasetSummary:
    rows: tuple
    total: SummaryRow = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        total = SummaryRow(
            "TOTAL",
            sum(r.cough_count for r in self.rows),
            sum(r.non_cough_count for r in self.rows),
            float(sum(r.cough_seconds for r in self.rows)),
            float(sum(r.non_cough_seconds for r in self.rows)),
        )
        object.__setattr__(self, "total", total)


def dataset_summary(ds: Dataset) -> DatasetSummary:
    """Per-patient event counts and durations, plus a totals row."""
    rows = []
    for patient_id in ds.patients:
        events = ds.events_for(patient_id)
        coughs = [e for e in events if e.label == COUGH]
        others = [e for e in events if e.label == NON_COUGH]
        rows.append(
            SummaryRow(
                patient_id,
                len(coughs),
                len(others),
                float(sum(e.duration_s for e in coughs)),
                float(sum(e.duration_s for e in others)),
            )
        )
    return DatasetSummary(rows)


_SUMMARY_HEADER = ("patient_id", "coughs", "non_coughs", "cough_time_s", "non_cough_time_s")


def summary_to_csv(summary: DatasetSummary) -> str:
    lines = [",".join(_SUMMARY_HEADER)]
    for r in (*summary.rows, summary.total):
        lines.append(
            f"{r.patient_id},{r.cough_count},{r.non_cough_count},"
            f"{r.cough_seconds:.2f},{r.non_cough_seconds:.2f}"
        )
    return "\n".join(lines) + "\n"


def summary_to_text(summary: DatasetSummary) -> str:
    """Aligned-text rendering of a dataset summary."""
    rows = [(r.patient_id, str(r.cough_count), str(r.non_cough_count),
             f"{r.cough_seconds:.2f}", f"{r.non_cough_seconds:.2f}")
            for r in (*summary.rows, summary.total)]
    table = [_SUMMARY_HEADER, *rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(_SUMMARY_HEADER))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in table]
    return "\n".join(lines) + "\n"


def write_corpus(directory, series_list, annotations, manifest=None):
    """Write a corpus directory: ``signals/<patient_id>.csv``, ``annotations.csv``,
    and (when given) a ``manifest.json`` with sorted keys and no timestamps."""
    directory = Path(directory)
    (directory / "signals").mkdir(parents=True, exist_ok=True)
    for series in series_list:
        write_signal(series, directory / "signals" / f"{series.patient_id}.csv")
    write_annotations(annotations, directory / "annotations.csv")
    if manifest is not None:
        with open(directory / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")


def load_corpus(directory) -> Dataset:
    """Load a corpus directory (``signals/*.csv`` plus ``annotations.csv``)."""
    directory = Path(directory)
    ann_path = directory / "annotations.csv"
    if not ann_path.exists():
        raise FileNotFoundError(f"missing annotation file: {ann_path}")
    annotations = load_annotations(ann_path)
    by_patient = {}
    for iv in annotations:
        by_patient.setdefault(iv.patient_id, []).append(iv)

    signal_dir = directory / "signals"
    events = []
    for path in sorted(signal_dir.glob("*.csv")):
        series = load_signal(path)
        events.extend(slice_events(series, by_patient.get(series.patient_id, [])))
    return Dataset(events=tuple(events))
