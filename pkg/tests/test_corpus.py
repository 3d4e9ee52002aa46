"""Corpus I/O: file round trips, malformed-file errors, slicing semantics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accelcough.corpus import (
    COUGH,
    NON_COUGH,
    CorpusError,
    Dataset,
    DatasetSummary,
    LabeledInterval,
    SampleSeries,
    SummaryRow,
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

from conftest import make_event


# ---------------------------------------------------------------------------
# labels and basic types


def test_label_to_int():
    assert label_to_int(COUGH) == 1
    assert label_to_int(NON_COUGH) == 0
    with pytest.raises(ValueError, match="unknown label"):
        label_to_int("sneeze")


def test_sample_series_validation():
    with pytest.raises(ValueError, match="sample_rate_hz"):
        SampleSeries("p01", 0.0, [1.0, 2.0])
    with pytest.raises(ValueError, match="1d"):
        SampleSeries("p01", 100.0, [[1.0], [2.0]])
    s = SampleSeries("p01", 100.0, [1.0] * 250)
    assert s.duration_s == 2.5
    assert s.end_time == 2.5


def test_interval_validation():
    with pytest.raises(ValueError, match="end must exceed start"):
        LabeledInterval("p01", 2.0, 2.0, COUGH)
    with pytest.raises(ValueError, match="unknown label"):
        LabeledInterval("p01", 0.0, 1.0, "laugh")


def test_event_validation():
    with pytest.raises(ValueError, match="at least one sample"):
        make_event([])
    with pytest.raises(ValueError, match="unknown label"):
        make_event([1.0], label="hiccup")


# ---------------------------------------------------------------------------
# signal files


def test_signal_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    series = SampleSeries("p07", 100.0, rng.normal(9.81, 0.3, size=137))
    path = tmp_path / "p07.csv"
    write_signal(series, path)
    back = load_signal(path)
    assert back.patient_id == "p07"
    assert back.sample_rate_hz == 100.0
    np.testing.assert_array_equal(back.samples, series.samples)


def test_load_signal_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("9.81\n")
    with pytest.raises(CorpusError, match="missing header"):
        load_signal(path)


def test_load_signal_wrong_header_key(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("subject,p01\nsample_rate_hz,100.0\n9.81\n")
    with pytest.raises(CorpusError, match="line 1"):
        load_signal(path)


def test_load_signal_bad_rate(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("patient_id,p01\nsample_rate_hz,fast\n9.81\n")
    with pytest.raises(CorpusError, match="line 2"):
        load_signal(path)
    path.write_text("patient_id,p01\nsample_rate_hz,-5\n9.81\n")
    with pytest.raises(CorpusError, match="must be > 0"):
        load_signal(path)


def test_load_signal_malformed_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("patient_id,p01\nsample_rate_hz,100.0\n9.81\noops\n9.79\n")
    with pytest.raises(CorpusError, match="line 4"):
        load_signal(path)


def test_load_signal_no_samples(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("patient_id,p01\nsample_rate_hz,100.0\n")
    with pytest.raises(CorpusError, match="no samples"):
        load_signal(path)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1,
                max_size=60))
def test_signal_round_trip_property(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("sig") / "s.csv"
    series = SampleSeries("px", 50.0, np.array(values))
    write_signal(series, path)
    np.testing.assert_array_equal(load_signal(path).samples, series.samples)


# ---------------------------------------------------------------------------
# annotation files


def test_annotations_round_trip(tmp_path):
    intervals = [
        LabeledInterval("p01", 12.3, 13.45, COUGH),
        LabeledInterval("p01", 40.0, 41.2, NON_COUGH),
        LabeledInterval("p02", 0.005, 0.875, COUGH),
    ]
    path = tmp_path / "annotations.csv"
    write_annotations(intervals, path)
    back = load_annotations(path)
    assert back == intervals


def test_load_annotations_header_required(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("")
    with pytest.raises(CorpusError, match="missing header"):
        load_annotations(path)
    path.write_text("patient,start,end,label\n")
    with pytest.raises(CorpusError, match="line 1"):
        load_annotations(path)


def test_load_annotations_bad_rows(tmp_path):
    path = tmp_path / "a.csv"
    head = "patient_id,start_s,end_s,label\n"
    path.write_text(head + "p01,1.0,2.0\n")
    with pytest.raises(CorpusError, match="line 2.*4 columns"):
        load_annotations(path)
    path.write_text(head + "p01,one,2.0,cough\n")
    with pytest.raises(CorpusError, match="line 2.*malformed times"):
        load_annotations(path)
    path.write_text(head + "p01,1.0,2.0,sneeze\n")
    with pytest.raises(CorpusError, match="line 2.*unknown label"):
        load_annotations(path)
    path.write_text(head + "p01,2.0,1.0,cough\n")
    with pytest.raises(CorpusError, match="line 2.*end must exceed start"):
        load_annotations(path)


def test_load_annotations_rejects_overlap(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text(
        "patient_id,start_s,end_s,label\n"
        "p01,1.0,2.0,cough\n"
        "p01,1.5,3.0,non-cough\n"
    )
    with pytest.raises(CorpusError, match="overlapping annotations.*p01"):
        load_annotations(path)


def test_load_annotations_overlap_ok_across_patients(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text(
        "patient_id,start_s,end_s,label\n"
        "p01,1.0,2.0,cough\n"
        "p02,1.5,3.0,non-cough\n"
    )
    assert len(load_annotations(path)) == 2


def test_annotations_touching_intervals_allowed(tmp_path):
    path = tmp_path / "a.csv"
    write_annotations(
        [LabeledInterval("p01", 1.0, 2.0, COUGH), LabeledInterval("p01", 2.0, 3.0, COUGH)],
        path,
    )
    assert len(load_annotations(path)) == 2


# ---------------------------------------------------------------------------
# slicing


def test_slice_events_floor_semantics():
    series = SampleSeries("p01", 100.0, np.arange(100, dtype=float))
    events = slice_events(series, [LabeledInterval("p01", 0.0, 0.1, COUGH)])
    assert len(events) == 1
    # [floor(0*100), floor(0.1*100)) = [0, 10): exactly 10 samples
    np.testing.assert_array_equal(events[0].samples, np.arange(10.0))
    assert events[0].duration_s == pytest.approx(0.1)
    assert events[0].event_id == "p01-00000"


def test_slice_events_half_open_partition():
    series = SampleSeries("p01", 100.0, np.arange(50, dtype=float))
    ivs = [
        LabeledInterval("p01", 0.0, 0.2, COUGH),
        LabeledInterval("p01", 0.2, 0.35, NON_COUGH),
        LabeledInterval("p01", 0.35, 0.5, COUGH),
    ]
    events = slice_events(series, ivs)
    joined = np.concatenate([e.samples for e in events])
    np.testing.assert_array_equal(joined, series.samples)


def test_slice_events_respects_start_time():
    series = SampleSeries("p01", 10.0, np.arange(20, dtype=float), start_time=100.0)
    events = slice_events(series, [LabeledInterval("p01", 100.5, 101.0, COUGH)])
    np.testing.assert_array_equal(events[0].samples, np.arange(5.0, 10.0))


def test_slice_events_range_errors():
    series = SampleSeries("p01", 100.0, np.arange(50, dtype=float))
    with pytest.raises(ValueError, match="outside the series span"):
        slice_events(series, [LabeledInterval("p01", 0.4, 0.6, COUGH)])
    with pytest.raises(ValueError, match="outside the series span"):
        slice_events(series, [LabeledInterval("p01", -0.1, 0.2, COUGH)])
    with pytest.raises(ValueError, match="covers no samples"):
        slice_events(series, [LabeledInterval("p01", 0.101, 0.109, COUGH)])
    with pytest.raises(ValueError, match="does not match series patient"):
        slice_events(series, [LabeledInterval("p02", 0.0, 0.1, COUGH)])


def test_slice_event_ids_enumerate_annotations():
    series = SampleSeries("p01", 100.0, np.zeros(100) + 1.0)
    ivs = [LabeledInterval("p01", 0.1 * k, 0.1 * k + 0.1, COUGH) for k in range(3)]
    events = slice_events(series, ivs)
    assert [e.event_id for e in events] == ["p01-00000", "p01-00001", "p01-00002"]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=8))
def test_slice_partition_property(lengths):
    """Disjoint covering intervals written at sample resolution partition the signal."""
    fs = 100.0
    total = sum(lengths)
    series = SampleSeries("p", fs, np.random.default_rng(0).normal(size=total))
    bounds = np.cumsum([0] + lengths)
    ivs = [
        LabeledInterval("p", (lo + 0.5) / fs, (hi + 0.5) / fs, COUGH)
        for lo, hi in zip(bounds, bounds[1:])
    ]
    events = slice_events(series, ivs)
    assert sum(len(e.samples) for e in events) == total
    np.testing.assert_array_equal(np.concatenate([e.samples for e in events]), series.samples)
    for (lo, hi), event in zip(zip(bounds, bounds[1:]), events):
        assert len(event.samples) == hi - lo
        assert math.isclose(event.duration_s, (hi - lo) / fs)


# ---------------------------------------------------------------------------
# dataset and summary


def test_dataset_accessors():
    events = [
        make_event([1.0], patient_id="b", event_id="b-0"),
        make_event([2.0], patient_id="a", label=NON_COUGH, event_id="a-0"),
        make_event([3.0], patient_id="a", event_id="a-1"),
    ]
    ds = Dataset(events=tuple(events))
    assert ds.patients == ["a", "b"]
    assert [e.event_id for e in ds.events_for("a")] == ["a-0", "a-1"]
    np.testing.assert_array_equal(ds.labels(), [1, 0, 1])


def test_dataset_summary_counts_and_durations():
    events = [
        make_event(np.zeros(100), patient_id="a", label=COUGH, event_id="a-0"),
        make_event(np.zeros(50), patient_id="a", label=NON_COUGH, event_id="a-1"),
        make_event(np.zeros(150), patient_id="b", label=NON_COUGH, event_id="b-0"),
    ]
    summary = dataset_summary(Dataset(events=tuple(events)))
    assert [r.patient_id for r in summary.rows] == ["a", "b"]
    a, b = summary.rows
    assert (a.cough_count, a.non_cough_count) == (1, 1)
    assert a.cough_seconds == pytest.approx(1.0)
    assert a.non_cough_seconds == pytest.approx(0.5)
    assert (b.cough_count, b.non_cough_count) == (0, 1)
    total = summary.total
    assert total.patient_id == "TOTAL"
    assert (total.cough_count, total.non_cough_count) == (1, 2)
    assert total.cough_seconds == pytest.approx(1.0)
    assert total.non_cough_seconds == pytest.approx(2.0)


# Per-patient inventory of the 14-patient clinical recording campaign this
# pipeline is sized for; the totals row must reproduce the column sums.
CLINICAL_ROWS = [
    ("P1", 88, 973, 169.16, 1660.67),
    ("P2", 63, 1111, 117.67, 1891.92),
    ("P3", 469, 11025, 893.91, 18797.32),
    ("P4", 109, 9151, 204.06, 15596.71),
    ("P5", 97, 7826, 188.26, 13344.98),
    ("P6", 192, 12437, 360.72, 21197.35),
    ("P7", 436, 14053, 825.23, 23953.15),
    ("P8", 368, 2977, 702.05, 5077.89),
    ("P9", 2816, 3856, 5345.27, 6569.32),
    ("P10", 649, 2579, 1236.84, 4400.42),
    ("P11", 205, 527, 391.42, 901.38),
    ("P12", 213, 323, 402.61, 547.62),
    ("P13", 213, 712, 401.61, 1211.75),
    ("P14", 82, 455, 158.77, 777.64),
]


def test_summary_totals_at_clinical_scale():
    rows = [SummaryRow(*r) for r in CLINICAL_ROWS]
    total = DatasetSummary(tuple(rows)).total
    assert total.cough_count == 6000
    assert total.non_cough_count == 68005
    assert total.cough_seconds == pytest.approx(11397.58, abs=1e-9)
    assert round(total.cough_seconds, 1) == 11397.6
    assert total.non_cough_seconds == pytest.approx(115928.12, abs=1e-6)


def test_summary_renderings():
    rows = (SummaryRow("a", 1, 2, 1.0, 0.5),)
    summary = DatasetSummary(rows)
    csv_text = summary_to_csv(summary)
    lines = csv_text.splitlines()
    assert lines[0] == "patient_id,coughs,non_coughs,cough_time_s,non_cough_time_s"
    assert lines[1] == "a,1,2,1.00,0.50"
    assert lines[2].startswith("TOTAL,1,2,")
    text = summary_to_text(summary)
    assert "TOTAL" in text and "patient_id" in text


# ---------------------------------------------------------------------------
# corpus directories


def test_corpus_directory_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    series = [
        SampleSeries("p01", 100.0, rng.normal(9.81, 0.2, 400)),
        SampleSeries("p02", 100.0, rng.normal(9.81, 0.2, 300)),
    ]
    ivs = [
        LabeledInterval("p01", 0.105, 0.505, COUGH),
        LabeledInterval("p01", 1.005, 2.005, NON_COUGH),
        LabeledInterval("p02", 0.505, 1.505, NON_COUGH),
    ]
    write_corpus(tmp_path, series, ivs, manifest={"kind": "test"})
    assert (tmp_path / "manifest.json").exists()
    ds = load_corpus(tmp_path)
    assert len(ds.events) == 3
    assert ds.patients == ["p01", "p02"]
    by_id = {e.event_id: e for e in ds.events}
    np.testing.assert_array_equal(by_id["p01-00000"].samples, series[0].samples[10:50])
    np.testing.assert_array_equal(by_id["p02-00000"].samples, series[1].samples[50:150])


def test_load_corpus_requires_annotations(tmp_path):
    (tmp_path / "signals").mkdir()
    with pytest.raises(FileNotFoundError, match="annotations.csv"):
        load_corpus(tmp_path)
