"""Energy-threshold detection of candidate events in a magnitude stream.

The detector computes a short-time energy track (mean squared deviation from
the window mean, so the gravity DC offset never triggers), estimates the noise
floor as the median window energy, and keeps maximal runs of frames whose
energy exceeds ``threshold * noise_floor``. Nearby runs are merged, short runs
dropped.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator

from .corpus import SampleSeries
from .validation import as_float_array, check_positive


def short_time_energy(samples, window_len, hop):
    """Windowed energy track.

    Returns ``(frame_starts, energies)`` with one entry per full window at
    stride ``hop``; energy is the mean of squared mean-removed samples, so a
    constant signal has energy exactly 0.
    """
    x = as_float_array(samples, "samples")
    check_positive(window_len, "window_len")
    if not 1 <= hop <= window_len:
        raise ValueError(f"hop must be in [1, window_len], got {hop}")
    if len(x) < window_len:
        raise ValueError(f"series of length {len(x)} is shorter than window_len {window_len}")
    windows = sliding_window_view(x, window_len)[::hop]
    energies = windows.var(axis=1)
    starts = np.arange(len(windows)) * hop
    return starts, energies


def noise_floor(energies):
    """Median short-time energy, the scale-free detection reference."""
    return float(np.median(np.asarray(energies)))


def detect_events(frame_starts, energies, window_len, threshold, min_event_len, merge_gap,
                  floor=None):
    """Threshold the energy track into sample-index intervals.

    Maximal runs of frames with ``energy > threshold * floor`` become half-open
    sample intervals; runs closer than ``merge_gap`` samples are merged, then
    intervals shorter than ``min_event_len`` samples are dropped. The result is
    sorted and disjoint.
    """
    frame_starts = np.asarray(frame_starts)
    energies = np.asarray(energies, dtype=np.float64)
    if frame_starts.shape != energies.shape:
        raise ValueError("frame_starts and energies must align")
    if floor is None:
        floor = noise_floor(energies)

    active = energies > threshold * floor
    intervals = []
    run_start = None
    for k, flag in enumerate(active):
        if flag and run_start is None:
            run_start = k
        elif not flag and run_start is not None:
            intervals.append((int(frame_starts[run_start]), int(frame_starts[k - 1]) + window_len))
            run_start = None
    if run_start is not None:
        intervals.append((int(frame_starts[run_start]), int(frame_starts[len(active) - 1]) + window_len))

    merged = []
    for lo, hi in intervals:
        if merged and lo - merged[-1][1] < merge_gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))

    return [(lo, hi) for lo, hi in merged if hi - lo >= min_event_len]


class EnergyDetector(BaseEstimator):
    """Stateless event detector with the capture-trigger defaults.

    Parameters
    ----------
    window_len : int
        Energy window length in samples.
    hop : int
        Window stride in samples, ``1 <= hop <= window_len``.
    threshold : float
        Multiplier on the noise floor (median window energy).
    min_event_len : int
        Minimum event length in samples (0.2 s at 100 Hz by default).
    merge_gap : int
        Runs separated by fewer samples than this are merged.
    """

    def __init__(self, window_len=16, hop=8, threshold=4.0, min_event_len=20, merge_gap=30):
        self.window_len = window_len
        self.hop = hop
        self.threshold = threshold
        self.min_event_len = min_event_len
        self.merge_gap = merge_gap

    def _validate(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if not 1 <= self.hop <= self.window_len:
            raise ValueError("hop must satisfy 1 <= hop <= window_len")
        if self.min_event_len < 1:
            raise ValueError("min_event_len must be >= 1")
        if self.merge_gap < 0:
            raise ValueError("merge_gap must be >= 0")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")

    def detect(self, samples):
        """Detect events in a raw sample array; returns (start, end) index pairs."""
        self._validate()
        starts, energies = short_time_energy(samples, self.window_len, self.hop)
        return detect_events(starts, energies, self.window_len, self.threshold,
                             self.min_event_len, self.merge_gap)

    def detect_series(self, series: SampleSeries):
        """Detect events in a SampleSeries; returns (start_s, end_s) pairs."""
        fs = series.sample_rate_hz
        return [
            (series.start_time + lo / fs, series.start_time + hi / fs)
            for lo, hi in self.detect(series.samples)
        ]


def energy_event_scores(events, window_len=16, hop=8):
    """Score already-sliced events by peak short-time energy (log scale).

    This is the no-learning reference classifier: an event is scored by the
    largest windowed energy anywhere inside it, so a trained model is only
    interesting if it beats these scores. Events shorter than ``window_len``
    are zero-padded.
    """
    scores = np.empty(len(events), dtype=np.float64)
    for i, event in enumerate(events):
        x = event.samples
        if len(x) < window_len:
            x = np.concatenate([x, np.zeros(window_len - len(x))])
        _, energies = short_time_energy(x, window_len, hop)
        scores[i] = np.log10(energies.max() + 1e-300)
    return scores
