"""Seeded synthetic accelerometer corpus: gravity + noise + injected events.

Coughs are sharp damped-sinusoid bursts in a mid-frequency band; non-cough
movements default to slow drifts (< 3 Hz) with a mild higher-frequency texture
so their peak energy overlaps the cough range. Both ride on a gravity baseline
with white sensor noise. Amplitudes are absolute, not noise-relative: raising
``noise_rms`` with everything else fixed genuinely buries the weak events.

Every random draw descends from ``SynthConfig.seed`` through one
``SeedSequence([seed, patient_index])`` per patient, so a corpus is fully
reproducible and each patient's signal is independent of how many other
patients are generated.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .corpus import (
    COUGH,
    NON_COUGH,
    Dataset,
    LabeledInterval,
    SampleSeries,
    label_to_int,
    slice_events,
    write_corpus,
)
from .detect import energy_event_scores
from .evaluation import auc_score

CORPUS_FORMAT = "accelcough.corpus/1"

DRIFT_BAND_HZ = (0.3, 3.0)
TEXTURE_BAND_HZ = (3.0, 8.0)
MOVEMENT_MODELS = ("drift", "cough")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the generator; defaults produce the 14-patient benchmark corpus
    (8 coughs and 88 movements per patient, roughly the 1:11 field imbalance).

    ``movement_model="cough"`` draws non-cough events from the cough burst
    model instead of the drift model; with matching amplitude and duration
    ranges the two classes become statistically identical, which pins the
    energy baseline to chance and is useful for calibrating tests.
    """

    n_patients: int = 14
    sample_rate_hz: float = 100.0
    coughs_per_patient: int = 8
    non_coughs_per_patient: int = 88
    gravity: float = 9.81
    noise_rms: float = 0.05
    cough_amp_min: float = 0.15
    cough_amp_max: float = 0.50
    cough_freq_min_hz: float = 8.0
    cough_freq_max_hz: float = 35.0
    cough_decay_min_per_s: float = 2.0
    cough_decay_max_per_s: float = 10.0
    cough_dur_min_s: float = 0.3
    cough_dur_max_s: float = 3.0
    noncough_amp_min: float = 0.15
    noncough_amp_max: float = 0.50
    noncough_texture: float = 0.6
    noncough_dur_min_s: float = 0.5
    noncough_dur_max_s: float = 2.0
    movement_model: str = "drift"
    gap_min_s: float = 0.4
    gap_max_s: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.n_patients < 0:
            raise ValueError("n_patients must be >= 0")
        if self.coughs_per_patient < 0 or self.non_coughs_per_patient < 0:
            raise ValueError("per-patient event counts must be >= 0")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be > 0")
        if self.noise_rms < 0:
            raise ValueError("noise_rms must be >= 0")
        if not 0.0 <= self.noncough_texture <= 1.0:
            raise ValueError("noncough_texture must be in [0, 1]")
        if self.movement_model not in MOVEMENT_MODELS:
            raise ValueError(
                f"movement_model must be one of {MOVEMENT_MODELS}, got {self.movement_model!r}"
            )
        for lo_name, hi_name in (
            ("cough_amp_min", "cough_amp_max"),
            ("noncough_amp_min", "noncough_amp_max"),
            ("cough_dur_min_s", "cough_dur_max_s"),
            ("noncough_dur_min_s", "noncough_dur_max_s"),
            ("gap_min_s", "gap_max_s"),
            ("cough_freq_min_hz", "cough_freq_max_hz"),
            ("cough_decay_min_per_s", "cough_decay_max_per_s"),
        ):
            lo, hi = getattr(self, lo_name), getattr(self, hi_name)
            if lo <= 0:
                raise ValueError(f"{lo_name} must be > 0, got {lo}")
            if lo > hi:
                raise ValueError(f"{lo_name} ({lo}) must not exceed {hi_name} ({hi})")
        nyquist = self.sample_rate_hz / 2.0
        if self.cough_freq_max_hz >= nyquist:
            raise ValueError(
                f"cough_freq_max_hz ({self.cough_freq_max_hz}) must stay below the "
                f"Nyquist frequency {nyquist}"
            )
        if TEXTURE_BAND_HZ[1] >= nyquist:
            raise ValueError(
                f"sample_rate_hz {self.sample_rate_hz} is too low for the "
                f"{TEXTURE_BAND_HZ[1]} Hz movement texture band"
            )


def cough_waveform(n, amp, rng, cfg: SynthConfig):
    """A burst of 2..3 damped sinusoids with a short attack ramp, peak |x| = amp."""
    t = np.arange(n) / cfg.sample_rate_hz
    x = np.zeros(n)
    for _ in range(int(rng.integers(2, 4))):
        freq = rng.uniform(cfg.cough_freq_min_hz, cfg.cough_freq_max_hz)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        decay = rng.uniform(cfg.cough_decay_min_per_s, cfg.cough_decay_max_per_s)
        x += rng.uniform(0.5, 1.0) * np.sin(2.0 * np.pi * freq * t + phase) * np.exp(-decay * t)
    attack = max(2, int(round(0.08 * min(n, cfg.sample_rate_hz * 0.5))))
    x[:attack] *= np.linspace(1.0 / attack, 1.0, attack)
    peak = np.max(np.abs(x))
    if peak == 0.0:
        x[:] = 1.0
        peak = 1.0
    return x * (amp / peak)


def movement_waveform(n, amp, texture, rng, sample_rate_hz):
    """A slow drift under a smooth strictly-positive envelope, peak |x| = amp.

    ``texture`` in [0, 1] mixes in a 3..8 Hz component; without it the energy
    detector would separate drifts from coughs almost perfectly and the corpus
    would say nothing about the learned classifiers.
    """
    t = np.arange(n) / sample_rate_hz
    slow = np.zeros(n)
    for _ in range(int(rng.integers(2, 5))):
        freq = rng.uniform(*DRIFT_BAND_HZ)
        slow += rng.uniform(0.5, 1.0) * np.sin(2.0 * np.pi * freq * t + rng.uniform(0.0, 2.0 * np.pi))
    envelope = np.hanning(n + 2)[1:-1]
    x = slow * envelope
    peak = np.max(np.abs(x))
    x = x / peak if peak > 0 else envelope.copy()
    if texture > 0:
        tex = np.zeros(n)
        for _ in range(2):
            freq = rng.uniform(*TEXTURE_BAND_HZ)
            tex += np.sin(2.0 * np.pi * freq * t + rng.uniform(0.0, 2.0 * np.pi))
        tex *= envelope
        tex_peak = np.max(np.abs(tex))
        if tex_peak > 0:
            x = x + texture * rng.uniform(0.4, 1.0) * tex / tex_peak
    peak = np.max(np.abs(x))
    return x * (amp / peak)


def _duration_samples(rng, dur_min_s, dur_max_s, sample_rate_hz):
    return max(2, int(round(rng.uniform(dur_min_s, dur_max_s) * sample_rate_hz)))


def _gap_samples(rng, cfg):
    return max(1, int(round(rng.uniform(cfg.gap_min_s, cfg.gap_max_s) * cfg.sample_rate_hz)))


def _generate_patient(patient_id, cfg, rng):
    fs = cfg.sample_rate_hz
    kinds = [COUGH] * cfg.coughs_per_patient + [NON_COUGH] * cfg.non_coughs_per_patient
    order = rng.permutation(len(kinds))

    pieces = []
    pos = _gap_samples(rng, cfg)
    for idx in order:
        label = kinds[idx]
        if label == COUGH:
            n = _duration_samples(rng, cfg.cough_dur_min_s, cfg.cough_dur_max_s, fs)
            amp = rng.uniform(cfg.cough_amp_min, cfg.cough_amp_max)
            wf = cough_waveform(n, amp, rng, cfg)
        else:
            n = _duration_samples(rng, cfg.noncough_dur_min_s, cfg.noncough_dur_max_s, fs)
            amp = rng.uniform(cfg.noncough_amp_min, cfg.noncough_amp_max)
            if cfg.movement_model == "cough":
                wf = cough_waveform(n, amp, rng, cfg)
            else:
                wf = movement_waveform(n, amp, cfg.noncough_texture, rng, fs)
        pieces.append((pos, wf, label))
        pos += n + _gap_samples(rng, cfg)

    signal = cfg.gravity + rng.normal(0.0, cfg.noise_rms, pos)
    intervals = []
    for lo, wf, label in pieces:
        hi = lo + len(wf)
        signal[lo:hi] += wf
        # Half-sample offsets so floor(start_s * fs) recovers exactly [lo, hi)
        # regardless of which way lo/fs rounded in binary.
        intervals.append(LabeledInterval(patient_id, (lo + 0.5) / fs, (hi + 0.5) / fs, label))
    return SampleSeries(patient_id=patient_id, sample_rate_hz=fs, samples=signal), intervals


def generate_corpus(cfg: SynthConfig):
    """Generate all patients; returns (series_list, intervals, dataset).

    The dataset is produced by slicing the annotations back out of the
    signals, the same path a corpus loaded from disk takes.
    """
    series_list = []
    intervals = []
    events = []
    for i in range(cfg.n_patients):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, i]))
        series, ivs = _generate_patient(f"P{i + 1:02d}", cfg, rng)
        series_list.append(series)
        intervals.extend(ivs)
        events.extend(slice_events(series, ivs))
    return series_list, intervals, Dataset(events=tuple(events))


def generate_dataset(cfg: SynthConfig) -> Dataset:
    """Generate and return just the sliced event Dataset."""
    return generate_corpus(cfg)[2]


def write_synth_corpus(directory, cfg: SynthConfig):
    """Generate a corpus and write the on-disk layout plus a manifest.

    The manifest records the full config and derived counts with sorted keys
    and no timestamps, so identical configs produce byte-identical trees.
    """
    series_list, intervals, dataset = generate_corpus(cfg)
    manifest = {
        "format": CORPUS_FORMAT,
        "generator": "accelcough.synth",
        "config": asdict(cfg),
        "n_patients": cfg.n_patients,
        "n_events": len(intervals),
        "n_cough": sum(1 for iv in intervals if iv.label == COUGH),
        "n_non_cough": sum(1 for iv in intervals if iv.label == NON_COUGH),
        "total_samples": int(sum(len(s.samples) for s in series_list)),
    }
    write_corpus(directory, series_list, intervals, manifest)
    return series_list, intervals, dataset


def energy_baseline_auc(dataset: Dataset, window_len=16, hop=8):
    """Mean per-patient AUC of the energy-only scorer on an event dataset.

    Patients with a single class are skipped; at least one patient must have
    both classes.
    """
    per_patient = []
    for patient_id in dataset.patients:
        events = dataset.events_for(patient_id)
        labels = np.array([label_to_int(e.label) for e in events])
        if labels.min() == labels.max():
            continue
        scores = energy_event_scores(events, window_len=window_len, hop=hop)
        per_patient.append(auc_score(scores, labels))
    if not per_patient:
        raise ValueError("no patient has both classes; baseline AUC is undefined")
    return float(np.mean(per_patient))


def corpus_difficulty(cfg: SynthConfig, window_len=16, hop=8):
    """Separability of the corpus a config generates, as the energy-baseline AUC.

    1.0 means trivially separable by amplitude alone; 0.5 means the baseline
    is at chance and only waveform shape can tell the classes apart.
    """
    return energy_baseline_auc(generate_dataset(cfg), window_len=window_len, hop=hop)
