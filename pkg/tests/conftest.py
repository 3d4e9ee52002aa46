"""Shared fixtures: tiny deterministic corpora so most tests avoid heavy runs."""

import numpy as np
import pytest

from accelcough.corpus import Event
from accelcough.synth import SynthConfig, generate_corpus


def make_event(samples, label="cough", patient_id="p01", event_id="p01-00000"):
    samples = np.asarray(samples, dtype=np.float64)
    return Event(patient_id=patient_id, label=label, samples=samples,
                 duration_s=len(samples) / 100.0, event_id=event_id)


TINY_SYNTH = SynthConfig(n_patients=3, coughs_per_patient=4, non_coughs_per_patient=8,
                         seed=7)


@pytest.fixture(scope="session")
def tiny_corpus():
    """3 patients x 12 events; enough structure for fold and pipeline tests."""
    return generate_corpus(TINY_SYNTH)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_corpus):
    return tiny_corpus[2]


@pytest.fixture(scope="session")
def tiny_features(tiny_dataset):
    from accelcough.features import FeatureExtractor

    X = FeatureExtractor(frame_len=16, segments=5).transform(tiny_dataset.events)
    return X, tiny_dataset.labels()
