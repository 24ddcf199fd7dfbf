import numpy as np
import pytest

from respews.cohort.synth import ScenarioConfig, generate_synthetic_cohort
from respews.pipeline import label_cohort


SMALL_SCENARIO = ScenarioConfig(
    n_stays=24,
    failure_fraction=0.45,
    distractor_fraction=0.25,
    ventilated_stable_fraction=0.1,
    stay_hours=(22.0, 30.0),
    episode_hours=(3.0, 6.0),
    precursor_hours=(1.5, 6.0),
)


@pytest.fixture(scope="session")
def small_cohort():
    return generate_synthetic_cohort(11, 24, SMALL_SCENARIO)


@pytest.fixture(scope="session")
def small_labeled(small_cohort):
    return label_cohort(small_cohort)


def brute_force_auroc(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return wins / (len(pos) * len(neg))
