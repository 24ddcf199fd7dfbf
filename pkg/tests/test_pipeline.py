import numpy as np
import pytest

from respews.cohort.synth import ScenarioConfig, generate_synthetic_cohort
from respews.labels import LABEL_NEG, LABEL_POS, LABEL_UNDEF
from respews.pipeline import featurize_cohort, label_cohort, label_stay
from respews.variables import DEFAULT_VARIABLES

H = 3600


def test_planted_four_hour_episode_yields_one_covering_event():
    cfg = ScenarioConfig(
        n_stays=1, failure_fraction=1.0, distractor_fraction=0.0,
        ventilated_stable_fraction=0.0, stay_hours=(26.0, 26.0),
        episode_hours=(4.0, 4.0), precursor_hours=(3.0, 4.0),
    )
    cohort = generate_synthetic_cohort(21, 1, cfg)
    sid = cohort.stay_ids[0]
    planted = cohort.planted_events[sid]
    assert len(planted) == 1
    p_start, p_end = planted[0]
    assert p_end - p_start >= 4 * H  # designed low-P/F span sustains at least 4 h
    labels = label_stay(cohort[sid])
    assert len(labels.events) == 1
    event = labels.events[0]
    # labeled event tracks the planted interval within quorum-window slack
    assert abs(event.start - p_start) <= 1 * H
    assert abs(event.end - p_end) <= 2 * H


def test_failure_fraction_zero_labeler_finds_nothing():
    cfg = ScenarioConfig(n_stays=10, failure_fraction=0.0, distractor_fraction=0.3,
                         ventilated_stable_fraction=0.2, stay_hours=(20, 28))
    cohort = generate_synthetic_cohort(13, 10, cfg)
    labeled = label_cohort(cohort)
    assert all(not labeled[sid].events for sid in cohort.stay_ids)
    for sid in cohort.stay_ids:
        assert np.all(labeled[sid].labels == LABEL_NEG)


def test_planted_and_labeled_events_agree_across_cohort(small_cohort, small_labeled):
    for sid in small_cohort.stay_ids:
        planted = small_cohort.planted_events[sid]
        events = small_labeled[sid].events
        assert len(planted) == len(events), sid
        for (p_start, p_end), event in zip(planted, events):
            assert abs(event.start - p_start) <= 1 * H
            assert abs(event.end - p_end) <= 2 * H


def test_labels_respect_event_geometry(small_cohort, small_labeled):
    for sid in small_cohort.stay_ids:
        labels = small_labeled[sid].labels
        events = small_labeled[sid].events
        step = small_cohort[sid].grid_step
        starts = np.array([e.start for e in events], dtype=np.int64)
        for i in np.flatnonzero(labels == LABEL_POS):
            t = i * step
            assert np.any((starts > t) & (starts <= t + 8 * H))
        for i in np.flatnonzero(labels == LABEL_UNDEF):
            t = i * step
            assert any(e.start <= t <= e.end for e in events)


def test_derived_fio2_channel_attached(small_cohort, small_labeled):
    sid = small_cohort.stay_ids[0]
    stay = small_cohort[sid]
    assert "fio2_estimate" in stay.gridded
    assert len(stay.gridded["fio2_estimate"]) == stay.n_grid
    assert np.all(stay.gridded["fio2_estimate"] >= 0.21)


def test_featurize_cohort_schema_and_rows(small_cohort, small_labeled):
    matrix = featurize_cohort(small_cohort, small_labeled, DEFAULT_VARIABLES)
    expected_rows = sum(int(np.sum(small_labeled[sid].labels != LABEL_UNDEF)) for sid in small_cohort.stay_ids)
    assert len(matrix) == expected_rows
    assert "spo2:current" in matrix.columns
    assert "fio2_estimate:current" in matrix.columns
    assert matrix.X.shape == (expected_rows, len(matrix.columns))
    assert not np.isnan(matrix.y).any()


def test_label_cohort_parallel_matches_serial(small_cohort):
    serial = label_cohort(small_cohort)
    parallel = label_cohort(small_cohort, jobs=4)
    for sid in small_cohort.stay_ids:
        assert serial[sid].events == parallel[sid].events
        assert np.array_equal(serial[sid].labels, parallel[sid].labels)


def test_track_sources_and_quality(small_cohort, small_labeled):
    sid = small_cohort.stay_ids[0]
    track = small_labeled[sid].track
    defined = np.isfinite(track.pf)
    assert defined.any()
    assert np.all(track.fio2_est[defined] >= 0.21)
    assert np.all(track.pf[defined] == track.pao2_est[defined] / track.fio2_est[defined])
