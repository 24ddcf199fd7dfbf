import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_auroc
from respews.alarms import (
    EventPrCounts,
    SplitCurve,
    alarm_timing,
    default_thresholds,
    event_pr,
    silence,
    sweep_thresholds,
    timepoint_roc,
)
from respews.errors import ConfigError

MIN30 = 30 * 60
H = 3600


def brute_force_event_pr(alarms, starts, horizon):
    n_true = sum(1 for a in alarms if any(a < s <= a + horizon for s in starts))
    n_caught = sum(1 for s in starts if any(s - horizon <= a < s for a in alarms))
    return len(alarms), n_true, len(starts), n_caught


# -- silence -----------------------------------------------------------------

def test_silence_example_trace():
    times = np.array([0, 10, 20, 40]) * 60
    scores = np.array([1.0, 1.0, 1.0, 1.0])
    alarms = silence(times, scores, 0.5)
    assert alarms.tolist() == [0, 40 * 60]


def test_silence_no_crossing():
    alarms = silence(np.arange(0, 10000, 300), np.zeros(34), 0.5)
    assert len(alarms) == 0


def test_silence_exact_boundary_fires():
    times = np.array([0, MIN30])
    alarms = silence(times, np.ones(2), 0.5)
    assert alarms.tolist() == [0, MIN30]


def test_silence_requires_positive_period():
    with pytest.raises(ConfigError):
        silence(np.array([0]), np.array([1.0]), 0.5, silence_s=0)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_silence_min_gap_property(seed):
    rng = np.random.default_rng(seed)
    n = 200
    times = np.sort(rng.choice(np.arange(0, n * 300, 300), size=n, replace=False))
    scores = rng.uniform(size=n)
    alarms = silence(times, scores, 0.4)
    assert np.all(np.diff(alarms) >= MIN30)
    # brute-force recheck of the greedy rule
    expected = []
    last = None
    for t, s in zip(times, scores):
        if s >= 0.4 and (last is None or t - last >= MIN30):
            expected.append(t)
            last = t
    assert alarms.tolist() == expected


# -- event_pr -----------------------------------------------------------------

def test_event_pr_two_true_alarms():
    counts = event_pr(np.array([3 * H, 5 * H]), np.array([10 * H]))
    assert (counts.precision, counts.recall) == (1.0, 1.0)


def test_event_pr_false_alarm():
    counts = event_pr(np.array([1 * H]), np.array([10 * H]))
    assert counts.precision == 0.0 and counts.recall == 0.0


def test_event_pr_boundary_exactly_horizon():
    counts = event_pr(np.array([2 * H]), np.array([10 * H]))
    assert counts.precision == 1.0  # start within (a, a+8h], inclusive at 8 h


def test_event_pr_alarm_at_onset_not_true():
    counts = event_pr(np.array([10 * H]), np.array([10 * H]))
    assert counts.n_true_alarms == 0 and counts.n_caught == 0


def test_event_pr_undefined_cases():
    no_alarms = event_pr(np.array([]), np.array([5 * H]))
    assert no_alarms.precision is None and no_alarms.recall == 0.0
    no_events = event_pr(np.array([5 * H]), np.array([]))
    assert no_events.recall is None and no_events.precision == 0.0


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 400), max_size=50),
    st.lists(st.integers(0, 400), max_size=50),
)
def test_event_pr_matches_brute_force(alarm_slots, start_slots):
    alarms = np.unique(np.array(sorted(alarm_slots), dtype=np.int64) * 300)
    starts = np.unique(np.array(sorted(start_slots), dtype=np.int64) * 300)
    counts = event_pr(alarms, starts, 8 * H)
    expect = brute_force_event_pr(alarms.tolist(), starts.tolist(), 8 * H)
    assert (counts.n_alarms, counts.n_true_alarms, counts.n_events, counts.n_caught) == expect


def test_counts_aggregation():
    total = EventPrCounts()
    total += EventPrCounts(2, 1, 1, 1)
    total += EventPrCounts(3, 0, 2, 0)
    assert total.precision == pytest.approx(0.2)
    assert total.recall == pytest.approx(1 / 3)


# -- alarm timing -----------------------------------------------------------------

def test_alarm_timing_trace():
    timing = alarm_timing(np.array([6 * H, 7 * H, 9 * H]), np.array([10 * H]))
    assert timing.leads_s == [4 * H]
    assert timing.alarms_per_event == [3]


def test_alarm_timing_inclusive_horizon_boundary():
    timing = alarm_timing(np.array([2 * H]), np.array([10 * H]))
    assert timing.leads_s == [8 * H]


def test_alarm_timing_no_caught_events():
    timing = alarm_timing(np.array([]), np.array([10 * H]))
    assert timing.median_lead_s is None
    assert timing.mean_alarms_per_caught_event is None


# -- time-point ROC ----------------------------------------------------------------

def test_roc_perfect_separation():
    scores = np.r_[np.ones(10), np.zeros(10)]
    labels = np.r_[np.ones(10), np.zeros(10)]
    _, _, auroc = timepoint_roc(scores, labels)
    assert auroc == 1.0


def test_roc_matches_mann_whitney_brute_force():
    rng = np.random.default_rng(0)
    scores = np.round(rng.uniform(size=1000), 2)  # ties included
    labels = (rng.uniform(size=1000) < 0.3).astype(int)
    _, _, auroc = timepoint_roc(scores, labels)
    assert auroc == pytest.approx(brute_force_auroc(scores, labels), abs=1e-9)


def test_roc_single_class_error():
    with pytest.raises(ConfigError):
        timepoint_roc(np.array([0.5, 0.6]), np.array([1, 1]))


def test_roc_permutation_null():
    rng = np.random.default_rng(1)
    scores = rng.uniform(size=20000)
    labels = (rng.uniform(size=20000) < 0.5).astype(int)
    _, _, auroc = timepoint_roc(scores, labels)
    assert auroc == pytest.approx(0.5, abs=0.02)


# -- threshold sweeps ---------------------------------------------------------------

def _perfect_split_series():
    """One stay: event at 12 h; scores 1 inside the pre-event horizon, 0 elsewhere."""
    times = np.arange(0, 20 * H, 300)
    starts = np.array([12 * H])
    inside = (times >= 4 * H) & (times < 12 * H)
    scores = np.where(inside, 1.0, 0.0)
    keep = ~((times >= 12 * H) & (times <= 15 * H))  # no scores inside the event
    return [(times[keep], scores[keep], starts)], int(inside[keep].sum()), int(keep.sum())


def test_sweep_perfect_scores_reach_perfect_corner():
    series, positives, defined = _perfect_split_series()
    curve = sweep_thresholds(series, np.array([0.5, 1.0]), positives, defined)
    assert curve.recall[1] == 1.0 and curve.precision[1] == 1.0
    assert curve.auprc == 1.0


def test_sweep_single_split_zero_std():
    from respews.alarms import EventPrReport

    series, positives, defined = _perfect_split_series()
    curve = sweep_thresholds(series, np.array([0.2, 0.7]), positives, defined)
    report = EventPrReport(method="x", splits=[curve])
    assert np.all(report.std_precision == 0.0)


def test_threshold_monotonicity_alarm_count_and_recall():
    rng = np.random.default_rng(2)
    times = np.arange(0, 48 * H, 300)
    scores = rng.uniform(size=len(times))
    starts = np.array([15 * H, 30 * H])
    thresholds = np.linspace(0.02, 0.98, 50)
    alarm_counts, recalls = [], []
    for thr in thresholds:
        alarms = silence(times, scores, thr)
        counts = event_pr(alarms, starts)
        alarm_counts.append(counts.n_alarms)
        recalls.append(counts.recall)
    # lowering the threshold never decreases alarms or event recall
    assert np.all(np.diff(alarm_counts) <= 0)
    assert np.all(np.diff(recalls) <= 1e-12)


def test_default_thresholds_are_unique_and_cover():
    scores = np.array([0.1, 0.4, 0.4, 0.9, np.nan])
    thr = default_thresholds(scores, 11)
    assert np.all(np.diff(thr) > 0)
    assert thr[0] == 0.1 and thr[-1] == 0.9
