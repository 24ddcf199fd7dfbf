import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from respews.errors import ConfigError
from respews.labels import (
    LABEL_NEG,
    LABEL_POS,
    LABEL_UNDEF,
    FailureEvent,
    annotate_state,
    build_events,
    events_from_json,
    events_to_json,
    failure_condition,
    make_labels,
)

H = 3600
STEP = 300


# -- independent brute-force reference ---------------------------------------

def oracle_state(condition, defined, step, window_s=2 * H):
    n = len(condition)
    w = window_s // step
    flags = np.zeros(n, dtype=bool)
    for t in range(n):
        n_def = n_sat = 0
        for j in range(t, min(t + w, n)):
            if defined[j]:
                n_def += 1
                if condition[j]:
                    n_sat += 1
        flags[t] = n_def >= 1 and 3 * n_sat >= 2 * n_def
    return flags


def oracle_events(state, step, merge_gap_s=1 * H, min_event_s=2 * H):
    spans = []
    t = 0
    n = len(state)
    while t < n:
        if state[t]:
            u = t
            while u + 1 < n and state[u + 1]:
                u += 1
            spans.append([t * step, u * step])
            t = u + 1
        else:
            t += 1
    changed = True
    while changed:  # literal fixed-point iteration of the merge relation
        changed = False
        for i in range(len(spans) - 1):
            if spans[i + 1][0] - spans[i][1] <= merge_gap_s:
                spans[i][1] = spans[i + 1][1]
                del spans[i + 1]
                changed = True
                break
    return [(a, b) for a, b in spans if b - a > min_event_s]


def oracle_labels(events, n, step, horizon_s=8 * H):
    labels = np.zeros(n, dtype=np.int8)
    for i in range(n):
        t = i * step
        if any(a <= t <= b for a, b in events):
            labels[i] = LABEL_UNDEF
        elif any(t < a <= t + horizon_s for a, b in events):
            labels[i] = LABEL_POS
        else:
            labels[i] = LABEL_NEG
    return labels


# -- failure_condition ---------------------------------------------------------

def test_condition_ventilated_with_peep():
    cond, flagged = failure_condition([150.0], [True], [8.0])
    assert cond.tolist() == [True] and flagged == 0


def test_condition_ventilated_low_peep():
    cond, _ = failure_condition([150.0], [True], [3.0])
    assert cond.tolist() == [False]


def test_condition_not_ventilated_threshold():
    cond, _ = failure_condition([250.0], [False], [np.nan])
    assert cond.tolist() == [False]
    cond, _ = failure_condition([199.9], [False], [np.nan])
    assert cond.tolist() == [True]


def test_condition_missing_peep_flagged():
    cond, flagged = failure_condition([150.0], [True], [np.nan])
    assert cond.tolist() == [False]
    assert flagged == 1


# -- annotate_state -------------------------------------------------------------

def test_quorum_boundary_16_of_24():
    defined = np.ones(24, dtype=bool)
    for n_sat, expect in ((16, True), (15, False)):
        condition = np.zeros(24, dtype=bool)
        condition[:n_sat] = True
        flags = annotate_state(condition, defined, STEP)
        assert bool(flags[0]) is expect
        assert flags[0] == oracle_state(condition, defined, STEP)[0]


def test_all_points_satisfying():
    condition = np.ones(30, dtype=bool)
    flags = annotate_state(condition, np.ones(30, dtype=bool), STEP)
    assert flags.all()


def test_stable_track_never_flagged():
    pf = np.full(60, 300.0)
    condition, _ = failure_condition(pf, np.zeros(60, bool), np.full(60, np.nan))
    flags = annotate_state(condition, np.isfinite(pf), STEP)
    assert not flags.any()


def test_truncated_window_policies():
    condition = np.array([True] * 5)
    defined = np.ones(5, dtype=bool)
    assert annotate_state(condition, defined, STEP, truncated="quorum").all()
    flags = annotate_state(condition, defined, STEP, truncated="unflagged")
    assert not flags.any()  # every window is shorter than 2 h here


def test_grid_must_divide_window():
    with pytest.raises(ConfigError):
        annotate_state(np.ones(4, bool), np.ones(4, bool), 7 * 60)


# -- build_events ----------------------------------------------------------------

def test_merge_then_keep():
    state = np.zeros(80, dtype=bool)
    state[0 : 19] = True  # [0, 1.5h]
    state[24 : 61] = True  # [2h, 5h]
    events = build_events(state, STEP)
    assert [(e.start, e.end) for e in events] == [(0, 60 * STEP)]


def test_short_isolated_run_deleted():
    state = np.zeros(60, dtype=bool)
    state[0 : 19] = True  # 1.5 h run
    assert build_events(state, STEP) == []


def test_unmergeable_short_runs_both_deleted():
    state = np.zeros(80, dtype=bool)
    state[0 : 13] = True  # [0, 1h]
    state[30 : 43] = True  # [2.5h, 3.5h], gap 1.5h
    assert build_events(state, STEP) == []


def test_event_invariants_on_output():
    rng = np.random.default_rng(0)
    state = rng.uniform(size=500) < 0.45
    events = build_events(state, STEP)
    for e in events:
        assert e.duration_s > 2 * H
    for a, b in zip(events, events[1:]):
        assert b.start - a.end > 1 * H


@settings(max_examples=200, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_events_match_oracle(flags):
    state = np.array(flags, dtype=bool)
    got = [(e.start, e.end) for e in build_events(state, STEP)]
    assert got == oracle_events(state, STEP)


# -- make_labels -----------------------------------------------------------------

def test_label_examples_around_one_event():
    events = [FailureEvent(10 * H, 14 * H)]
    n = 20 * H // STEP + 1
    labels = make_labels(events, n, STEP)
    assert labels[4 * H // STEP] == LABEL_POS
    assert labels[1 * H // STEP] == LABEL_NEG
    assert labels[11 * H // STEP] == LABEL_UNDEF
    # exactly 8 h before the start is positive (inclusive boundary)
    assert labels[2 * H // STEP] == LABEL_POS


def test_no_events_all_negative():
    labels = make_labels([], 50, STEP)
    assert np.all(labels == LABEL_NEG)


def test_point_between_back_to_back_events():
    events = [FailureEvent(0, 3 * H), FailureEvent(6 * H, 9 * H)]
    labels = make_labels(events, 10 * H // STEP, STEP)
    between = (4 * H) // STEP
    assert labels[between] == LABEL_POS
    assert labels[between] == oracle_labels([(0, 3 * H), (6 * H, 9 * H)], 10 * H // STEP, STEP)[between]


@settings(max_examples=150, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_labels_match_oracle(flags):
    state = np.array(flags, dtype=bool)
    events = build_events(state, STEP)
    labels = make_labels(events, len(state), STEP)
    expected = oracle_labels([(e.start, e.end) for e in events], len(state), STEP)
    assert np.array_equal(labels, expected)


def test_label_event_consistency_invariant():
    rng = np.random.default_rng(3)
    state = rng.uniform(size=400) < 0.5
    events = build_events(state, STEP)
    labels = make_labels(events, len(state), STEP)
    starts = np.array([e.start for e in events])
    for i, lab in enumerate(labels):
        t = i * STEP
        if lab == LABEL_POS:
            assert np.any((starts > t) & (starts <= t + 8 * H))
        if lab == LABEL_UNDEF:
            assert any(e.start <= t <= e.end for e in events)


def test_pipeline_determinism():
    rng = np.random.default_rng(9)
    pf = rng.uniform(90, 320, 300)
    vent = rng.uniform(size=300) < 0.3
    peep = np.where(rng.uniform(size=300) < 0.8, 8.0, np.nan)
    def run():
        cond, _ = failure_condition(pf, vent, peep)
        state = annotate_state(cond, np.isfinite(pf), STEP)
        events = build_events(state, STEP)
        return make_labels(events, 300, STEP), events
    l1, e1 = run()
    l2, e2 = run()
    assert np.array_equal(l1, l2) and e1 == e2


def test_events_json_round_trip():
    events = [FailureEvent(0, 3 * H), FailureEvent(6 * H, 10 * H)]
    doc = events_to_json(events)
    assert doc[0]["type"] == "resp_failure_mod_sev"
    assert events_from_json(doc) == events
