"""Respiratory-failure labeling: P/F track -> state flags -> events -> targets.

A grid point is in the failure state when, among the defined P/F points in
its two-hour forward window, at least two thirds satisfy the failure
condition (P/F < 200 mmHg, and PEEP >= 5 for ventilated patients).  Runs of
state points are merged across gaps of at most one hour, events lasting at
most two hours are dropped, and the prediction target marks points with an
event starting within the next eight hours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from respews.errors import ConfigError

PF_THRESHOLD = 200.0
# the source data records PEEP in device units; the threshold is applied as-is
PEEP_THRESHOLD = 5.0
STATE_WINDOW_S = 2 * 3600
MERGE_GAP_S = 1 * 3600
MIN_EVENT_S = 2 * 3600
HORIZON_S = 8 * 3600

LABEL_POS = 1
LABEL_NEG = 0
LABEL_UNDEF = -1

# "two thirds" read inclusively: flag when satisfied*3 >= defined*2
QUORUM_NUM = 2
QUORUM_DEN = 3


@dataclass(frozen=True)
class FailureEvent:
    """Closed interval [start, end] of moderate/severe respiratory failure."""

    start: int
    end: int
    severity: str = "moderate_severe"

    def __post_init__(self):
        if self.end < self.start:
            raise ConfigError(f"event end {self.end} before start {self.start}")

    @property
    def duration_s(self) -> int:
        return self.end - self.start


def failure_condition(
    pf: np.ndarray,
    ventilated: np.ndarray,
    peep: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Pointwise failure condition on aligned grid arrays.

    Returns (condition flags, count of ventilated points with missing PEEP).
    Missing P/F leaves the condition false; those points are also excluded
    from quorum denominators via the separate defined mask.
    """
    pf = np.asarray(pf, dtype=float)
    vent = np.asarray(ventilated, dtype=bool)
    peep = np.asarray(peep, dtype=float)
    peep_ok = np.isfinite(peep) & (peep >= PEEP_THRESHOLD)
    missing_peep = int(np.sum(vent & ~np.isfinite(peep) & np.isfinite(pf) & (pf < PF_THRESHOLD)))
    cond = np.isfinite(pf) & (pf < PF_THRESHOLD) & (~vent | peep_ok)
    return cond, missing_peep


def annotate_state(
    condition: np.ndarray,
    defined: np.ndarray,
    grid_step: int,
    window_s: int = STATE_WINDOW_S,
    truncated: str = "quorum",
) -> np.ndarray:
    """Forward-window quorum over the failure condition.

    Point t is flagged iff among defined points in [t, t + window) the
    condition holds for at least two thirds.  `truncated` controls windows
    cut short by the stay end: "quorum" evaluates them over the remaining
    defined points (at least one required), "unflagged" leaves them false.
    """
    if window_s % grid_step != 0:
        raise ConfigError(f"grid step {grid_step} must divide the window {window_s}")
    if truncated not in ("quorum", "unflagged"):
        raise ConfigError(f"unknown truncation policy {truncated!r}")
    cond = np.asarray(condition, dtype=bool)
    defi = np.asarray(defined, dtype=bool)
    n = cond.size
    w = window_s // grid_step
    csum_sat = np.concatenate([[0], np.cumsum(cond & defi)])
    csum_def = np.concatenate([[0], np.cumsum(defi)])
    idx = np.arange(n)
    hi = np.minimum(idx + w, n)
    n_sat = csum_sat[hi] - csum_sat[idx]
    n_def = csum_def[hi] - csum_def[idx]
    flags = (n_def >= 1) & (QUORUM_DEN * n_sat >= QUORUM_NUM * n_def)
    if truncated == "unflagged":
        flags &= idx + w <= n
    return flags


def build_events(
    state: np.ndarray,
    grid_step: int,
    merge_gap_s: int = MERGE_GAP_S,
    min_event_s: int = MIN_EVENT_S,
) -> list[FailureEvent]:
    """Maximal runs of state points, merged over small gaps, short ones dropped.

    Merging runs first (to its fixed point) and length-filtering second; the
    gap between two runs is next start minus previous end, and an event's
    duration is end minus start.
    """
    state = np.asarray(state, dtype=bool)
    runs: list[list[int]] = []
    i = 0
    n = state.size
    while i < n:
        if state[i]:
            j = i
            while j + 1 < n and state[j + 1]:
                j += 1
            runs.append([i * grid_step, j * grid_step])
            i = j + 1
        else:
            i += 1
    merged: list[list[int]] = []
    for run in runs:
        if merged and run[0] - merged[-1][1] <= merge_gap_s:
            merged[-1][1] = run[1]
        else:
            merged.append(run)
    return [FailureEvent(start, end) for start, end in merged if end - start > min_event_s]


def make_labels(
    events: list[FailureEvent],
    n_grid: int,
    grid_step: int,
    horizon_s: int = HORIZON_S,
) -> np.ndarray:
    """Per-grid-point prediction target.

    Points inside an event are undefined; otherwise a point is positive iff
    some event starts within (t, t + horizon], negative otherwise.
    """
    labels = np.full(n_grid, LABEL_NEG, dtype=np.int8)
    times = np.arange(n_grid, dtype=np.int64) * grid_step
    starts = np.array(sorted(e.start for e in events), dtype=np.int64)
    if len(starts):
        # first event start strictly after t; positive iff it lies within horizon
        idx = np.searchsorted(starts, times, side="right")
        has_next = idx < len(starts)
        nxt = starts[np.minimum(idx, len(starts) - 1)]
        labels[has_next & (nxt <= times + horizon_s)] = LABEL_POS
    for ev in events:
        a = int(np.ceil(ev.start / grid_step))
        b = int(ev.end // grid_step)
        labels[max(a, 0) : min(b, n_grid - 1) + 1] = LABEL_UNDEF
    return labels


def events_to_json(events: list[FailureEvent]) -> list[dict]:
    return [
        {"start_s": int(e.start), "end_s": int(e.end), "type": "resp_failure_mod_sev"}
        for e in events
    ]


def events_from_json(doc: list[dict]) -> list[FailureEvent]:
    return [FailureEvent(int(d["start_s"]), int(d["end_s"])) for d in doc]


def labels_to_rows(labels: np.ndarray, grid_step: int) -> list[tuple[int, str]]:
    """CSV rows (time_s, label) with label in {1, 0, na}."""
    text = {LABEL_POS: "1", LABEL_NEG: "0", LABEL_UNDEF: "na"}
    return [(int(i * grid_step), text[int(v)]) for i, v in enumerate(labels)]
