"""Alarm generation and event-based evaluation.

Scores exist only at grid points with a defined prediction target.  An
alarm fires when the score reaches the threshold and no alarm fired within
the preceding silencing period (30 minutes by default).  An alarm is true
iff an event starts within the following horizon (8 hours, inclusive at the
boundary); an event is caught iff at least one true alarm precedes it
within the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from respews.errors import ConfigError

SILENCE_S = 30 * 60
HORIZON_S = 8 * 3600
RECALL_GRID = np.linspace(0.0, 1.0, 101)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def silence(
    times: np.ndarray,
    scores: np.ndarray,
    threshold: float,
    silence_s: int = SILENCE_S,
) -> np.ndarray:
    """Alarm times produced by a threshold with silencing.

    `times` are the defined-label grid times (sorted) and `scores` the model
    scores at those points.  Consecutive alarms are separated by at least
    `silence_s` seconds.
    """
    if silence_s <= 0:
        raise ConfigError("silencing period must be positive")
    times = np.asarray(times, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    crossing = times[scores >= threshold]
    alarms = []
    i = 0
    while i < len(crossing):
        t = crossing[i]
        alarms.append(t)
        i = np.searchsorted(crossing, t + silence_s, side="left")
    return np.array(alarms, dtype=np.int64)


@dataclass
class EventPrCounts:
    n_alarms: int = 0
    n_true_alarms: int = 0
    n_events: int = 0
    n_caught: int = 0

    def __iadd__(self, other: "EventPrCounts"):
        self.n_alarms += other.n_alarms
        self.n_true_alarms += other.n_true_alarms
        self.n_events += other.n_events
        self.n_caught += other.n_caught
        return self

    @property
    def precision(self) -> float | None:
        return self.n_true_alarms / self.n_alarms if self.n_alarms else None

    @property
    def recall(self) -> float | None:
        return self.n_caught / self.n_events if self.n_events else None


def event_pr(
    alarm_times: np.ndarray,
    event_starts: np.ndarray,
    horizon_s: int = HORIZON_S,
) -> EventPrCounts:
    """Event-based precision/recall counts for one stay."""
    alarms = np.asarray(alarm_times, dtype=np.int64)
    starts = np.sort(np.asarray(event_starts, dtype=np.int64))
    counts = EventPrCounts(n_alarms=len(alarms), n_events=len(starts))
    if len(alarms) and len(starts):
        nxt = np.searchsorted(starts, alarms, side="right")  # first start > alarm
        has = nxt < len(starts)
        true_alarm = has & (starts[np.minimum(nxt, len(starts) - 1)] <= alarms + horizon_s)
        counts.n_true_alarms = int(true_alarm.sum())
        # event caught iff some alarm lies in [start - horizon, start)
        lo = np.searchsorted(alarms, starts - horizon_s, side="left")
        hi = np.searchsorted(alarms, starts, side="left")
        counts.n_caught = int(np.sum(hi > lo))
    return counts


@dataclass
class AlarmTiming:
    """First-alarm lead statistics over caught events."""

    leads_s: list[int] = field(default_factory=list)
    alarms_per_event: list[int] = field(default_factory=list)

    @property
    def median_lead_s(self) -> float | None:
        return float(np.median(self.leads_s)) if self.leads_s else None

    @property
    def mean_alarms_per_caught_event(self) -> float | None:
        return float(np.mean(self.alarms_per_event)) if self.alarms_per_event else None


def alarm_timing(
    alarm_times: np.ndarray,
    event_starts: np.ndarray,
    horizon_s: int = HORIZON_S,
) -> AlarmTiming:
    """Lead of the first true alarm and alarm count in the pre-onset window."""
    alarms = np.sort(np.asarray(alarm_times, dtype=np.int64))
    timing = AlarmTiming()
    for start in np.sort(np.asarray(event_starts, dtype=np.int64)):
        lo = np.searchsorted(alarms, start - horizon_s, side="left")
        hi = np.searchsorted(alarms, start, side="left")
        if hi > lo:
            timing.leads_s.append(int(start - alarms[lo]))
            timing.alarms_per_event.append(int(hi - lo))
    return timing


def timepoint_roc(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Time-point ROC curve (no silencing) and trapezoidal AUROC."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ConfigError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    y = (labels[order] == 1).astype(float)
    s = scores[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1.0 - y)
    boundary = np.concatenate([s[1:] != s[:-1], [True]])  # last index of each tie group
    tpr = np.concatenate([[0.0], tp[boundary] / n_pos])
    fpr = np.concatenate([[0.0], fp[boundary] / n_neg])
    auroc = float(_trapezoid(tpr, fpr))
    return fpr, tpr, auroc


@dataclass
class SplitCurve:
    """Threshold sweep of one split: pooled event-based counts per threshold."""

    thresholds: np.ndarray
    recall: np.ndarray
    precision: np.ndarray  # NaN where no alarms fired
    prevalence: float
    alarm_counts: np.ndarray

    def envelope(self) -> tuple[np.ndarray, np.ndarray]:
        """Operating points swept from the highest threshold down.

        Returns (recall, precision) at the points where recall first
        reaches each level, i.e. the best-precision envelope of the curve.
        """
        ok = np.isfinite(self.precision) & np.isfinite(self.recall)
        order = np.argsort(-self.thresholds, kind="stable")
        r_env, p_env = [], []
        r_best = 0.0
        for k in order:
            if not ok[k]:
                continue
            if self.recall[k] > r_best:
                r_best = float(self.recall[k])
                r_env.append(r_best)
                p_env.append(float(self.precision[k]))
        return np.asarray(r_env), np.asarray(p_env)

    @property
    def auprc(self) -> float:
        """Average precision: sum of recall increments times precision,
        thresholds swept from high to low."""
        r, p = self.envelope()
        if len(r) == 0:
            return float("nan")
        return float(np.sum(np.diff(np.concatenate([[0.0], r])) * p))

    def precision_at_recall(self, grid: np.ndarray = RECALL_GRID) -> np.ndarray:
        r, p = self.envelope()
        if len(r) == 0:
            return np.full(len(grid), np.nan)
        return np.interp(grid, r, p)


def sweep_thresholds(
    stay_series: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    thresholds: np.ndarray,
    positives: int,
    defined: int,
    silence_s: int = SILENCE_S,
    horizon_s: int = HORIZON_S,
) -> SplitCurve:
    """Evaluate one split over a threshold grid.

    `stay_series` holds (times, scores, event_starts) per stay; counts are
    pooled over stays at each threshold.  `positives`/`defined` give the
    time-point prevalence reference of the random classifier.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    recall = np.full(len(thresholds), np.nan)
    precision = np.full(len(thresholds), np.nan)
    alarm_counts = np.zeros(len(thresholds), dtype=np.int64)
    for k, thr in enumerate(thresholds):
        counts = EventPrCounts()
        for times, scores, starts in stay_series:
            alarms = silence(times, scores, thr, silence_s)
            counts += event_pr(alarms, starts, horizon_s)
        alarm_counts[k] = counts.n_alarms
        if counts.n_events:
            recall[k] = counts.recall
        if counts.n_alarms:
            precision[k] = counts.precision
    return SplitCurve(
        thresholds=thresholds,
        recall=recall,
        precision=precision,
        prevalence=positives / defined if defined else float("nan"),
        alarm_counts=alarm_counts,
    )


@dataclass
class EventPrReport:
    """Cross-split aggregation of event-based PR curves."""

    method: str
    splits: list[SplitCurve]
    recall_grid: np.ndarray = field(default_factory=lambda: RECALL_GRID.copy())

    @property
    def mean_precision(self) -> np.ndarray:
        curves = np.stack([c.precision_at_recall(self.recall_grid) for c in self.splits])
        return curves.mean(axis=0)

    @property
    def std_precision(self) -> np.ndarray:
        curves = np.stack([c.precision_at_recall(self.recall_grid) for c in self.splits])
        return curves.std(axis=0)

    @property
    def auprc_per_split(self) -> list[float]:
        return [c.auprc for c in self.splits]

    @property
    def mean_auprc(self) -> float:
        return float(np.mean(self.auprc_per_split))

    @property
    def prevalence(self) -> float:
        return float(np.mean([c.prevalence for c in self.splits]))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "recall_grid": self.recall_grid.tolist(),
            "mean_precision": self.mean_precision.tolist(),
            "std_precision": self.std_precision.tolist(),
            "auprc_per_split": self.auprc_per_split,
            "mean_auprc": self.mean_auprc,
            "std_auprc": float(np.std(self.auprc_per_split)),
            "prevalence": self.prevalence,
            "n_splits": len(self.splits),
        }


def default_thresholds(all_scores: np.ndarray, n: int = 101) -> np.ndarray:
    """Quantile threshold grid over the pooled scores, deduplicated."""
    finite = np.asarray(all_scores, dtype=float)
    finite = finite[np.isfinite(finite)]
    if finite.size == 0:
        return np.array([0.5])
    qs = np.quantile(finite, np.linspace(0.0, 1.0, n))
    return np.unique(qs)
