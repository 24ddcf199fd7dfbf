"""Stage glue: P/F labeling per stay and cohort-level featurization."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from respews.cohort.types import Cohort, GriddedStay
from respews.features.matrix import FeatureMatrix, build_cohort_matrix
from respews.labels import (
    FailureEvent,
    annotate_state,
    build_events,
    failure_condition,
    make_labels,
)
from respews.pf.track import PfTrack, make_estimator, oxygenation_inputs, pf_track
from respews.variables import VariableConfig


@dataclass
class StayLabels:
    """Per-stay labeling artifacts."""

    track: PfTrack
    condition: np.ndarray
    state: np.ndarray
    events: list[FailureEvent]
    labels: np.ndarray  # int8: 1 positive, 0 negative, -1 undefined
    missing_peep_points: int


def attach_fio2_estimate(stay: GriddedStay) -> None:
    """Derive and attach the continuous FiO2 channel (pointwise, causal)."""
    from respews.pf.fio2 import fio2_track

    ventilated, vent_fio2, suppl, _ = oxygenation_inputs(stay)
    fio2, _ = fio2_track(ventilated, vent_fio2, suppl)
    stay.add_derived_channel("fio2_estimate", fio2)


def label_stay(
    stay: GriddedStay,
    estimator="pnl",
    models: dict | None = None,
    freshness_s: int = 30 * 60,
    truncated: str = "quorum",
) -> StayLabels:
    """Full labeling chain for one stay; also attaches the derived FiO2 channel."""
    est = make_estimator(estimator, models) if isinstance(estimator, str) else estimator
    track = pf_track(stay, est, freshness_s)
    ventilated, _, _, peep = oxygenation_inputs(stay)
    condition, missing_peep = failure_condition(track.pf, ventilated, peep)
    defined = np.isfinite(track.pf)
    state = annotate_state(condition, defined, stay.grid_step, truncated=truncated)
    events = build_events(state, stay.grid_step)
    labels = make_labels(events, stay.n_grid, stay.grid_step)
    stay.add_derived_channel("fio2_estimate", track.fio2_est)
    return StayLabels(
        track=track,
        condition=condition,
        state=state,
        events=events,
        labels=labels,
        missing_peep_points=missing_peep,
    )


def label_cohort(
    cohort: Cohort,
    estimator: str = "pnl",
    models: dict | None = None,
    freshness_s: int = 30 * 60,
    jobs: int = 1,
) -> dict[str, StayLabels]:
    """Label every stay; stays are independent so order of work is irrelevant."""
    stay_ids = cohort.stay_ids
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(lambda sid: label_stay(cohort[sid], estimator, models, freshness_s), stay_ids)
            )
        return dict(zip(stay_ids, results))
    return {sid: label_stay(cohort[sid], estimator, models, freshness_s) for sid in stay_ids}


def featurize_cohort(
    cohort: Cohort,
    labeled: dict[str, StayLabels],
    configs: list[VariableConfig],
) -> FeatureMatrix:
    labels_by_stay = {sid: labeled[sid].labels for sid in cohort.stay_ids}
    return build_cohort_matrix(cohort, labels_by_stay, configs)
