"""Regular-grid resampling of raw measurement series (forward fill)."""

from __future__ import annotations

import numpy as np

from respews.cohort.types import GriddedStay
from respews.errors import ConfigError


def resample(stay: GriddedStay, grid_step: int | None = None, n_points: int | None = None) -> GriddedStay:
    """Populate the gridded view of a stay.

    The grid covers 0 .. ceil(last_raw_time / grid_step) * grid_step unless
    `n_points` pins the length explicitly (used when truncating stays).
    Value at grid time t is the last raw value with time <= t; points before
    a variable's first measurement are missing.  `is_real` is true where the
    bin (t - grid_step, t] holds at least one raw measurement.
    """
    step = int(grid_step if grid_step is not None else stay.grid_step)
    if step <= 0:
        raise ConfigError(f"grid_step {step} must be positive")
    if n_points is None:
        last = stay.max_raw_time()
        n_points = int(np.ceil(last / step)) + 1
    if n_points < 1:
        raise ConfigError("grid needs at least one point")

    out = GriddedStay(
        stay_id=stay.stay_id,
        statics=dict(stay.statics),
        raw=stay.raw,
        grid_step=step,
        n_grid=n_points,
    )
    grid_times = out.grid_times
    for var, series in stay.raw.items():
        values = np.full(n_points, np.nan)
        real = np.zeros(n_points, dtype=bool)
        if len(series):
            # index of last raw time <= t for each grid point
            idx = np.searchsorted(series.times, grid_times, side="right") - 1
            has_prior = idx >= 0
            values[has_prior] = series.values[idx[has_prior]]
            lo = np.searchsorted(series.times, grid_times - step, side="right")
            hi = np.searchsorted(series.times, grid_times, side="right")
            real = hi > lo
        out.gridded[var] = values
        out.is_real[var] = real
    return out


def truncate_stay(stay: GriddedStay, t: int) -> GriddedStay:
    """Stay as it looked at time t: raw measurements after t dropped, grid cut at t."""
    if t < 0:
        raise ConfigError("truncation time must be >= 0")
    cut = GriddedStay(
        stay_id=stay.stay_id,
        statics=dict(stay.statics),
        raw={var: s.truncated(t) for var, s in stay.raw.items()},
        grid_step=stay.grid_step,
    )
    return resample(cut, stay.grid_step, n_points=t // stay.grid_step + 1)
