"""Core stay containers: raw measurements, gridded views, cohorts, splits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from respews.errors import ConfigError


@dataclass(frozen=True)
class RawMeasurement:
    """One recorded value of one variable at integer seconds since admission."""

    variable_id: str
    time: int
    value: float

    def __post_init__(self):
        if not self.variable_id:
            raise ConfigError("variable_id must be non-empty")
        if self.time < 0:
            raise ConfigError(f"time {self.time} must be >= 0")
        if not np.isfinite(self.value):
            raise ConfigError(f"value {self.value} must be finite")


class RawSeries:
    """Column view of one variable's measurements, sorted by time."""

    __slots__ = ("times", "values")

    def __init__(self, times, values):
        times = np.asarray(times, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if times.shape != values.shape:
            raise ConfigError("times and values must have equal length")
        order = np.argsort(times, kind="stable")
        self.times = times[order]
        self.values = values[order]

    def __len__(self):
        return len(self.times)

    def truncated(self, t: int) -> "RawSeries":
        keep = self.times <= t
        return RawSeries(self.times[keep], self.values[keep])


@dataclass
class GriddedStay:
    """One ICU admission: statics, raw measurements and a regular-grid view.

    Grid arrays cover times 0, grid_step, ..., (n_grid-1)*grid_step and have
    identical length for every variable.  A gridded value is the most recent
    raw value at or before the grid time (forward fill); `is_real` marks grid
    points whose bin (t - grid_step, t] contains at least one raw measurement.
    """

    stay_id: str
    statics: dict[str, float] = field(default_factory=dict)
    raw: dict[str, RawSeries] = field(default_factory=dict)
    grid_step: int = 300
    n_grid: int = 0
    gridded: dict[str, np.ndarray] = field(default_factory=dict)
    is_real: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def grid_times(self) -> np.ndarray:
        return np.arange(self.n_grid, dtype=np.int64) * self.grid_step

    @property
    def length_s(self) -> int:
        return max(self.n_grid - 1, 0) * self.grid_step

    def channel(self, variable_id: str) -> np.ndarray:
        """Gridded values for a variable; all-missing if never measured."""
        if variable_id in self.gridded:
            return self.gridded[variable_id]
        return np.full(self.n_grid, np.nan)

    def add_derived_channel(self, variable_id: str, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        if len(values) != self.n_grid:
            raise ConfigError(
                f"derived channel {variable_id} has {len(values)} points, grid has {self.n_grid}"
            )
        self.gridded[variable_id] = values
        self.is_real[variable_id] = np.zeros(self.n_grid, dtype=bool)

    def max_raw_time(self) -> int:
        times = [s.times[-1] for s in self.raw.values() if len(s)]
        return int(max(times)) if times else 0


@dataclass
class Cohort:
    """Stay collection with optional planted-episode ground truth."""

    stays: dict[str, GriddedStay] = field(default_factory=dict)
    planted_events: dict[str, list[tuple[int, int]]] = field(default_factory=dict)

    def __len__(self):
        return len(self.stays)

    def __iter__(self):
        return iter(self.stay_ids)

    @property
    def stay_ids(self) -> list[str]:
        return sorted(self.stays)

    def __getitem__(self, stay_id: str) -> GriddedStay:
        return self.stays[stay_id]


@dataclass(frozen=True)
class CohortSplit:
    """One train/validation/test partition of a cohort, by stay."""

    split_id: int
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]

    def __post_init__(self):
        groups = [set(self.train), set(self.validation), set(self.test)]
        total = sum(len(g) for g in groups)
        if len(groups[0] | groups[1] | groups[2]) != total:
            raise ConfigError(f"split {self.split_id}: subsets are not disjoint")

    @property
    def all_stays(self) -> set[str]:
        return set(self.train) | set(self.validation) | set(self.test)
