"""Continuous PaO2 and P/F tracks for a gridded stay.

At every grid point the PaO2 value is a fresh real measurement when one
exists (default freshness 30 minutes), otherwise the configured estimator
applied to the current SpO2.  FiO2 is always estimable (ambient-air floor),
so P/F is defined wherever PaO2 is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from respews.cohort.types import GriddedStay
from respews.errors import ConfigError
from respews.oxy.curve import ellis_pao2
from respews.pf.fio2 import fio2_track

SOURCE_MISSING = 0
SOURCE_MEASURED = 1
SOURCE_ESTIMATED = 2

DEFAULT_FRESHNESS_S = 30 * 60

# the pnl inversion is undefined at saturation 1.0; recorded 100% readings
# are clamped just below before inverting
SAT_CLIP = (0.50, 0.998)


@dataclass
class PfTrack:
    """Per-grid-point oxygenation estimates for one stay."""

    grid_step: int
    pao2_est: np.ndarray
    pao2_source: np.ndarray  # int8, SOURCE_* codes
    fio2_est: np.ndarray
    pf: np.ndarray
    fio2_quality_flags: np.ndarray

    @property
    def n_grid(self) -> int:
        return len(self.pf)


class PnlEstimator:
    """Parametric non-linear baseline: closed-form dissociation-curve inverse."""

    name = "pnl"

    def __call__(self, sat_fraction: np.ndarray, stay: GriddedStay) -> np.ndarray:
        out = np.full(sat_fraction.shape, np.nan)
        ok = np.isfinite(sat_fraction)
        if ok.any():
            out[ok] = ellis_pao2(np.clip(sat_fraction[ok], SAT_CLIP[0], SAT_CLIP[1]))
        return out


class MlpEstimator:
    """Trained network estimator; consumes current SpO2 plus last-ABGA context."""

    def __init__(self, model, name: str):
        self.model = model
        self.name = name

    def __call__(self, sat_fraction: np.ndarray, stay: GriddedStay) -> np.ndarray:
        columns = {"sat": np.clip(sat_fraction, SAT_CLIP[0], SAT_CLIP[1])}
        grid_times = stay.grid_times
        for input_name in self.model.input_names:
            if input_name == "sat":
                continue
            channel, scale = {
                "sat_last": ("sao2", 0.01),
                "pao2_last": ("pao2", 1.0),
                "ph_last": ("ph", 1.0),
            }.get(input_name, (input_name, 1.0))
            values = np.full(len(grid_times), np.nan)
            series = stay.raw.get(channel)
            if series is not None and len(series):
                idx = np.searchsorted(series.times, grid_times, side="right") - 1
                has = idx >= 0
                values[has] = series.values[idx[has]] * scale
            columns[input_name] = values
        x = np.column_stack([columns[name] for name in self.model.input_names])
        out = np.full(sat_fraction.shape, np.nan)
        ok = np.isfinite(sat_fraction)
        if ok.any():
            out[ok] = self.model.predict(x[ok])
        return out


def make_estimator(name: str, models: dict | None = None):
    if name == "pnl":
        return PnlEstimator()
    if name in ("spo2nn", "fullnn"):
        if not models or name not in models:
            raise ConfigError(f"estimator {name!r} requires a trained model")
        return MlpEstimator(models[name], name)
    raise ConfigError(f"unknown estimator {name!r}; expected pnl, spo2nn or fullnn")


def oxygenation_inputs(stay: GriddedStay) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gridded (ventilated, ventilator FiO2 fraction, supplemental l/min, PEEP)."""
    vent_raw = stay.channel("ventilation_state")
    ventilated = np.isfinite(vent_raw) & (vent_raw > 0.5)
    vent_fio2 = stay.channel("fio2") / 100.0
    suppl = stay.channel("supplemental_oxygen")
    peep = stay.channel("peep")
    return ventilated, vent_fio2, suppl, peep


def pao2_track(
    stay: GriddedStay,
    estimator,
    freshness_s: int = DEFAULT_FRESHNESS_S,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-grid-point PaO2 estimate and its source code."""
    if freshness_s <= 0:
        raise ConfigError("freshness must be positive")
    n = stay.n_grid
    grid_times = stay.grid_times
    pao2 = np.full(n, np.nan)
    source = np.full(n, SOURCE_MISSING, dtype=np.int8)

    series = stay.raw.get("pao2")
    if series is not None and len(series):
        idx = np.searchsorted(series.times, grid_times, side="right") - 1
        has = idx >= 0
        fresh = np.zeros(n, dtype=bool)
        fresh[has] = grid_times[has] - series.times[idx[has]] <= freshness_s
        pao2[fresh] = series.values[idx[fresh]]
        source[fresh] = SOURCE_MEASURED

    sat = stay.channel("spo2") / 100.0
    need = (source == SOURCE_MISSING) & np.isfinite(sat)
    if need.any():
        est = estimator(sat[need], _subset_view(stay, need))
        pao2[need] = est
        source[need] = np.where(np.isfinite(est), SOURCE_ESTIMATED, SOURCE_MISSING)
    return pao2, source


class _SubsetStay:
    """Grid-time subset view passed to estimators for context lookups."""

    def __init__(self, stay: GriddedStay, mask: np.ndarray):
        self.raw = stay.raw
        self.grid_times = stay.grid_times[mask]


def _subset_view(stay: GriddedStay, mask: np.ndarray):
    return _SubsetStay(stay, mask)


def pf_track(
    stay: GriddedStay,
    estimator,
    freshness_s: int = DEFAULT_FRESHNESS_S,
) -> PfTrack:
    """Combine the PaO2 and FiO2 estimate tracks into a P/F track."""
    ventilated, vent_fio2, suppl, _ = oxygenation_inputs(stay)
    fio2, flags = fio2_track(ventilated, vent_fio2, suppl)
    pao2, source = pao2_track(stay, estimator, freshness_s)
    pf = pao2 / fio2
    return PfTrack(
        grid_step=stay.grid_step,
        pao2_est=pao2,
        pao2_source=source,
        fio2_est=fio2,
        pf=pf,
        fio2_quality_flags=flags,
    )
