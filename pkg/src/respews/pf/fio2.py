"""Continuous FiO2 estimation from the oxygen-delivery state.

Three situations are distinguished per grid point: a ventilator-recorded
FiO2 value, supplemental oxygen converted through a flow-to-FiO2 lookup
table, and ambient air (21%).  The table ships as a data file so it can be
amended by clinical review without touching code.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from respews.errors import ConfigError

AMBIENT_FIO2 = 0.21
MAX_TABLE_LITERS = 15


@dataclass(frozen=True)
class OxygenationState:
    """Oxygen-delivery situation at one grid point."""

    ventilated: bool
    ventilator_fio2: float | None = None  # fraction, [0.21, 1.0]
    supplemental_o2: float | None = None  # liters/min

    def __post_init__(self):
        v = self.ventilator_fio2
        if v is not None and not (AMBIENT_FIO2 <= v <= 1.0):
            raise ConfigError(f"ventilator_fio2 {v} outside [0.21, 1.0]")
        s = self.supplemental_o2
        if s is not None and s < 0:
            raise ConfigError(f"supplemental_o2 {s} must be >= 0")


def _default_table_path() -> Path:
    return Path(str(resources.files("respews").joinpath("data/fio2_conversion.csv")))


def load_conversion_table(path: str | Path | None = None) -> dict[int, float]:
    """Load the liters -> FiO2 fraction table.

    The file has 16 rows: integer flows 1..15 plus a ``>15`` overflow row.
    Returned mapping is keyed by integer liters; the overflow value is
    stored under ``MAX_TABLE_LITERS + 1``.
    """
    path = Path(path) if path is not None else _default_table_path()
    table: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            liters = row["liters"].strip()
            pct = float(row["fio2_percent"])
            if liters.startswith(">"):
                table[MAX_TABLE_LITERS + 1] = pct / 100.0
            else:
                table[int(liters)] = pct / 100.0
    expected = set(range(1, MAX_TABLE_LITERS + 2))
    if set(table) != expected:
        raise ConfigError(f"conversion table {path} must cover flows 1..15 and >15")
    return table


_DEFAULT_TABLE: dict[int, float] | None = None


def _table() -> dict[int, float]:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_conversion_table()
    return _DEFAULT_TABLE


def supplemental_to_fio2(liters: float, table: dict[int, float] | None = None) -> float:
    """FiO2 fraction for a supplemental-oxygen flow in liters/min.

    Flows round to the nearest integer liter (ties up); flows above 15 l/min
    map to the overflow row, flows rounding to 0 mean ambient air.
    """
    if liters < 0:
        raise ConfigError(f"supplemental flow {liters} must be >= 0")
    tbl = table if table is not None else _table()
    key = int(math.floor(liters + 0.5))
    if key == 0:
        return AMBIENT_FIO2
    if key > MAX_TABLE_LITERS:
        key = MAX_TABLE_LITERS + 1
    return tbl[key]


def estimate_fio2(state: OxygenationState, table: dict[int, float] | None = None) -> tuple[float, bool]:
    """Estimate FiO2 for one oxygen-delivery state.

    Returns (fio2 fraction, data_quality_flag).  The flag is set when a
    ventilated point carries no recorded ventilator FiO2 and the estimate
    falls back to the supplemental/ambient path.
    """
    if state.ventilated and state.ventilator_fio2 is not None:
        return state.ventilator_fio2, False
    flagged = bool(state.ventilated)
    if state.supplemental_o2 is not None and state.supplemental_o2 > 0:
        return supplemental_to_fio2(state.supplemental_o2, table), flagged
    return AMBIENT_FIO2, flagged


def fio2_track(
    ventilated: np.ndarray,
    ventilator_fio2: np.ndarray,
    supplemental_o2: np.ndarray,
    table: dict[int, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized `estimate_fio2` over aligned grid arrays.

    `ventilated` is boolean; the other two are float arrays with NaN for
    missing.  Returns (fio2 fractions, data-quality flags).
    """
    tbl = table if table is not None else _table()
    n = len(ventilated)
    out = np.full(n, AMBIENT_FIO2)
    flags = np.zeros(n, dtype=bool)

    suppl = np.asarray(supplemental_o2, dtype=float)
    has_suppl = np.isfinite(suppl) & (suppl > 0)
    if has_suppl.any():
        keys = np.floor(suppl[has_suppl] + 0.5).astype(int)
        keys = np.clip(keys, 0, MAX_TABLE_LITERS + 1)
        lut = np.array([AMBIENT_FIO2] + [tbl[k] for k in range(1, MAX_TABLE_LITERS + 2)])
        out[has_suppl] = lut[keys]

    vent = np.asarray(ventilated, dtype=bool)
    vfio2 = np.asarray(ventilator_fio2, dtype=float)
    vent_recorded = vent & np.isfinite(vfio2)
    # recorded values outside the physical range are data errors; clamp so the
    # track keeps the ambient floor invariant
    out[vent_recorded] = np.clip(vfio2[vent_recorded], AMBIENT_FIO2, 1.0)
    flags[vent & ~np.isfinite(vfio2)] = True
    return out, flags
