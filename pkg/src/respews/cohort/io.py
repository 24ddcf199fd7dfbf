"""Stay file I/O.

One CSV per stay (header ``time_s,variable_id,value``) plus a sidecar JSON
with the statics: ``{"stay_id": ..., "age": ..., "weight": ...,
"admission_origin": ...}``.  Planted-episode ground truth, when present,
lives in a single ``planted_events.json`` next to the stay files.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from respews.cohort.resample import resample
from respews.cohort.types import Cohort, GriddedStay, RawSeries
from respews.errors import CohortLoadError, ConfigError
from respews.variables import KNOWN_VARIABLE_IDS, STATIC_VARIABLE_IDS

log = logging.getLogger(__name__)

PLANTED_EVENTS_FILE = "planted_events.json"


def _parse_stay_csv(path: Path, known_variables) -> dict[str, tuple[list[int], list[float]]]:
    columns: dict[str, tuple[list[int], list[float]]] = {}
    errors: list[tuple[int, str]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["time_s", "variable_id", "value"]:
            raise CohortLoadError(path, [(1, f"bad header {header!r}")])
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                errors.append((line_no, f"expected 3 fields, got {len(row)}"))
                continue
            time_field, var, value_field = row
            var = var.strip()
            try:
                time_s = int(time_field)
            except ValueError:
                errors.append((line_no, f"time_s {time_field!r} is not an integer"))
                continue
            try:
                value = float(value_field)
            except ValueError:
                errors.append((line_no, f"value {value_field!r} is not a number"))
                continue
            if time_s < 0:
                errors.append((line_no, f"time_s {time_s} is negative"))
                continue
            if not math.isfinite(value):
                errors.append((line_no, f"value {value_field!r} is not finite"))
                continue
            if not var:
                errors.append((line_no, "variable_id is empty"))
                continue
            if known_variables is not None and var not in known_variables:
                log.warning("%s line %d: unknown variable_id %r (row kept)", path, line_no, var)
            columns.setdefault(var, ([], []))
            columns[var][0].append(time_s)
            columns[var][1].append(value)
    if errors:
        raise CohortLoadError(path, errors)
    return columns


def load_stay(csv_path: Path, grid_step: int = 300, known_variables=KNOWN_VARIABLE_IDS) -> GriddedStay:
    csv_path = Path(csv_path)
    stay_id = csv_path.stem
    columns = _parse_stay_csv(csv_path, known_variables)
    statics: dict[str, float] = {}
    sidecar = csv_path.with_suffix(".json")
    if sidecar.exists():
        doc = json.loads(sidecar.read_text())
        if doc.get("stay_id", stay_id) != stay_id:
            raise ConfigError(f"{sidecar}: stay_id {doc.get('stay_id')!r} does not match file name")
        for key in STATIC_VARIABLE_IDS:
            if key in doc and doc[key] is not None:
                statics[key] = float(doc[key])
    stay = GriddedStay(
        stay_id=stay_id,
        statics=statics,
        raw={var: RawSeries(t, v) for var, (t, v) in columns.items()},
        grid_step=grid_step,
    )
    return resample(stay, grid_step)


def load_cohort(path: str | Path, grid_step: int = 300, known_variables=KNOWN_VARIABLE_IDS) -> Cohort:
    """Load every stay CSV under `path` into a gridded cohort."""
    path = Path(path)
    if not path.is_dir():
        raise ConfigError(f"{path} is not a directory")
    cohort = Cohort()
    for csv_path in sorted(path.glob("*.csv")):
        stay = load_stay(csv_path, grid_step, known_variables)
        cohort.stays[stay.stay_id] = stay
    truth = path / PLANTED_EVENTS_FILE
    if truth.exists():
        doc = json.loads(truth.read_text())
        cohort.planted_events = {
            sid: [(int(a), int(b)) for a, b in spans] for sid, spans in doc.items()
        }
    return cohort


def write_stay(stay: GriddedStay, directory: str | Path) -> Path:
    """Write one stay as CSV + statics sidecar; rows sorted by (time, variable)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for var in sorted(stay.raw):
        series = stay.raw[var]
        for t, v in zip(series.times, series.values):
            rows.append((int(t), var, float(v)))
    rows.sort(key=lambda r: (r[0], r[1]))
    csv_path = directory / f"{stay.stay_id}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "variable_id", "value"])
        for t, var, v in rows:
            writer.writerow([t, var, np.format_float_positional(v, trim="0")])
    sidecar = {"stay_id": stay.stay_id}
    for key in STATIC_VARIABLE_IDS:
        if key in stay.statics:
            sidecar[key] = stay.statics[key]
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return csv_path


def write_cohort(cohort: Cohort, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for stay_id in cohort.stay_ids:
        write_stay(cohort.stays[stay_id], directory)
    if cohort.planted_events:
        doc = {sid: [[int(a), int(b)] for a, b in spans] for sid, spans in sorted(cohort.planted_events.items())}
        (directory / PLANTED_EVENTS_FILE).write_text(json.dumps(doc, indent=2) + "\n")
