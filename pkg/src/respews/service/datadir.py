"""Read layer over a pipeline run directory for the monitor service."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from respews.cohort.io import load_stay
from respews.cohort.types import GriddedStay
from respews.errors import ArtifactError


@dataclass
class PatientEntry:
    stay_id: str
    csv_path: Path
    admitted_at: str


class DataDir:
    """Lazy, cached access to cohort/labeled/prediction artifacts."""

    def __init__(self, root: str | Path, grid_step: int = 300,
                 admission_epoch: str = "2024-01-01T00:00:00+00:00"):
        self.root = Path(root)
        self.grid_step = grid_step
        cohort_dir = self.root / "cohort"
        if not cohort_dir.is_dir():
            raise ArtifactError(f"{cohort_dir} not found; the data dir must hold a cohort/ directory")
        epoch = datetime.fromisoformat(admission_epoch)
        admissions_file = self.root / "cohort" / "admissions.json"
        admissions = json.loads(admissions_file.read_text()) if admissions_file.exists() else {}
        self.patients: dict[str, PatientEntry] = {}
        for i, path in enumerate(sorted(cohort_dir.glob("*.csv"))):
            sid = path.stem
            admitted = admissions.get(sid) or (epoch + timedelta(days=i)).isoformat()
            self.patients[sid] = PatientEntry(stay_id=sid, csv_path=path, admitted_at=admitted)
        self._stay_cache: dict[str, GriddedStay] = {}
        self._listing_cache: list[dict] | None = None

    def stay_ids(self) -> list[str]:
        return sorted(self.patients)

    def listing(self) -> list[dict]:
        """Patient descriptors from a light CSV pass (no grid resampling);
        computed once and cached, so large cohorts list quickly."""
        if self._listing_cache is None:
            out = []
            for sid in self.stay_ids():
                entry = self.patients[sid]
                df = pd.read_csv(entry.csv_path, usecols=["time_s", "variable_id"])
                last = int(df["time_s"].max()) if len(df) else 0
                n_grid = last // self.grid_step + 1
                out.append(
                    {
                        "stay_id": sid,
                        "admitted_at": entry.admitted_at,
                        "length_s": (n_grid - 1) * self.grid_step,
                        "n_grid": n_grid,
                        "channels": sorted(df["variable_id"].unique().tolist()),
                        "has_predictions": self.predictions_path(sid).exists(),
                        "n_events": len(self.events(sid)),
                    }
                )
            self._listing_cache = out
        return self._listing_cache

    def predictions_path(self, stay_id: str) -> Path:
        return self.root / "eval" / "predictions" / f"{stay_id}.csv"

    def stay(self, stay_id: str) -> GriddedStay:
        if stay_id not in self.patients:
            raise KeyError(stay_id)
        if stay_id not in self._stay_cache:
            if len(self._stay_cache) > 64:
                self._stay_cache.clear()
            self._stay_cache[stay_id] = load_stay(self.patients[stay_id].csv_path, self.grid_step)
        return self._stay_cache[stay_id]

    def statics(self, stay_id: str) -> dict:
        sidecar = self.patients[stay_id].csv_path.with_suffix(".json")
        return json.loads(sidecar.read_text()) if sidecar.exists() else {}

    def events(self, stay_id: str) -> list[dict]:
        path = self.root / "labeled" / f"{stay_id}.events.json"
        return json.loads(path.read_text()) if path.exists() else []

    def predictions(self, stay_id: str) -> tuple[list[int], list[float | None]] | None:
        path = self.predictions_path(stay_id)
        if not path.exists():
            return None
        df = pd.read_csv(path)
        times = df["time_s"].astype(int).tolist()
        scores = [None if pd.isna(v) else float(v) for v in df["score"]]
        return times, scores


def decimate_minmax(times: np.ndarray, values: np.ndarray, max_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Min/max-preserving decimation to at most `max_points` points.

    Points are bucketed evenly; each bucket contributes its extremes in time
    order, so peaks and troughs survive rendering at any zoom level.
    """
    n = len(times)
    if max_points < 2 or n <= max_points:
        return times, values
    n_buckets = max(max_points // 2, 1)
    edges = np.linspace(0, n, n_buckets + 1).astype(int)
    keep = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        chunk = values[lo:hi]
        i_min = int(np.argmin(chunk)) + lo
        i_max = int(np.argmax(chunk)) + lo
        keep.extend(sorted({i_min, i_max}))
    idx = np.array(sorted(set(keep)), dtype=int)
    return times[idx], values[idx]
