"""Feature-matrix assembly: one row per labeled grid point.

Columns follow the variable config order with a fixed per-variable block
layout (current value, 8h and whole-stay summaries, measurement intensity,
instability fractions), statics last.  The same config always yields the
same column schema.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from respews.cohort.types import Cohort, GriddedStay
from respews.errors import ConfigError, SchemaMismatchError
from respews.features.summarize import (
    expanding_summary,
    instability_fractions,
    intensity,
    rolling_summary,
)
from respews.labels import LABEL_UNDEF
from respews.variables import VariableConfig

SUMMARY_WINDOW_S = 8 * 3600
INTENSITY_WINDOW_S = 8 * 3600
SUMMARY_NAMES = ("mean", "std", "trend", "min", "max")


def config_hash(configs: list[VariableConfig]) -> str:
    payload = json.dumps(
        [
            [v.variable_id, v.kind, list(v.classes), [list(b) for b in v.bands]]
            for v in configs
        ]
    ).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def column_schema(configs: list[VariableConfig]) -> list[str]:
    columns: list[str] = []
    for cfg in configs:
        if cfg.kind == "static":
            continue
        var = cfg.variable_id
        if "current" in cfg.classes:
            columns.append(f"{var}:current")
        if "summary" in cfg.classes:
            columns += [f"{var}:{s}_8h" for s in SUMMARY_NAMES]
            columns += [f"{var}:{s}_stay" for s in SUMMARY_NAMES]
        if "intensity" in cfg.classes:
            columns += [f"{var}:time_to_last_s", f"{var}:density_8h", f"{var}:density_stay"]
        if "instability" in cfg.classes:
            for level in range(1, len(cfg.bands) + 1):
                columns += [f"{var}:instab_l{level}_8h", f"{var}:instab_l{level}_stay"]
    for cfg in configs:
        if cfg.kind == "static":
            columns.append(f"static:{cfg.variable_id}")
    return columns


def compute_stay_features(stay: GriddedStay, configs: list[VariableConfig]) -> np.ndarray:
    """Feature values for every grid point of one stay (no label filtering)."""
    n = stay.n_grid
    grid_times = stay.grid_times
    blocks: list[np.ndarray] = []
    for cfg in configs:
        if cfg.kind == "static":
            continue
        var = cfg.variable_id
        values = stay.channel(var)
        if "current" in cfg.classes:
            blocks.append(values)
        if "summary" in cfg.classes:
            rolled = rolling_summary(values, stay.grid_step, SUMMARY_WINDOW_S)
            grown = expanding_summary(values, stay.grid_step)
            blocks += [rolled[s] for s in SUMMARY_NAMES]
            blocks += [grown[s] for s in SUMMARY_NAMES]
        if "intensity" in cfg.classes:
            series = stay.raw.get(var)
            feats = intensity(
                series.times if series is not None else None,
                grid_times,
                stay.grid_step,
                INTENSITY_WINDOW_S,
            )
            blocks += [feats["time_to_last_s"], feats["density_window"], feats["density_stay"]]
        if "instability" in cfg.classes:
            for frac_8h, frac_stay in zip(
                instability_fractions(values, cfg.bands, stay.grid_step, SUMMARY_WINDOW_S),
                instability_fractions(values, cfg.bands, stay.grid_step, None),
            ):
                blocks += [frac_8h, frac_stay]
    for cfg in configs:
        if cfg.kind == "static":
            blocks.append(np.full(n, stay.statics.get(cfg.variable_id, np.nan)))
    return np.column_stack(blocks) if blocks else np.empty((n, 0))


@dataclass
class FeatureMatrix:
    """Labeled feature rows pooled across stays."""

    columns: list[str]
    X: np.ndarray
    y: np.ndarray  # int8 labels, 0/1
    stay_ids: np.ndarray  # object array of str
    times: np.ndarray  # int64 seconds
    config_hash: str = ""
    provenance: dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.y)

    def rows_for(self, stay_ids) -> np.ndarray:
        wanted = set(stay_ids)
        return np.fromiter((s in wanted for s in self.stay_ids), dtype=bool, count=len(self.stay_ids))

    def subset(self, mask: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            columns=self.columns,
            X=self.X[mask],
            y=self.y[mask],
            stay_ids=self.stay_ids[mask],
            times=self.times[mask],
            config_hash=self.config_hash,
            provenance=self.provenance,
        )

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]


def build_matrix(
    stay: GriddedStay,
    labels: np.ndarray,
    configs: list[VariableConfig],
) -> FeatureMatrix:
    """Rows for one stay at every grid point with a defined (0/1) label."""
    if len(labels) != stay.n_grid:
        raise ConfigError(f"{stay.stay_id}: {len(labels)} labels for {stay.n_grid} grid points")
    keep = np.asarray(labels) != LABEL_UNDEF
    features = compute_stay_features(stay, configs)
    return FeatureMatrix(
        columns=column_schema(configs),
        X=features[keep],
        y=np.asarray(labels, dtype=np.int8)[keep],
        stay_ids=np.array([stay.stay_id] * int(keep.sum()), dtype=object),
        times=stay.grid_times[keep],
        config_hash=config_hash(configs),
        provenance={c: c.split(":")[0] for c in column_schema(configs)},
    )


def build_cohort_matrix(
    cohort: Cohort,
    labels_by_stay: dict[str, np.ndarray],
    configs: list[VariableConfig],
) -> FeatureMatrix:
    parts = [build_matrix(cohort[sid], labels_by_stay[sid], configs) for sid in cohort.stay_ids]
    if not parts:
        raise ConfigError("cohort is empty")
    return FeatureMatrix(
        columns=parts[0].columns,
        X=np.concatenate([p.X for p in parts]) if parts else np.empty((0, 0)),
        y=np.concatenate([p.y for p in parts]),
        stay_ids=np.concatenate([p.stay_ids for p in parts]),
        times=np.concatenate([p.times for p in parts]),
        config_hash=parts[0].config_hash,
        provenance=parts[0].provenance,
    )


def save_matrix(matrix: FeatureMatrix, csv_path: str | Path) -> None:
    """CSV with meta columns up front plus a sidecar JSON schema."""
    csv_path = Path(csv_path)
    df = pd.DataFrame(matrix.X, columns=matrix.columns)
    df.insert(0, "label", matrix.y)
    df.insert(0, "time_s", matrix.times)
    df.insert(0, "stay_id", matrix.stay_ids)
    df.to_csv(csv_path, index=False, float_format="%.8g")
    schema = {
        "format_version": 1,
        "columns": matrix.columns,
        "config_hash": matrix.config_hash,
        "provenance": matrix.provenance,
        "n_rows": len(matrix),
    }
    csv_path.with_suffix(".schema.json").write_text(json.dumps(schema, indent=2) + "\n")


def load_matrix(csv_path: str | Path) -> FeatureMatrix:
    csv_path = Path(csv_path)
    schema = json.loads(csv_path.with_suffix(".schema.json").read_text())
    df = pd.read_csv(csv_path)
    columns = schema["columns"]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise SchemaMismatchError(f"{csv_path}: columns {missing} missing from CSV")
    return FeatureMatrix(
        columns=columns,
        X=df[columns].to_numpy(dtype=float),
        y=df["label"].to_numpy(dtype=np.int8),
        stay_ids=df["stay_id"].to_numpy(dtype=object),
        times=df["time_s"].to_numpy(dtype=np.int64),
        config_hash=schema.get("config_hash", ""),
        provenance=schema.get("provenance", {}),
    )
