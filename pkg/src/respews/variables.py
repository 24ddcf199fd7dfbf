"""Variable registry: the 25 default clinical variables and their feature config.

Each entry says what kind of channel a variable is, which feature classes
apply to it, and its severity bands (value intervals ordered L1..L3, most
benign first).  The default registry ships as a JSON data file so bands and
class assignments can be amended without a code change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from respews.errors import ConfigError

FEATURE_CLASSES = ("current", "summary", "intensity", "instability")
VARIABLE_KINDS = ("continuous", "binary", "categorical", "static", "derived")


@dataclass(frozen=True)
class VariableConfig:
    variable_id: str
    kind: str = "continuous"
    unit: str = ""
    classes: tuple[str, ...] = ("current", "summary", "intensity")
    bands: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.variable_id:
            raise ConfigError("variable_id must be non-empty")
        if self.kind not in VARIABLE_KINDS:
            raise ConfigError(f"unknown variable kind {self.kind!r}")
        for cls in self.classes:
            if cls not in FEATURE_CLASSES:
                raise ConfigError(f"unknown feature class {cls!r}")
        if len(self.bands) > 3:
            raise ConfigError("at most 3 severity bands per variable")
        for lo, hi in self.bands:
            if not lo <= hi:
                raise ConfigError(f"band [{lo}, {hi}] is empty")
        for (lo1, hi1), (lo2, hi2) in zip(self.bands, self.bands[1:]):
            if max(lo1, lo2) <= min(hi1, hi2):
                raise ConfigError("severity bands must be pairwise disjoint")


def _parse(doc: dict) -> list[VariableConfig]:
    out = []
    for entry in doc["variables"]:
        out.append(
            VariableConfig(
                variable_id=entry["variable_id"],
                kind=entry.get("kind", "continuous"),
                unit=entry.get("unit", ""),
                classes=tuple(entry.get("classes", [])),
                bands=tuple((float(lo), float(hi)) for lo, hi in entry.get("bands", [])),
            )
        )
    ids = [v.variable_id for v in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate variable_id in variable config")
    return out


def load_variable_config(path: str | Path) -> list[VariableConfig]:
    with open(path) as fh:
        return _parse(json.load(fh))


def save_variable_config(variables: list[VariableConfig], path: str | Path) -> None:
    doc = {
        "format_version": 1,
        "variables": [
            {
                "variable_id": v.variable_id,
                "kind": v.kind,
                "unit": v.unit,
                "classes": list(v.classes),
                "bands": [[lo, hi] for lo, hi in v.bands],
            }
            for v in variables
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def default_variables() -> list[VariableConfig]:
    text = resources.files("respews").joinpath("data/default_variables.json").read_text()
    return _parse(json.loads(text))


DEFAULT_VARIABLES = default_variables()
KNOWN_VARIABLE_IDS = frozenset(v.variable_id for v in DEFAULT_VARIABLES)
STATIC_VARIABLE_IDS = tuple(v.variable_id for v in DEFAULT_VARIABLES if v.kind == "static")
MEASURED_VARIABLE_IDS = tuple(
    v.variable_id for v in DEFAULT_VARIABLES if v.kind not in ("static", "derived")
)
