"""ABGA sample handling for PaO2 estimator training.

Training examples pair each ABGA with its predecessor: the input vector is
the current saturation plus selected fields of the previous panel, the
target is the current PaO2.  Filtering keeps targets in the normal
[40, 250] mmHg range and previous panels at most 24 h old.  Per-example
weights are 1/c^gamma where c counts examples sharing the same discretized
saturation value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from respews.errors import ConfigError
from respews.oxy.curve import severinghaus_sao2

PAO2_RANGE = (40.0, 250.0)
MAX_LAST_ABGA_AGE_S = 24 * 3600
# recorded saturations are discrete at 0.1 percentage points
SAO2_DISCRETIZATION = 1e-3

ABGA_FIELDS = (
    "sao2",
    "ph",
    "fio2",
    "pao2",
    "hb",
    "methb",
    "cohb",
    "pco2",
    "be",
    "hco3",
    "lactate",
)
CONTEXT_FIELDS = ("etco2_mean_10min", "temperature_mean_4h")

# backward selection on the development data retained these inputs; shipped
# as the default input set of the full estimator
FULL_NN_DEFAULT_INPUTS = ("sat", "sat_last", "pao2_last", "ph_last")
SPO2_NN_INPUTS = ("sat",)


@dataclass(frozen=True)
class AbgaSample:
    """One arterial-blood-gas panel with bedside context."""

    time: int
    sao2: float  # fraction
    pao2: float  # mmHg
    ph: float = np.nan
    fio2: float = np.nan
    hb: float = np.nan
    methb: float = np.nan
    cohb: float = np.nan
    pco2: float = np.nan
    be: float = np.nan
    hco3: float = np.nan
    lactate: float = np.nan
    etco2_mean_10min: float = np.nan
    temperature_mean_4h: float = np.nan

    def __post_init__(self):
        if self.time < 0:
            raise ConfigError("sample time must be >= 0")
        if not 0.0 <= self.sao2 <= 1.0:
            raise ConfigError(f"sao2 {self.sao2} outside [0, 1]")
        if np.isfinite(self.pao2) and self.pao2 <= 0:
            raise ConfigError(f"pao2 {self.pao2} must be positive")


@dataclass
class PaO2Dataset:
    """Column view of the training examples."""

    inputs: np.ndarray  # (n, d)
    input_names: list[str]
    target: np.ndarray  # mmHg
    sat: np.ndarray  # current saturation, fraction
    last_abga_age_s: np.ndarray

    def __len__(self):
        return len(self.target)

    def select_inputs(self, names: tuple[str, ...] | list[str]) -> "PaO2Dataset":
        idx = [self.input_names.index(n) for n in names]
        return replace(self, inputs=self.inputs[:, idx], input_names=list(names))

    def subset(self, mask: np.ndarray) -> "PaO2Dataset":
        return replace(
            self,
            inputs=self.inputs[mask],
            target=self.target[mask],
            sat=self.sat[mask],
            last_abga_age_s=self.last_abga_age_s[mask],
        )


def pair_abga_samples(stays: dict[str, list[AbgaSample]]) -> PaO2Dataset:
    """Build (previous, current) example pairs within each stay."""
    names = ["sat"]
    names += ["sat_last" if f == "sao2" else f"{f}_last" for f in ABGA_FIELDS]
    names += list(CONTEXT_FIELDS)
    rows, targets, sats, ages = [], [], [], []
    for stay_id in sorted(stays):
        samples = sorted(stays[stay_id], key=lambda s: s.time)
        for prev, cur in zip(samples, samples[1:]):
            row = [cur.sao2]
            row += [getattr(prev, f) for f in ABGA_FIELDS]
            row += [getattr(cur, f) for f in CONTEXT_FIELDS]
            rows.append(row)
            targets.append(cur.pao2)
            sats.append(cur.sao2)
            ages.append(cur.time - prev.time)
    if not rows:
        return PaO2Dataset(np.empty((0, len(names))), names, np.empty(0), np.empty(0), np.empty(0))
    row_arr = np.array(rows, dtype=float)
    return PaO2Dataset(
        inputs=row_arr,
        input_names=names,
        target=np.array(targets, dtype=float),
        sat=np.array(sats, dtype=float),
        last_abga_age_s=np.array(ages, dtype=float),
    )


def filter_abga_dataset(dataset: PaO2Dataset) -> tuple[PaO2Dataset, dict[str, int]]:
    """Apply the training exclusions; bounds are inclusive.

    Returns the retained dataset and per-rule removal counts (a sample
    violating both rules counts under the range rule).
    """
    in_range = (dataset.target >= PAO2_RANGE[0]) & (dataset.target <= PAO2_RANGE[1])
    fresh = dataset.last_abga_age_s <= MAX_LAST_ABGA_AGE_S
    removed = {
        "pao2_outside_range": int(np.sum(~in_range)),
        "last_abga_too_old": int(np.sum(in_range & ~fresh)),
    }
    return dataset.subset(in_range & fresh), removed


def discretize_sao2(sat: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(sat, dtype=float) / SAO2_DISCRETIZATION) * SAO2_DISCRETIZATION


def example_weight(sat: np.ndarray, gamma: float | None) -> np.ndarray:
    """Cost multipliers 1/c^gamma; c counts examples sharing the saturation value."""
    sat = np.asarray(sat, dtype=float)
    if gamma is None or gamma == 0:
        return np.ones(sat.shape)
    if gamma < 0:
        raise ConfigError("gamma must be >= 0")
    _, inverse, counts = np.unique(discretize_sao2(sat), return_inverse=True, return_counts=True)
    return 1.0 / counts[inverse] ** gamma


def make_synthetic_abga(
    seed: int,
    n: int,
    noise_sigma_mmhg: float = 5.0,
    last_fields_noise: float = 0.0,
) -> PaO2Dataset:
    """Deterministic synthetic ABGA examples from the forward curve.

    True PaO2 follows a clinical mixture prior concentrated in the normal
    range with a low-oxygenation tail; the recorded saturation is the
    forward dissociation curve evaluated on a Gaussian-perturbed PaO2
    (sigma in mmHg), discretized like real saturation readings; the target
    is the true PaO2.  With sigma=0 the mapping is exactly the forward
    curve.
    """
    rng = np.random.default_rng(seed)
    comp = rng.uniform(size=n)
    p_true = np.where(
        comp < 0.72,
        rng.normal(88.0, 18.0, n),
        np.where(comp < 0.90, rng.normal(56.0, 9.0, n), rng.normal(150.0, 35.0, n)),
    )
    p_true = np.clip(p_true, PAO2_RANGE[0], PAO2_RANGE[1])
    p_obs = p_true + rng.normal(0.0, noise_sigma_mmhg, n) if noise_sigma_mmhg > 0 else p_true
    sat = severinghaus_sao2(np.clip(p_obs, 25.0, 500.0))
    sat = np.clip(discretize_sao2(sat), 0.25, 0.9995)
    names = ["sat", "sat_last", "pao2_last", "ph_last"]
    prev_p = np.clip(p_true + rng.normal(0.0, 12.0, n), 30.0, 400.0)
    inputs = np.column_stack(
        [
            sat,
            np.clip(discretize_sao2(severinghaus_sao2(prev_p + rng.normal(0, 1 + last_fields_noise, n))), 0.25, 1.0),
            prev_p + rng.normal(0.0, 1.0 + last_fields_noise, n),
            rng.normal(7.4, 0.05, n),
        ]
    )
    return PaO2Dataset(
        inputs=inputs,
        input_names=names,
        target=p_true,
        sat=sat,
        last_abga_age_s=rng.uniform(0, 20 * 3600, n),
    )
