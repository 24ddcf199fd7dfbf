"""Synthetic ICU cohorts with planted respiratory-failure episodes.

Stays are built from piecewise-linear design curves plus bounded (uniform)
noise.  Four stay scenarios are mixed: failure stays with a supplemental-O2 /
SpO2 precursor ramp followed by a ventilated low-P/F episode, "distractor"
stays with a brief benign desaturation, ventilated-but-stable stays, and
plain stable stays.  The planted ground truth of each stay is the set of
intervals where the noise-free design P/F curve lies below 200 mmHg; it is
recorded on the cohort so downstream labeling can be checked against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from respews.cohort.resample import resample
from respews.cohort.types import Cohort, GriddedStay, RawSeries
from respews.errors import ConfigError
from respews.oxy.curve import severinghaus_sao2
from respews.pf.fio2 import supplemental_to_fio2

H = 3600
MIN = 60


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs of the synthetic generator.

    All durations are hours unless suffixed otherwise.  `noise_scale`
    multiplies every bounded-noise amplitude; 0 gives noise-free stays.
    """

    n_stays: int = 50
    seed: int = 0
    failure_fraction: float = 0.4
    distractor_fraction: float = 0.2
    ventilated_stable_fraction: float = 0.1
    stay_hours: tuple[float, float] = (24.0, 168.0)
    episode_hours: tuple[float, float] = (3.0, 8.0)
    precursor_hours: tuple[float, float] = (3.0, 6.0)
    episode_onset_min_hours: float = 10.0
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.n_stays < 1:
            raise ConfigError("n_stays must be >= 1")
        for name in ("failure_fraction", "distractor_fraction", "ventilated_stable_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.failure_fraction + self.distractor_fraction + self.ventilated_stable_fraction > 1.0 + 1e-9:
            raise ConfigError("scenario fractions must sum to <= 1")
        for name in ("stay_hours", "episode_hours", "precursor_hours"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} bounds must satisfy 0 < lo <= hi")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be >= 0")


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    doc = json.loads(Path(path).read_text())
    for key in ("stay_hours", "episode_hours", "precursor_hours"):
        if key in doc:
            doc[key] = tuple(doc[key])
    return ScenarioConfig(**doc)


def save_scenario_config(config: ScenarioConfig, path: str | Path) -> None:
    doc = asdict(config)
    for key in ("stay_hours", "episode_hours", "precursor_hours"):
        doc[key] = list(doc[key])
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


class _Curve:
    """Piecewise-linear curve with flat extrapolation beyond its breakpoints."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        order = np.argsort(times, kind="stable")
        self.times = times[order]
        self.values = values[order]

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def overlay(self, span_start: float, span_end: float, times, values) -> "_Curve":
        """Replace the curve inside [span_start, span_end] by new breakpoints."""
        keep = (self.times < span_start) | (self.times > span_end)
        anchor_t = [span_start, span_end]
        anchor_v = [float(self(span_start)), float(self(span_end))]
        return _Curve(
            np.concatenate([self.times[keep], anchor_t, np.asarray(times, dtype=float)]),
            np.concatenate([self.values[keep], anchor_v, np.asarray(values, dtype=float)]),
        )


def _wander(rng, length_s: float, every_s: float, lo: float, hi: float) -> _Curve:
    n = int(length_s // every_s) + 2
    return _Curve(np.arange(n) * every_s, rng.uniform(lo, hi, n))


def _sample_times(rng, t0: float, t1: float, lo_s: float, hi_s: float) -> np.ndarray:
    """Jittered sampling timestamps covering [t0, t1]."""
    times = []
    t = t0
    while t <= t1:
        times.append(t)
        t += rng.uniform(lo_s, hi_s)
    return np.array(times, dtype=float)


@dataclass
class _Plan:
    """Resolved per-stay scenario: episode geometry and design curves."""

    kind: str
    length_s: int
    episodes: list[dict] = field(default_factory=list)
    pao2: _Curve | None = None
    suppl: _Curve | None = None
    vent_fio2: _Curve | None = None  # fraction, only meaningful while ventilated
    vent_spans: list[tuple[float, float]] = field(default_factory=list)
    resp_rate: _Curve | None = None
    depth: _Curve | None = None  # 0 stable .. 1 deep failure (sedation etc.)
    peep_level: float = 8.0


def _plan_stay(rng, cfg: ScenarioConfig) -> _Plan:
    length_s = int(rng.uniform(cfg.stay_hours[0], cfg.stay_hours[1]) * H) // 300 * 300
    u = rng.uniform()
    if u < cfg.failure_fraction:
        kind = "failure"
    elif u < cfg.failure_fraction + cfg.distractor_fraction:
        kind = "distractor"
    elif u < cfg.failure_fraction + cfg.distractor_fraction + cfg.ventilated_stable_fraction:
        kind = "vent_stable"
    else:
        kind = "stable"

    plan = _Plan(kind=kind, length_s=length_s)
    plan.pao2 = _wander(rng, length_s, 6 * H, 83.0, 96.0)
    base_suppl = 0.0
    if kind in ("stable", "distractor") and rng.uniform() < 0.18:
        base_suppl = rng.uniform(0.5, 1.4)
    plan.suppl = _Curve([0.0, length_s], [base_suppl, base_suppl])
    plan.vent_fio2 = _Curve([0.0, length_s], [0.35, 0.35])
    plan.resp_rate = _wander(rng, length_s, 4 * H, 12.0, 15.0)
    plan.depth = _Curve([0.0, length_s], [0.0, 0.0])

    onset_min = cfg.episode_onset_min_hours * H
    if kind == "failure":
        dur = rng.uniform(cfg.episode_hours[0], cfg.episode_hours[1]) * H
        pre = rng.uniform(cfg.precursor_hours[0], cfg.precursor_hours[1]) * H
        latest = length_s - dur - 3 * H
        if latest <= onset_min:
            plan.kind = "stable"
            return plan
        onset = rng.uniform(onset_min, latest)
        end = onset + dur
        fmax = rng.uniform(0.5, 0.7)
        pf_fail = rng.uniform(110.0, 160.0)
        vent_off = min(end + rng.uniform(2 * H, 5 * H), length_s)
        plan.episodes.append({"onset": onset, "end": end, "pre": pre, "vent_off": vent_off})
        plan.vent_spans.append((onset, vent_off))
        plan.peep_level = rng.uniform(7.0, 10.0)

        # precursor depth varies; supplemental-O2 response and desaturation are
        # correlated but not deterministic, so no single cue separates classes
        pao2_onset = rng.uniform(74.0, 80.0)
        suppl_peak = rng.uniform(0.8, 2.0)
        rr_bump = rng.uniform(16.0, 23.0)
        pre_start = onset - pre
        plan.pao2 = plan.pao2.overlay(
            pre_start,
            min(end + 1 * H, length_s),
            [onset - 1, onset, onset + 30 * MIN, end, min(end + 1 * H, length_s) - 1],
            [pao2_onset, pao2_onset, pf_fail * fmax, pf_fail * fmax, 85.0],
        )
        plan.suppl = plan.suppl.overlay(
            pre_start,
            min(vent_off + 4 * H, length_s),
            [onset - 1, onset, vent_off, min(vent_off + 4 * H, length_s) - 1],
            [suppl_peak, 0.0, 0.0, base_suppl],
        )
        plan.vent_fio2 = plan.vent_fio2.overlay(
            onset,
            vent_off,
            [onset, onset + 30 * MIN, end, end + 30 * MIN],
            [0.40, fmax, fmax, 0.35],
        )
        plan.resp_rate = plan.resp_rate.overlay(
            pre_start,
            min(end + 2 * H, length_s),
            [onset, end],
            [rr_bump, rr_bump - 2.0],
        )
        plan.depth = plan.depth.overlay(
            onset - 10 * MIN,
            min(vent_off + 1 * H, length_s),
            [onset, end, vent_off],
            [1.0, 1.0, 0.3],
        )
    elif kind == "distractor":
        latest = length_s - 4 * H
        if latest <= onset_min:
            plan.kind = "stable"
            return plan
        dip_start = rng.uniform(onset_min, latest)
        dip = rng.uniform(30 * MIN, 2.5 * H)
        dip_pao2 = rng.uniform(68.0, 77.0)
        plan.pao2 = plan.pao2.overlay(
            dip_start,
            dip_start + dip + 30 * MIN,
            [dip_start + 15 * MIN, dip_start + dip],
            [dip_pao2, dip_pao2],
        )
        if rng.uniform() < 0.6:  # transient oxygen response, later weaned again
            # peaks stay below the 1.5 l/min rounding boundary so the estimated
            # FiO2 is at most 26% and the dip's P/F keeps a wide margin to 200
            plan.suppl = plan.suppl.overlay(
                dip_start,
                min(dip_start + dip + 3 * H, length_s),
                [dip_start + 20 * MIN, dip_start + dip],
                [rng.uniform(0.6, 1.1), rng.uniform(0.6, 1.1)],
            )
        plan.resp_rate = plan.resp_rate.overlay(
            dip_start,
            dip_start + dip + 30 * MIN,
            [dip_start + 15 * MIN, dip_start + dip],
            [rng.uniform(15.0, 19.0)] * 2,
        )
        plan.episodes.append(
            {"onset": dip_start, "end": dip_start + dip, "pre": 0.0, "vent_off": None, "abga_only": True}
        )
    elif kind == "vent_stable":
        plan.vent_spans.append((0.0, length_s))
        plan.peep_level = rng.uniform(4.0, 7.0)
        level = rng.uniform(0.30, 0.35)
        plan.vent_fio2 = _Curve([0.0, length_s], [level, level])
        plan.pao2 = _wander(rng, length_s, 6 * H, 95.0, 110.0)
        plan.resp_rate = _wander(rng, length_s, 4 * H, 13.0, 17.0)
        plan.depth = _Curve([0.0, length_s], [0.25, 0.25])
    return plan


def _is_ventilated(plan: _Plan, t: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(t), dtype=bool)
    for a, b in plan.vent_spans:
        out |= (np.asarray(t) >= a) & (np.asarray(t) <= b)
    return out


def _design_fio2(plan: _Plan, t: np.ndarray) -> np.ndarray:
    """Noise-free FiO2 the estimation pipeline would reconstruct."""
    t = np.asarray(t, dtype=float)
    vent = _is_ventilated(plan, t)
    suppl = plan.suppl(t)
    out = np.full(t.shape, 0.21)
    for i in range(t.size):
        if vent.flat[i]:
            out.flat[i] = plan.vent_fio2(t.flat[i])
        elif suppl.flat[i] > 0:
            out.flat[i] = supplemental_to_fio2(float(suppl.flat[i]))
    return out


def _planted_spans(plan: _Plan) -> list[tuple[int, int]]:
    """Intervals (seconds) where the design P/F curve is below 200 mmHg."""
    t = np.arange(0.0, plan.length_s + 1, MIN)
    pf = plan.pao2(t) / _design_fio2(plan, t)
    below = pf < 200.0
    spans = []
    i = 0
    while i < below.size:
        if below[i]:
            j = i
            while j + 1 < below.size and below[j + 1]:
                j += 1
            spans.append((int(t[i]), int(t[j])))
            i = j + 1
        else:
            i += 1
    return spans


def _u(rng, amp: float) -> float:
    return float(rng.uniform(-amp, amp))


def _build_stay(stay_id: str, rng, cfg: ScenarioConfig) -> tuple[GriddedStay, list[tuple[int, int]]]:
    plan = _plan_stay(rng, cfg)
    ns = cfg.noise_scale
    L = plan.length_s
    raw: dict[str, tuple[list[int], list[float]]] = {}

    def emit(var: str, t: float, value: float) -> None:
        if 0 <= t <= L and np.isfinite(value):
            raw.setdefault(var, ([], []))
            raw[var][0].append(int(round(t)))
            raw[var][1].append(float(value))

    # continuous pulse-oximetry, one sample per 5 minutes
    spo2_t = np.arange(0.0, L + 1, 300.0)
    spo2_p = plan.pao2(spo2_t) + rng.uniform(-2.5 * ns, 2.5 * ns, spo2_t.size)
    spo2_v = 100.0 * severinghaus_sao2(np.clip(spo2_p, 25.0, 600.0))
    spo2_v = spo2_v + rng.uniform(-0.35 * ns, 0.35 * ns, spo2_t.size)
    for t, v in zip(spo2_t, np.round(np.clip(spo2_v, 60.0, 100.0), 1)):
        emit("spo2", t, v)

    # ABGA panel: sparse normally, hourly-ish around episodes
    abga_times = list(_sample_times(rng, rng.uniform(0, 2 * H), L, 6 * H, 10 * H))
    for ep in plan.episodes:
        abga_times += list(
            _sample_times(rng, ep["onset"] - ep["pre"], min(ep["end"] + 2 * H, L), 1 * H, 2 * H)
        )
    for t in sorted(abga_times):
        p = plan.pao2(t) + _u(rng, 2.0 * ns)
        emit("pao2", t, round(max(p, 25.0), 1))
        sat = 100.0 * severinghaus_sao2(max(plan.pao2(t) + _u(rng, 1.0 * ns), 25.0))
        emit("sao2", t, round(min(sat, 100.0), 1))

    # oxygen delivery
    for t in _sample_times(rng, 0, L, 2 * H, 4 * H):
        emit("supplemental_oxygen", t, round(max(plan.suppl(t) + _u(rng, 0.1 * ns), 0.0) * 2) / 2)
    for ep in plan.episodes:
        t0_suppl = ep["onset"] - ep["pre"] if not ep.get("abga_only") else ep["onset"]
        for t in _sample_times(rng, t0_suppl, min(ep["end"] + 2 * H, L), 20 * MIN, 40 * MIN):
            emit("supplemental_oxygen", t, round(max(plan.suppl(t), 0.0) * 2) / 2)
        if not ep.get("abga_only"):
            emit("supplemental_oxygen", ep["onset"], 0.0)
    suppl_now = plan.suppl(np.arange(0.0, L + 1, 4 * H))
    if np.any(suppl_now > 0):
        for t in _sample_times(rng, rng.uniform(0, 4 * H), L, 4 * H, 8 * H):
            s = plan.suppl(t)
            if s > 0:
                emit("supplemental_fio2_pct", t, round(supplemental_to_fio2(float(s)) * 100 + _u(rng, 2.0 * ns)))

    vent_edges = sorted({0.0} | {a for a, _ in plan.vent_spans} | {min(b, L) for _, b in plan.vent_spans})
    for t in sorted(set(list(_sample_times(rng, 0, L, 4 * H, 4 * H)) + vent_edges)):
        emit("ventilation_state", t, 1.0 if _is_ventilated(plan, np.array(t)) else 0.0)
        emit("spontaneous_breathing", t, 0.0 if _is_ventilated(plan, np.array(t)) else 1.0)
    for a, b in plan.vent_spans:
        for t in _sample_times(rng, a, min(b, L), 30 * MIN, 60 * MIN):
            emit("fio2", t, round(np.clip(plan.vent_fio2(t) * 100 + _u(rng, 1.0 * ns), 21, 100)))
        for t in _sample_times(rng, a, min(b, L), 50 * MIN, 70 * MIN):
            emit("peep", t, round(plan.peep_level + _u(rng, 1.0 * ns)))
            emit("peak_pressure", t, round(16.0 + 8.0 * float(plan.depth(t)) + _u(rng, 1.5 * ns), 1))
        for t in _sample_times(rng, a, min(b, L), 4 * H, 4 * H):
            emit("ventilator_mode_group", t, float(rng.integers(1, 4)))
        if b < L:  # extubation marker
            emit("extubation_time_point", b, 1.0)

    for t in _sample_times(rng, 0, L, 5 * MIN, 10 * MIN):
        emit("respiratory_rate", t, round(np.clip(plan.resp_rate(t) + _u(rng, 1.0 * ns), 6, 45), 1))
    for t in _sample_times(rng, rng.uniform(0, 4 * H), L, 4 * H, 8 * H):
        d = float(plan.depth(t))
        emit("gcs_eye", t, float(np.clip(round(4 - 2 * d), 1, 4)))
        emit("gcs_motor", t, float(np.clip(round(6 - 2 * d), 1, 6)))
        emit("gcs_response", t, float(np.clip(round(5 - 2 * d), 1, 5)))
        emit("rass", t, float(np.clip(round(0 - 3 * d + _u(rng, 1.0)), -5, 4)))
    for t in _sample_times(rng, rng.uniform(0, 1 * H), L, 1 * H, 1 * H):
        emit("out", t, round(max(70.0 - 25.0 * float(plan.depth(t)) + _u(rng, 10.0 * ns), 0.0)))
    for t in _sample_times(rng, rng.uniform(0, 3 * H), L, 2 * H, 4 * H):
        emit("st2_ecg", t, round(0.05 + _u(rng, 0.03 * ns), 3))
    trach = 1.0 if rng.uniform() < 0.05 else 0.0
    for t in _sample_times(rng, rng.uniform(0, 8 * H), L, 8 * H, 8 * H):
        emit("tracheotomy_state", t, trach)
    if rng.uniform() < 0.05:
        for t in _sample_times(rng, rng.uniform(0, 8 * H), L, 8 * H, 8 * H):
            emit("peritoneal_dialysis", t, 1.0)

    stay = GriddedStay(
        stay_id=stay_id,
        statics={
            "age": float(rng.integers(30, 90)),
            "weight": round(float(rng.uniform(50, 110)), 1),
            "admission_origin": float(rng.integers(0, 4)),
        },
        raw={var: RawSeries(t, v) for var, (t, v) in raw.items()},
    )
    return stay, _planted_spans(plan)


def generate_synthetic_cohort(
    seed: int,
    n_stays: int | None = None,
    scenario_config: ScenarioConfig | None = None,
    grid_step: int = 300,
) -> Cohort:
    """Deterministic synthetic cohort; pure function of (seed, n_stays, config)."""
    cfg = scenario_config or ScenarioConfig()
    n = n_stays if n_stays is not None else cfg.n_stays
    if n < 1:
        raise ConfigError("n_stays must be >= 1")
    width = max(4, len(str(n - 1)))
    cohort = Cohort()
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        stay_id = f"s{i:0{width}d}"
        stay, spans = _build_stay(stay_id, rng, cfg)
        cohort.stays[stay_id] = resample(stay, grid_step)
        cohort.planted_events[stay_id] = spans
    return cohort
