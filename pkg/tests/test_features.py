import numpy as np
import pytest

from respews.cohort.resample import resample, truncate_stay
from respews.cohort.types import GriddedStay, RawSeries
from respews.features.matrix import (
    build_matrix,
    column_schema,
    compute_stay_features,
    config_hash,
    load_matrix,
    save_matrix,
)
from respews.features.summarize import (
    expanding_summary,
    instability_fractions,
    intensity,
    rolling_summary,
    summarize,
)
from respews.labels import LABEL_NEG, LABEL_POS, LABEL_UNDEF
from respews.variables import VariableConfig

H = 3600
STEP = 300


def naive_window_summary(values, times_s):
    """Brute-force recomputation used as the 1e-9 oracle."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(times_s, dtype=float) / 3600.0
    d = np.isfinite(v)
    if not d.any():
        return dict.fromkeys(("mean", "std", "trend", "min", "max"), np.nan)
    vd, td = v[d], t[d]
    out = {
        "mean": vd.sum() / len(vd),
        "std": np.sqrt(((vd - vd.mean()) ** 2).sum() / len(vd)),
        "min": vd.min(),
        "max": vd.max(),
        "trend": np.nan,
    }
    if len(vd) >= 2:
        slope, _ = np.polyfit(td, vd, 1)
        out["trend"] = slope
    return out


def test_summarize_linear_example():
    got = summarize([1.0, 2.0, 3.0], [0, 300, 600])
    assert got["mean"] == 2.0 and got["min"] == 1.0 and got["max"] == 3.0
    assert got["trend"] == pytest.approx(12.0)
    assert got["std"] == pytest.approx(np.sqrt(2.0 / 3.0))


def test_summarize_single_value():
    got = summarize([7.0], [0])
    assert got["mean"] == got["min"] == got["max"] == 7.0
    assert got["std"] == 0.0
    assert np.isnan(got["trend"])


def test_summarize_empty_window():
    got = summarize([np.nan, np.nan], [0, 300])
    assert all(np.isnan(x) for x in got.values())


def test_rolling_matches_naive_oracle():
    rng = np.random.default_rng(0)
    values = rng.normal(50, 10, 100)
    values[rng.uniform(size=100) < 0.3] = np.nan
    rolled = rolling_summary(values, STEP, 8 * H)
    w = 8 * H // STEP
    for i in range(100):
        lo = max(i - w + 1, 0)
        expect = naive_window_summary(values[lo : i + 1], np.arange(lo, i + 1) * STEP)
        for key in ("mean", "std", "trend", "min", "max"):
            got = rolled[key][i]
            if np.isnan(expect[key]):
                assert np.isnan(got), (key, i)
            else:
                assert got == pytest.approx(expect[key], abs=1e-9), (key, i)


def test_expanding_matches_naive_oracle():
    rng = np.random.default_rng(1)
    values = rng.normal(0, 5, 120)
    values[rng.uniform(size=120) < 0.25] = np.nan
    grown = expanding_summary(values, STEP)
    for i in (0, 3, 17, 64, 119):
        expect = naive_window_summary(values[: i + 1], np.arange(i + 1) * STEP)
        for key in ("mean", "std", "trend", "min", "max"):
            got = grown[key][i]
            if np.isnan(expect[key]):
                assert np.isnan(got)
            else:
                assert got == pytest.approx(expect[key], abs=1e-9)


def test_intensity_examples():
    grid = np.arange(0, 10 * H, STEP)
    feats = intensity(np.array([100, 2 * H, 5 * H]), grid, STEP, 8 * H)
    at = lambda t: int(t // STEP)
    # last real measurement 10 minutes ago
    i = at(5 * H + 600)
    assert feats["time_to_last_s"][i] == 600
    # 4 measurements in the last 8 h -> 0.5 per hour
    feats4 = intensity(np.array([H, 2 * H, 3 * H, 4 * H]), np.array([8 * H]), STEP, 8 * H)
    assert feats4["density_window"][0] == pytest.approx(0.5)
    # nothing yet
    early = intensity(np.array([5 * H]), np.array([0, STEP]), STEP, 8 * H)
    assert np.isnan(early["time_to_last_s"]).all()
    assert np.all(early["density_window"] == 0)
    assert np.all(early["density_stay"] == 0)
    none = intensity(None, grid, STEP, 8 * H)
    assert np.isnan(none["time_to_last_s"]).all()


def test_instability_fraction_half_window():
    # SpO2 inside the 90-94 band for half of the defined window points
    values = np.array([92.0, 96.0] * 12)
    fracs = instability_fractions(values, ((90.0, 94.0),), STEP, 8 * H)
    assert fracs[0][-1] == pytest.approx(0.5)


def test_instability_outside_all_bands():
    values = np.full(30, 99.0)
    fracs = instability_fractions(values, ((90.0, 94.0), (80.0, 89.9)), STEP, 8 * H)
    assert all(np.all(f == 0) for f in fracs)


def test_instability_fractions_sum_to_one_with_complement():
    rng = np.random.default_rng(2)
    values = rng.uniform(80, 100, 200)
    bands = ((95.0, 100.0), (90.0, 94.999999), (80.0, 89.999999))
    fracs = instability_fractions(values, bands, STEP, None)
    total = sum(fracs)
    # brute-force recount: bands cover the full range, so fractions sum to 1
    assert np.allclose(total, 1.0)


def _toy_stay():
    raw = {
        "spo2": RawSeries([0, 300, 900, 1800], [96.0, 95.0, 93.0, 92.0]),
        "supplemental_oxygen": RawSeries([600], [2.0]),
    }
    stay = GriddedStay(stay_id="toy", statics={"age": 61.0, "weight": 80.0, "admission_origin": 2.0}, raw=raw)
    return resample(stay, 300)


TOY_CONFIG = [
    VariableConfig("spo2", "continuous", "%", ("current", "summary", "intensity", "instability"),
                   ((90.0, 94.0), (80.0, 89.9))),
    VariableConfig("supplemental_oxygen", "continuous", "l/min", ("current", "summary")),
    VariableConfig("age", "static", "years", ()),
    VariableConfig("weight", "static", "kg", ()),
    VariableConfig("admission_origin", "static", "code", ()),
]


def test_column_count_hand_computed():
    # spo2: 1 current + 10 summaries + 3 intensity + 2 bands x 2 windows = 18
    # supplemental_oxygen: 1 + 10 = 11; statics: 3  -> 32 columns
    columns = column_schema(TOY_CONFIG)
    assert len(columns) == 32
    assert columns[0] == "spo2:current"
    assert columns[-3:] == ["static:age", "static:weight", "static:admission_origin"]
    assert len(set(columns)) == 32


def test_build_matrix_rows_and_labels():
    stay = _toy_stay()
    labels = np.array([LABEL_NEG, LABEL_POS, LABEL_UNDEF, LABEL_POS, LABEL_NEG, LABEL_NEG, LABEL_NEG], dtype=np.int8)
    matrix = build_matrix(stay, labels, TOY_CONFIG)
    assert len(matrix) == 6  # undefined row dropped
    assert matrix.y.tolist() == [0, 1, 1, 0, 0, 0]
    assert matrix.times.tolist() == [0, 300, 900, 1200, 1500, 1800]
    age = matrix.column("static:age")
    assert np.all(age == 61.0)


def test_all_labels_undefined_gives_empty_matrix():
    stay = _toy_stay()
    labels = np.full(stay.n_grid, LABEL_UNDEF, dtype=np.int8)
    matrix = build_matrix(stay, labels, TOY_CONFIG)
    assert len(matrix) == 0


def test_matrix_deterministic():
    stay = _toy_stay()
    labels = np.zeros(stay.n_grid, dtype=np.int8)
    a = build_matrix(stay, labels, TOY_CONFIG)
    b = build_matrix(_toy_stay(), labels, TOY_CONFIG)
    assert a.columns == b.columns
    assert np.array_equal(a.X, b.X, equal_nan=True)


def test_matrix_csv_round_trip(tmp_path):
    stay = _toy_stay()
    labels = np.zeros(stay.n_grid, dtype=np.int8)
    matrix = build_matrix(stay, labels, TOY_CONFIG)
    save_matrix(matrix, tmp_path / "m.csv")
    loaded = load_matrix(tmp_path / "m.csv")
    assert loaded.columns == matrix.columns
    assert loaded.config_hash == matrix.config_hash == config_hash(TOY_CONFIG)
    assert np.allclose(loaded.X, matrix.X, equal_nan=True, atol=1e-6)
    assert np.array_equal(loaded.y, matrix.y)
    assert (tmp_path / "m.schema.json").exists()


def test_causality_by_truncation(small_cohort):
    sid = small_cohort.stay_ids[0]
    stay = small_cohort[sid]
    full = compute_stay_features(stay, TOY_CONFIG)
    rng = np.random.default_rng(0)
    for i in rng.integers(1, stay.n_grid, size=8):
        cut = truncate_stay(stay, int(i) * stay.grid_step)
        partial = compute_stay_features(cut, TOY_CONFIG)
        row_full = full[int(i)]
        row_cut = partial[-1]
        assert np.array_equal(
            np.where(np.isnan(row_full), -1e300, row_full),
            np.where(np.isnan(row_cut), -1e300, row_cut),
        ), f"feature mismatch at grid index {i}"


def test_default_registry_column_count_formula():
    from respews.variables import DEFAULT_VARIABLES

    expected = 0
    for cfg in DEFAULT_VARIABLES:
        if cfg.kind == "static":
            expected += 1
            continue
        if "current" in cfg.classes:
            expected += 1
        if "summary" in cfg.classes:
            expected += 10
        if "intensity" in cfg.classes:
            expected += 3
        if "instability" in cfg.classes:
            expected += 2 * len(cfg.bands)
    assert len(column_schema(DEFAULT_VARIABLES)) == expected
