import numpy as np
import pytest

from conftest import brute_force_auroc
from respews.oxy.dataset import make_synthetic_abga
from respews.oxy.evaluate import BUCKETS, bucket_mask, evaluate_pao2_models


def test_bucket_membership_93_percent():
    hits = [name for name, lo, hi in BUCKETS if bucket_mask(np.array([93.0]), lo, hi)[0]]
    assert hits == ["0-100", "0-96", "90-96"]


def test_bucket_boundaries_half_open():
    # 96 belongs to 0-96 and 90-96, not to 96-100
    hits = [name for name, lo, hi in BUCKETS if bucket_mask(np.array([96.0]), lo, hi)[0]]
    assert "0-96" in hits and "90-96" in hits and "96-100" not in hits
    # partition property of the two complementary buckets
    s = np.linspace(0.1, 100, 2000)
    in_low = bucket_mask(s, 0, 96)
    in_high = bucket_mask(s, 96, 100)
    assert np.all(in_low ^ in_high)


def test_perfect_estimator_report():
    ds = make_synthetic_abga(0, 2000, 5.0)
    report = evaluate_pao2_models(
        {"perfect": ds.target.copy()}, ds.target, ds.sat, np.full(len(ds), 0.4)
    )
    for row in report.rows:
        if row.n:
            assert row.median_abs_error["perfect"] == 0.0
    assert report.auroc["perfect"] == 1.0


def test_constant_estimator_auroc_half():
    rng = np.random.default_rng(1)
    n = 4000
    target = np.where(rng.uniform(size=n) < 0.5, 70.0, 110.0) + rng.normal(0, 3, n)
    sat = np.clip(target / 130.0, 0.5, 0.99)
    pred = np.full(n, 90.0)
    report = evaluate_pao2_models({"const": pred}, target, sat, np.full(n, 0.45))
    # constant scores: every pair ties, AUROC is exactly 0.5
    assert report.auroc["const"] == pytest.approx(0.5, abs=0.05)
    positive = (target / 0.45 <= 200.0).astype(int)
    assert report.auroc["const"] == pytest.approx(
        brute_force_auroc(-(pred / 0.45), positive), abs=1e-12
    )


def test_empty_bucket_reported_with_nan():
    target = np.array([90.0, 95.0])
    sat = np.array([0.97, 0.98])  # only high-saturation samples
    report = evaluate_pao2_models({"m": target}, target, sat, np.array([0.3, 0.3]))
    row_6075 = [r for r in report.rows if r.bucket == "60-75"][0]
    assert row_6075.n == 0
    assert np.isnan(row_6075.median_abs_error["m"])


def test_csv_layout():
    ds = make_synthetic_abga(2, 500, 5.0)
    report = evaluate_pao2_models(
        {"pnl": ds.target + 1, "nn": ds.target - 1}, ds.target, ds.sat, np.full(len(ds), 0.35)
    )
    text = report.to_csv()
    lines = text.strip().splitlines()
    assert lines[0].split(",")[:2] == ["range_spo2_pct", "n"]
    assert len(lines) == 1 + len(BUCKETS) + 1  # header + buckets + auroc row
    assert lines[-1].startswith("auroc,")
