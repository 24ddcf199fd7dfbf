"""Bucketed evaluation of PaO2 estimators.

Errors are reported per SpO2 bucket (percent, membership lo < s <= hi) as
median absolute error with IQR, plus the AUROC of detecting true
P/F <= 200 mmHg when the estimated P/F serves as the (negated) score.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from respews.alarms import timepoint_roc

BUCKETS = (
    ("0-100", 0.0, 100.0),
    ("0-96", 0.0, 96.0),
    ("96-100", 96.0, 100.0),
    ("90-96", 90.0, 96.0),
    ("85-90", 85.0, 90.0),
    ("80-85", 80.0, 85.0),
    ("75-80", 75.0, 80.0),
    ("60-75", 60.0, 75.0),
)

PF_DETECT_THRESHOLD = 200.0


@dataclass
class BucketRow:
    bucket: str
    n: int
    median_abs_error: dict[str, float]  # per model; NaN when n == 0
    iqr: dict[str, float]


@dataclass
class PaO2EvalReport:
    rows: list[BucketRow]
    auroc: dict[str, float]
    n_auroc: int

    def to_csv(self) -> str:
        models = list(self.auroc)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["range_spo2_pct", "n"] + [f"{m}_median" for m in models] + [f"{m}_iqr" for m in models])
        for row in self.rows:
            writer.writerow(
                [row.bucket, row.n]
                + [_fmt(row.median_abs_error[m]) for m in models]
                + [_fmt(row.iqr[m]) for m in models]
            )
        writer.writerow(["auroc", self.n_auroc] + [_fmt(self.auroc[m]) for m in models] + [""] * len(models))
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else f"{x:.4g}"


def bucket_mask(spo2_pct: np.ndarray, lo: float, hi: float) -> np.ndarray:
    s = np.asarray(spo2_pct, dtype=float)
    return (s > lo) & (s <= hi)


def evaluate_pao2_models(
    predictions: dict[str, np.ndarray],
    target: np.ndarray,
    sat: np.ndarray,
    fio2: np.ndarray,
) -> PaO2EvalReport:
    """Bucketed error report for several estimators on one test set.

    `sat` is the current saturation as a fraction; `fio2` the concurrent
    FiO2 fraction used for the P/F detection AUROC.
    """
    target = np.asarray(target, dtype=float)
    spo2_pct = np.asarray(sat, dtype=float) * 100.0
    fio2 = np.asarray(fio2, dtype=float)
    rows = []
    for bucket, lo, hi in BUCKETS:
        mask = bucket_mask(spo2_pct, lo, hi)
        n = int(mask.sum())
        med, iqr = {}, {}
        for name, pred in predictions.items():
            if n == 0:
                med[name] = float("nan")
                iqr[name] = float("nan")
            else:
                err = np.abs(np.asarray(pred, dtype=float)[mask] - target[mask])
                med[name] = float(np.median(err))
                iqr[name] = float(np.percentile(err, 75) - np.percentile(err, 25))
        rows.append(BucketRow(bucket=bucket, n=n, median_abs_error=med, iqr=iqr))

    positive = (target / fio2 <= PF_DETECT_THRESHOLD).astype(np.int8)
    auroc = {}
    for name, pred in predictions.items():
        score = -(np.asarray(pred, dtype=float) / fio2)
        if len(np.unique(positive)) < 2:
            auroc[name] = float("nan")
        else:
            _, _, value = timepoint_roc(score, positive)
            auroc[name] = value
    return PaO2EvalReport(rows=rows, auroc=auroc, n_auroc=len(target))
