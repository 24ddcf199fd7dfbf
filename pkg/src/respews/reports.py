"""Evaluation artifact emission: JSON/CSV reports, SVG plots, served predictions."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from respews.alarms import alarm_timing, silence
from respews.cohort.types import Cohort
from respews.experiment import ExperimentResult, stay_series_for
from respews.features.matrix import FeatureMatrix
from respews.pipeline import StayLabels

METHOD_LABELS = {
    "ews": "EWS (boosted trees)",
    "baseline_c": "clinical baseline C",
    "baseline_s": "clinical baseline S",
    "random": "random classifier",
}


def ews_operating_timing(
    result: ExperimentResult,
    matrix: FeatureMatrix,
    labeled: dict[str, StayLabels],
    splits,
    recall_target: float = 0.8,
) -> dict:
    """First-alarm lead stats at the lowest-threshold point reaching the target recall."""
    leads: list[int] = []
    alarms_per_event: list[int] = []
    op_points = []
    for split, sres in zip(splits, result.split_results):
        curve = sres.curves["ews"]
        ok = np.isfinite(curve.recall) & (curve.recall >= recall_target) & np.isfinite(curve.precision)
        if not ok.any():
            continue
        thr = float(np.max(curve.thresholds[ok]))
        test = matrix.subset(matrix.rows_for(split.test))
        scores = sres.model.predict(test.X)
        test_stays = [sid for sid in split.test if sid in set(test.stay_ids)]
        for times, s, starts in stay_series_for(test, scores, test_stays, labeled):
            timing = alarm_timing(silence(times, s, thr), starts)
            leads.extend(timing.leads_s)
            alarms_per_event.extend(timing.alarms_per_event)
        k = int(np.flatnonzero(curve.thresholds == thr)[0])
        op_points.append({"split_id": split.split_id, "threshold": thr,
                          "recall": float(curve.recall[k]), "precision": float(curve.precision[k])})
    return {
        "recall_target": recall_target,
        "operating_points": op_points,
        "median_first_alarm_lead_h": float(np.median(leads)) / 3600 if leads else None,
        "mean_alarms_per_caught_event": float(np.mean(alarms_per_event)) if alarms_per_event else None,
        "leads_h": [lead / 3600 for lead in leads],
    }


def write_event_pr_csv(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        methods = list(result.reports)
        writer.writerow(["recall"] + [f"{m}_precision_mean" for m in methods] + [f"{m}_precision_std" for m in methods])
        grid = result.reports[methods[0]].recall_grid
        means = {m: result.reports[m].mean_precision for m in methods}
        stds = {m: result.reports[m].std_precision for m in methods}
        for i, r in enumerate(grid):
            writer.writerow(
                [f"{r:.2f}"] + [f"{means[m][i]:.5f}" for m in methods] + [f"{stds[m][i]:.5f}" for m in methods]
            )


def plot_pr_curves(result: ExperimentResult, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for method, report in result.reports.items():
        grid = report.recall_grid
        mean = report.mean_precision
        std = report.std_precision
        (line,) = ax.plot(grid, mean, label=f"{METHOD_LABELS.get(method, method)} (AP {report.mean_auprc:.2f})")
        ax.fill_between(grid, mean - std, mean + std, alpha=0.2, color=line.get_color())
    ax.axhline(result.reports["random"].prevalence, ls=":", c="gray", lw=1, label="event prevalence")
    ax.set_xlabel("event recall")
    ax.set_ylabel("alarm precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Event-based precision/recall (mean ± sd over splits)")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_lead_histogram(timing: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    leads = timing.get("leads_h") or []
    if leads:
        ax.hist(leads, bins=np.arange(0, 8.5, 0.5), color="#336699", edgecolor="white")
        if timing.get("median_first_alarm_lead_h") is not None:
            ax.axvline(timing["median_first_alarm_lead_h"], color="#993333", ls="--",
                       label=f"median {timing['median_first_alarm_lead_h']:.2f} h")
            ax.legend(fontsize=8)
    ax.set_xlabel("first true alarm lead before event onset (h)")
    ax.set_ylabel("events")
    ax.set_title("Alarm timing distribution")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_predictions(
    run_dir: Path,
    cohort: Cohort,
    labeled: dict[str, StayLabels],
    matrix: FeatureMatrix,
    result: ExperimentResult,
) -> Path:
    """Per-stay score series from the first split's model, gaps at undefined labels."""
    out_dir = run_dir / "eval" / "predictions"
    out_dir.mkdir(parents=True, exist_ok=True)
    model = result.split_results[0].model
    scores = model.predict(matrix.X)
    for sid in cohort.stay_ids:
        stay = cohort[sid]
        full = np.full(stay.n_grid, np.nan)
        rows = matrix.stay_ids == sid
        idx = (matrix.times[rows] // stay.grid_step).astype(int)
        full[idx] = scores[rows]
        with open(out_dir / f"{sid}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "score"])
            for t, v in zip(stay.grid_times, full):
                writer.writerow([int(t), "" if np.isnan(v) else f"{v:.6f}"])
    return out_dir


def write_evaluation(
    run_dir: str | Path,
    result: ExperimentResult,
    cohort: Cohort,
    labeled: dict[str, StayLabels],
    matrix: FeatureMatrix,
    splits,
) -> list[str]:
    run_dir = Path(run_dir)
    eval_dir = run_dir / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    timing = ews_operating_timing(result, matrix, labeled, splits)
    report = {
        "methods": {m: r.to_dict() for m, r in result.reports.items()},
        "alarm_timing": {k: v for k, v in timing.items() if k != "leads_h"},
        "summary": result.summary(),
    }
    (eval_dir / "event_pr.json").write_text(json.dumps(report, indent=2) + "\n")
    write_event_pr_csv(result, eval_dir / "event_pr.csv")
    plot_pr_curves(result, eval_dir / "pr_curve.svg")
    plot_lead_histogram(timing, eval_dir / "lead_histogram.svg")
    write_predictions(run_dir, cohort, labeled, matrix, result)
    return [
        "eval/event_pr.json",
        "eval/event_pr.csv",
        "eval/pr_curve.svg",
        "eval/lead_histogram.svg",
        "eval/predictions",
    ]
