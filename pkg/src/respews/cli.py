"""Command-line entry point: pipeline stages from synthesis to serving.

Every stage writes versioned artifacts into a run directory and records
completion in its manifest; downstream stages refuse run directories whose
config hash does not match.  All randomness derives from the single root
seed in the config, fanned out per stage.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from respews.config import Manifest, PipelineConfig, load_config, save_config, stage_seed
from respews.errors import ArtifactError, RespewsError

from respews.variables import DEFAULT_VARIABLES, load_variable_config

log = logging.getLogger("respews")


def _setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def _load_pipeline_config(config_path: str | None, seed: int | None) -> PipelineConfig:
    config = load_config(config_path) if config_path else PipelineConfig()
    if seed is not None:
        config.seed = seed
    return config


def _variables(config: PipelineConfig):
    if config.variable_config_path:
        return load_variable_config(config.variable_config_path)
    return DEFAULT_VARIABLES


@click.group()
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool):
    """Respiratory early-warning-system pipeline."""
    _setup_logging(verbose)


run_dir_option = click.option(
    "--run-dir", type=click.Path(path_type=Path), required=True, help="Artifact directory."
)
config_option = click.option("--config", "config_path", type=click.Path(exists=True), default=None)
seed_option = click.option("--seed", type=int, default=None, help="Override the config seed.")
jobs_option = click.option("--jobs", type=int, default=1, help="Per-stay parallel workers.")


@main.command()
@run_dir_option
@config_option
@seed_option
@click.option("--n", "n_stays", type=int, default=None, help="Override stay count.")
def synth(run_dir: Path, config_path, seed, n_stays):
    """Generate a synthetic cohort with planted deterioration episodes."""
    from respews.cohort.io import write_cohort
    from respews.cohort.synth import generate_synthetic_cohort

    import dataclasses

    config = _load_pipeline_config(config_path, seed)
    if n_stays is not None:
        config.scenario = dataclasses.replace(config.scenario, n_stays=n_stays)
    manifest = Manifest(run_dir, config)
    save_config(config, run_dir / "config.json")
    cohort = generate_synthetic_cohort(
        stage_seed(config.seed, "synth"), config.scenario.n_stays, config.scenario, config.grid_step
    )
    cohort_dir = run_dir / "cohort"
    write_cohort(cohort, cohort_dir)
    from datetime import datetime, timedelta

    epoch = datetime.fromisoformat(config.admission_epoch)
    admissions = {
        sid: (epoch + timedelta(days=i)).isoformat() for i, sid in enumerate(cohort.stay_ids)
    }
    (cohort_dir / "admissions.json").write_text(json.dumps(admissions, indent=2) + "\n")
    manifest.record_stage("synth", ["cohort"])
    log.info("wrote %d stays to %s", len(cohort), cohort_dir)


def _load_run_cohort(run_dir: Path, config: PipelineConfig):
    from respews.cohort.io import load_cohort

    return load_cohort(run_dir / "cohort", config.grid_step)


def _label_run(run_dir: Path, config: PipelineConfig, jobs: int):
    from respews.pipeline import label_cohort

    cohort = _load_run_cohort(run_dir, config)
    models = _load_pao2_models(run_dir) if config.estimator != "pnl" else None
    labeled = label_cohort(cohort, config.estimator, models, config.freshness_s, jobs=jobs)
    return cohort, labeled


def _load_pao2_models(run_dir: Path) -> dict:
    from respews.oxy.mlp import MlpModel

    models = {}
    for name in ("spo2nn", "fullnn"):
        path = run_dir / "models" / f"pao2_{name}.json"
        if path.exists():
            models[name] = MlpModel.from_json(path.read_text())
    if not models:
        raise ArtifactError(f"no trained PaO2 models under {run_dir / 'models'}; run train-pao2 first")
    return models


@main.command()
@run_dir_option
@config_option
@jobs_option
def label(run_dir: Path, config_path, jobs):
    """Estimate P/F tracks and derive failure events and prediction targets."""
    from respews.labels import events_to_json, labels_to_rows

    config = load_config(run_dir / "config.json") if config_path is None else load_config(config_path)
    manifest = Manifest(run_dir, config)
    manifest.require_stage("synth")
    cohort, labeled = _label_run(run_dir, config, jobs)
    out = run_dir / "labeled"
    out.mkdir(exist_ok=True)
    n_events = 0
    for sid in cohort.stay_ids:
        stay_labels = labeled[sid]
        n_events += len(stay_labels.events)
        (out / f"{sid}.events.json").write_text(
            json.dumps(events_to_json(stay_labels.events), indent=2) + "\n"
        )
        with open(out / f"{sid}.labels.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "label"])
            writer.writerows(labels_to_rows(stay_labels.labels, config.grid_step))
        track = stay_labels.track
        with open(out / f"{sid}.pf.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "pao2_est", "pao2_source", "fio2_est", "pf"])
            source_names = {0: "missing", 1: "measured", 2: "estimated"}
            for i in range(track.n_grid):
                writer.writerow(
                    [
                        i * config.grid_step,
                        "" if np.isnan(track.pao2_est[i]) else f"{track.pao2_est[i]:.2f}",
                        source_names[int(track.pao2_source[i])],
                        f"{track.fio2_est[i]:.3f}",
                        "" if np.isnan(track.pf[i]) else f"{track.pf[i]:.1f}",
                    ]
                )
    manifest.record_stage("label", ["labeled"])
    log.info("labeled %d stays, %d events", len(cohort), n_events)


@main.command()
@run_dir_option
@config_option
@jobs_option
def featurize(run_dir: Path, config_path, jobs):
    """Extract the feature matrix at every labeled grid point."""
    from respews.features.matrix import save_matrix
    from respews.pipeline import featurize_cohort

    config = load_config(run_dir / "config.json") if config_path is None else load_config(config_path)
    manifest = Manifest(run_dir, config)
    manifest.require_stage("label")
    cohort, labeled = _label_run(run_dir, config, jobs)
    matrix = featurize_cohort(cohort, labeled, _variables(config))
    out = run_dir / "features"
    out.mkdir(exist_ok=True)
    save_matrix(matrix, out / "matrix.csv")
    manifest.record_stage("featurize", ["features/matrix.csv"])
    log.info("feature matrix: %d rows x %d columns", len(matrix), len(matrix.columns))


@main.command("train-pao2")
@run_dir_option
@config_option
def train_pao2(run_dir: Path, config_path):
    """Train the two PaO2 estimators on synthetic ABGA data and report errors."""
    from respews.oxy.curve import ellis_pao2
    from respews.oxy.dataset import filter_abga_dataset, make_synthetic_abga
    from respews.oxy.evaluate import evaluate_pao2_models
    from respews.oxy.mlp import TrainSettings, train_mlp
    from respews.oxy.search import FULL_NN_HP, SPO2_NN_HP

    config = load_config(run_dir / "config.json") if config_path is None else load_config(config_path)
    manifest = Manifest(run_dir, config)
    seed = stage_seed(config.seed, "train-pao2")
    dataset = make_synthetic_abga(seed, config.pao2_train_samples, config.pao2_noise_sigma)
    dataset, removed = filter_abga_dataset(dataset)
    log.info("ABGA dataset: %d samples (removed %s)", len(dataset), removed)
    n = len(dataset)
    test_mask = np.arange(n) % 4 == 3
    valid_mask = (np.arange(n) % 4 == 2) & ~test_mask
    train = dataset.subset(~test_mask & ~valid_mask)
    valid = dataset.subset(valid_mask)
    test = dataset.subset(test_mask)
    settings = TrainSettings(epochs=config.pao2_epochs)
    models_dir = run_dir / "models"
    models_dir.mkdir(exist_ok=True)
    predictions = {"pnl": ellis_pao2(np.clip(test.sat, 0.25, 0.9995))}
    for name, hp, inputs in (
        ("spo2nn", SPO2_NN_HP, ("sat",)),
        ("fullnn", FULL_NN_HP, ("sat", "sat_last", "pao2_last", "ph_last")),
    ):
        model = train_mlp(train.select_inputs(inputs), valid.select_inputs(inputs), hp, seed, settings)
        (models_dir / f"pao2_{name}.json").write_text(model.to_json())
        predictions[name] = model.predict(test.select_inputs(inputs).inputs)
        log.info("%s trained: validation region MAE %.2f mmHg", name, model.validation_mae)
    report = evaluate_pao2_models(predictions, test.target, test.sat, np.full(len(test), 0.35))
    (models_dir / "pao2_eval.csv").write_text(report.to_csv())
    manifest.record_stage("train-pao2", ["models/pao2_spo2nn.json", "models/pao2_fullnn.json", "models/pao2_eval.csv"])


def _make_run_splits(run_dir: Path, config: PipelineConfig, cohort):
    from respews.cohort.splits import make_splits

    splits = make_splits(cohort, config.n_splits, config.train_frac, config.valid_frac,
                         stage_seed(config.seed, "splits"))
    (run_dir / "features").mkdir(exist_ok=True)
    (run_dir / "features" / "splits.json").write_text(
        json.dumps(
            [{"split_id": s.split_id, "train": list(s.train), "validation": list(s.validation),
              "test": list(s.test)} for s in splits],
            indent=2,
        )
        + "\n"
    )
    return splits


@main.command("train-ews")
@run_dir_option
@config_option
@jobs_option
@click.option("--kernel", type=click.Choice(["auto", "compiled", "fallback"]), default="auto")
def train_ews(run_dir: Path, config_path, jobs, kernel):
    """Train the alarm model and baseline C on every split."""
    from respews.experiment import train_split_models
    from respews.features.matrix import load_matrix

    config = load_config(run_dir / "config.json") if config_path is None else load_config(config_path)
    manifest = Manifest(run_dir, config)
    manifest.require_stage("featurize")
    matrix = load_matrix(run_dir / "features" / "matrix.csv")
    cohort = _load_run_cohort(run_dir, config)
    splits = _make_run_splits(run_dir, config, cohort)
    split_results = train_split_models(
        matrix, splits, config.gbdt, seed=stage_seed(config.seed, "train-ews"),
        train_stride=config.train_stride, kernel=kernel,
    )
    models_dir = run_dir / "models"
    models_dir.mkdir(exist_ok=True)
    for sres in split_results:
        (models_dir / f"ews_split{sres.split_id}.json").write_text(sres.model.to_json())
        (models_dir / f"baseline_c_split{sres.split_id}.json").write_text(sres.baseline_c.to_json())
        log.info("split %d: %d trees, best iteration %d",
                 sres.split_id, len(sres.model.trees), sres.model.best_iteration)
    manifest.record_stage("train-ews", [f"models/ews_split{s.split_id}.json" for s in splits])


@main.command()
@run_dir_option
@config_option
@jobs_option
def evaluate(run_dir: Path, config_path, jobs):
    """Event-based PR/timing reports and SVG plots from the trained models."""
    from respews.experiment import SplitResult, evaluate_split_models
    from respews.features.matrix import load_matrix
    from respews.gbdt.trees import BoostedEnsemble, SingleTreeBaseline
    from respews.reports import write_evaluation

    config = load_config(run_dir / "config.json") if config_path is None else load_config(config_path)
    manifest = Manifest(run_dir, config)
    manifest.require_stage("featurize")
    cohort, labeled = _label_run(run_dir, config, jobs)
    matrix = load_matrix(run_dir / "features" / "matrix.csv")
    splits = _make_run_splits(run_dir, config, cohort)
    split_results = []
    for split in splits:
        model_path = run_dir / "models" / f"ews_split{split.split_id}.json"
        baseline_path = run_dir / "models" / f"baseline_c_split{split.split_id}.json"
        if not model_path.exists():
            raise ArtifactError(f"missing trained model artifact {model_path}; run train-ews first")
        if not baseline_path.exists():
            raise ArtifactError(f"missing baseline artifact {baseline_path}; run train-ews first")
        split_results.append(
            SplitResult(
                split_id=split.split_id,
                model=BoostedEnsemble.from_json(model_path.read_text()),
                baseline_c=SingleTreeBaseline.from_json(baseline_path.read_text()),
            )
        )
    result = evaluate_split_models(
        matrix, splits, split_results, labeled,
        seed=stage_seed(config.seed, "train-ews"), n_thresholds=config.n_thresholds,
    )
    artifacts = write_evaluation(run_dir, result, cohort, labeled, matrix, splits)
    manifest.record_stage("evaluate", artifacts)
    for method, summary in result.summary().items():
        log.info("%s: mean event AUPRC %.3f", method, summary["mean_auprc"])


@main.command()
@run_dir_option
@config_option
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(run_dir: Path, config_path, host, port):
    """Serve the monitor API (and UI build, when present) for a run directory."""
    import uvicorn

    from respews.service.app import create_app

    config = load_config(run_dir / "config.json") if config_path is None else load_config(config_path)
    Manifest(run_dir, config)
    app = create_app(run_dir, config.grid_step, config.admission_epoch)
    uvicorn.run(app, host=host or config.service_host, port=port or config.service_port)


@main.command()
@run_dir_option
@config_option
@seed_option
@jobs_option
def pipeline(run_dir: Path, config_path, seed, jobs):
    """Run synth, label, featurize, train-pao2 and train-ews in sequence."""
    ctx = click.get_current_context()
    ctx.invoke(synth, run_dir=run_dir, config_path=config_path, seed=seed, n_stays=None)
    ctx.invoke(label, run_dir=run_dir, config_path=None, jobs=jobs)
    ctx.invoke(featurize, run_dir=run_dir, config_path=None, jobs=jobs)
    ctx.invoke(train_pao2, run_dir=run_dir, config_path=None)
    ctx.invoke(train_ews, run_dir=run_dir, config_path=None, jobs=jobs, kernel="auto")
    ctx.invoke(evaluate, run_dir=run_dir, config_path=None, jobs=jobs)
    log.info("pipeline complete; serve with: respews serve --run-dir %s", run_dir)


def entrypoint():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(1)
    except (RespewsError, SystemExit) as exc:
        if isinstance(exc, SystemExit):
            raise
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    entrypoint()
