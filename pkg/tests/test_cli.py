import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from respews.cli import main

TINY_CONFIG = {
    "seed": 5,
    "grid_step": 300,
    "estimator": "pnl",
    "freshness_s": 1800,
    "variable_config_path": None,
    "scenario": {
        "n_stays": 14, "seed": 5, "failure_fraction": 0.65, "distractor_fraction": 0.15,
        "ventilated_stable_fraction": 0.0, "stay_hours": [20, 24], "episode_hours": [3, 5],
        "precursor_hours": [2, 4], "episode_onset_min_hours": 10.0, "noise_scale": 1.0,
    },
    "n_splits": 2, "train_frac": 0.5, "valid_frac": 0.25, "train_stride": 3,
    "gbdt": {"max_trees": 40, "learning_rate": 0.1, "max_leaves": 8, "min_child_samples": 10,
             "patience": 15, "reg_lambda": 1.0, "min_split_gain": 1e-12},
    "n_thresholds": 31, "pao2_train_samples": 1500, "pao2_noise_sigma": 5.0, "pao2_epochs": 5,
    "service_host": "127.0.0.1", "service_port": 8008,
    "admission_epoch": "2024-01-01T00:00:00+00:00",
}


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


def _run(*args):
    runner = CliRunner()
    result = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    return result


def test_synth_is_byte_identical_across_runs(tmp_path, config_file):
    for name in ("r1", "r2"):
        result = _run("synth", "--run-dir", tmp_path / name, "--config", config_file)
        assert result.exit_code == 0, result.output
    files1 = sorted((tmp_path / "r1" / "cohort").glob("*"))
    files2 = sorted((tmp_path / "r2" / "cohort").glob("*"))
    assert [f.name for f in files1] == [f.name for f in files2]
    for f1, f2 in zip(files1, files2):
        assert f1.read_bytes() == f2.read_bytes(), f1.name


def test_full_pipeline_produces_servable_artifacts(tmp_path, config_file):
    run_dir = tmp_path / "run"
    result = _run("pipeline", "--run-dir", run_dir, "--config", config_file)
    assert result.exit_code == 0, result.output

    manifest = json.loads((run_dir / "manifest.json").read_text())
    for stage in ("synth", "label", "featurize", "train-pao2", "train-ews", "evaluate"):
        assert manifest["stages"][stage]["complete"], stage

    assert (run_dir / "features" / "matrix.csv").exists()
    schema = json.loads((run_dir / "features" / "matrix.schema.json").read_text())
    assert schema["columns"]
    report = json.loads((run_dir / "eval" / "event_pr.json").read_text())
    assert set(report["methods"]) == {"ews", "baseline_s", "baseline_c", "random"}
    assert (run_dir / "eval" / "pr_curve.svg").read_text().startswith("<?xml")
    assert (run_dir / "eval" / "lead_histogram.svg").exists()
    for split_id in (0, 1):
        assert (run_dir / "models" / f"ews_split{split_id}.json").exists()
    predictions = list((run_dir / "eval" / "predictions").glob("*.csv"))
    assert len(predictions) == TINY_CONFIG["scenario"]["n_stays"]

    # served data dir works
    from fastapi.testclient import TestClient
    from respews.service.app import create_app

    client = TestClient(create_app(run_dir))
    patients = client.get("/api/patients").json()
    assert len(patients) == TINY_CONFIG["scenario"]["n_stays"]
    assert all(p["has_predictions"] for p in patients)


def test_evaluate_without_model_exits_2_naming_artifact(tmp_path, config_file):
    import subprocess
    import sys

    run_dir = tmp_path / "run"
    for cmd in ("synth", "label", "featurize"):
        assert _run(cmd, "--run-dir", run_dir, "--config", config_file).exit_code == 0
    proc = subprocess.run(
        [sys.executable, "-m", "respews.cli", "evaluate", "--run-dir", str(run_dir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "ews_split0.json" in proc.stderr


def test_stage_requires_predecessor(tmp_path, config_file):
    run_dir = tmp_path / "run"
    assert _run("synth", "--run-dir", run_dir, "--config", config_file).exit_code == 0
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "respews.cli", "featurize", "--run-dir", str(run_dir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "label" in proc.stderr


def test_config_hash_mismatch_refused(tmp_path, config_file):
    run_dir = tmp_path / "run"
    assert _run("synth", "--run-dir", run_dir, "--config", config_file).exit_code == 0
    changed = dict(TINY_CONFIG)
    changed["seed"] = 99
    other = tmp_path / "other.json"
    other.write_text(json.dumps(changed))
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "respews.cli", "label", "--run-dir", str(run_dir),
         "--config", str(other)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "config hash" in proc.stderr


def test_jobs_flag_gives_identical_results(tmp_path, config_file):
    run_a = tmp_path / "a"
    run_b = tmp_path / "b"
    for run_dir, jobs in ((run_a, "1"), (run_b, "4")):
        assert _run("synth", "--run-dir", run_dir, "--config", config_file).exit_code == 0
        assert _run("label", "--run-dir", run_dir, "--jobs", jobs).exit_code == 0
    for f_a in sorted((run_a / "labeled").glob("*")):
        f_b = run_b / "labeled" / f_a.name
        assert f_a.read_bytes() == f_b.read_bytes()
