"""Pipeline configuration, config hashing and per-stage seed fan-out."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from respews.cohort.synth import ScenarioConfig
from respews.errors import ArtifactError, ConfigError
from respews.gbdt.train import GbdtParams

MANIFEST_NAME = "manifest.json"


@dataclass
class PipelineConfig:
    seed: int = 0
    grid_step: int = 300
    estimator: str = "pnl"  # pnl | spo2nn | fullnn
    freshness_s: int = 30 * 60
    variable_config_path: str | None = None
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    n_splits: int = 5
    train_frac: float = 0.6
    valid_frac: float = 0.2
    train_stride: int = 3
    gbdt: GbdtParams = field(default_factory=GbdtParams)
    n_thresholds: int = 101
    pao2_train_samples: int = 20000
    pao2_noise_sigma: float = 5.0
    pao2_epochs: int = 60
    service_host: str = "127.0.0.1"
    service_port: int = 8008
    admission_epoch: str = "2024-01-01T00:00:00+00:00"

    def __post_init__(self):
        if self.grid_step <= 0:
            raise ConfigError("grid_step must be positive")
        if self.estimator not in ("pnl", "spo2nn", "fullnn"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["scenario"]["stay_hours"] = list(self.scenario.stay_hours)
        doc["scenario"]["episode_hours"] = list(self.scenario.episode_hours)
        doc["scenario"]["precursor_hours"] = list(self.scenario.precursor_hours)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        doc = dict(doc)
        scenario = doc.pop("scenario", {})
        for key in ("stay_hours", "episode_hours", "precursor_hours"):
            if key in scenario:
                scenario[key] = tuple(scenario[key])
        gbdt = doc.pop("gbdt", {})
        return cls(scenario=ScenarioConfig(**scenario), gbdt=GbdtParams(**gbdt), **doc)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def load_config(path: str | Path) -> PipelineConfig:
    return PipelineConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def stage_seed(root_seed: int, stage: str) -> int:
    """Deterministic child seed for one pipeline stage."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


class Manifest:
    """Run-directory manifest: config hash plus per-stage completion records."""

    def __init__(self, run_dir: str | Path, config: PipelineConfig | None = None):
        self.run_dir = Path(run_dir)
        self.path = self.run_dir / MANIFEST_NAME
        if self.path.exists():
            self.doc = json.loads(self.path.read_text())
            if config is not None and self.doc["config_hash"] != config.config_hash():
                raise ArtifactError(
                    f"{self.path}: run dir was produced with config hash "
                    f"{self.doc['config_hash']}, current config hashes to {config.config_hash()}"
                )
        else:
            if config is None:
                raise ArtifactError(f"{self.path} not found; run earlier pipeline stages first")
            self.run_dir.mkdir(parents=True, exist_ok=True)
            self.doc = {"config_hash": config.config_hash(), "stages": {}}
            self._write()

    def _write(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.doc, indent=2) + "\n")
        tmp.replace(self.path)

    def record_stage(self, stage: str, artifacts: list[str]) -> None:
        self.doc["stages"][stage] = {"artifacts": artifacts, "complete": True}
        self._write()

    def require_stage(self, stage: str) -> None:
        entry = self.doc["stages"].get(stage)
        if not entry or not entry.get("complete"):
            raise ArtifactError(
                f"stage {stage!r} has not completed in {self.run_dir}; "
                f"missing artifacts for this step"
            )

    @property
    def config_hash(self) -> str:
        return self.doc["config_hash"]
