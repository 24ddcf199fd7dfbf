"""Feedforward PaO2 estimator: numpy MLP with weighted MAE/MSE training.

ReLU hidden layers, affine output, z-score normalization of inputs and
target (stored on the model), inverted dropout during training only, and
mini-batch gradient descent with adaptive moments.  Training is
deterministic for a given seed.  The output layer initializes to zero so an
untrained model predicts the denormalized output bias exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from respews.errors import ConfigError, TrainingError
from respews.oxy.dataset import PaO2Dataset, example_weight

FORMAT_VERSION = 1
REGION_MAX_SAT = 0.96  # clinically relevant evaluation region: SaO2 < 96%


@dataclass(frozen=True)
class HyperparamPoint:
    batch_size: int = 50
    hidden_layers: tuple[int, ...] = (32, 32)
    gamma: Optional[float] = None
    learning_rate: float = 1e-3
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.batch_size < 1 or self.learning_rate <= 0:
            raise ConfigError("batch_size must be >= 1 and learning_rate > 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if not all(n >= 1 for n in self.hidden_layers):
            raise ConfigError("hidden layers need at least one node")

    def n_weights(self, n_inputs: int) -> int:
        sizes = (n_inputs, *self.hidden_layers, 1)
        return sum((a + 1) * b for a, b in zip(sizes, sizes[1:]))

    def sort_key(self):
        return (
            self.batch_size,
            self.hidden_layers,
            -1.0 if self.gamma is None else self.gamma,
            self.learning_rate,
            self.dropout_rate,
        )


@dataclass
class TrainSettings:
    epochs: int = 150
    loss: str = "mae"  # or "mse"
    early_stop_patience: int = 0  # 0 trains all epochs; best epoch is restored either way
    region_max_sat: float = REGION_MAX_SAT

    def __post_init__(self):
        if self.loss not in ("mae", "mse"):
            raise ConfigError(f"loss must be mae or mse, got {self.loss!r}")


class MlpModel:
    """Parameter container with forward/backward passes."""

    def __init__(
        self,
        input_names: list[str],
        hidden_layers: tuple[int, ...],
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        dropout_rate: float,
        x_mean: np.ndarray,
        x_scale: np.ndarray,
        y_mean: float,
        y_scale: float,
    ):
        self.input_names = list(input_names)
        self.hidden_layers = tuple(hidden_layers)
        self.weights = weights
        self.biases = biases
        self.dropout_rate = float(dropout_rate)
        self.x_mean = np.asarray(x_mean, dtype=float)
        self.x_scale = np.asarray(x_scale, dtype=float)
        self.y_mean = float(y_mean)
        self.y_scale = float(y_scale)
        self.validation_mae: float | None = None
        self.train_loss_history: list[float] = []
        for w_in, w_out in zip(self.weights, self.weights[1:]):
            if w_in.shape[1] != w_out.shape[0]:
                raise ConfigError("consecutive layer dimensions are incompatible")
        if np.any(self.x_scale <= 0) or self.y_scale <= 0:
            raise ConfigError("normalization scales must be positive")

    @classmethod
    def initialize(
        cls,
        input_names: list[str],
        hidden_layers: tuple[int, ...],
        dropout_rate: float,
        x_mean,
        x_scale,
        y_mean,
        y_scale,
        seed: int,
        zero_output: bool = True,
    ) -> "MlpModel":
        rng = np.random.default_rng(seed)
        sizes = (len(input_names), *hidden_layers, 1)
        weights, biases = [], []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            last = i == len(sizes) - 2
            if last and zero_output:
                weights.append(np.zeros((fan_in, fan_out)))
            else:
                weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(input_names, hidden_layers, weights, biases, dropout_rate, x_mean, x_scale, y_mean, y_scale)

    # -- forward / backward -------------------------------------------------

    def normalize(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        X = np.where(np.isnan(X), self.x_mean, X)  # mean-impute missing context
        return (X - self.x_mean) / self.x_scale

    def _forward(self, Z: np.ndarray, dropout_masks: list[np.ndarray] | None):
        acts = [Z]
        a = Z
        n_hidden = len(self.weights) - 1
        for layer in range(n_hidden):
            a = np.maximum(a @ self.weights[layer] + self.biases[layer], 0.0)
            if dropout_masks is not None:
                a = a * dropout_masks[layer]
            acts.append(a)
        out = (a @ self.weights[-1] + self.biases[-1])[:, 0]
        return out, acts

    def predict(self, X: np.ndarray) -> np.ndarray:
        out, _ = self._forward(self.normalize(X), None)
        return self.y_mean + self.y_scale * out

    def loss_and_gradients(
        self,
        Z: np.ndarray,
        y_norm: np.ndarray,
        sample_weight: np.ndarray,
        loss: str,
        dropout_masks: list[np.ndarray] | None = None,
    ):
        """Weighted loss in normalized units and gradients for every parameter."""
        out, acts = self._forward(Z, dropout_masks)
        r = out - y_norm
        wsum = float(np.sum(sample_weight))
        if loss == "mae":
            value = float(np.sum(sample_weight * np.abs(r)) / wsum)
            dout = sample_weight * np.sign(r) / wsum
        else:
            value = float(np.sum(sample_weight * r * r) / wsum)
            dout = 2.0 * sample_weight * r / wsum
        grads_w = [np.zeros_like(w) for w in self.weights]
        grads_b = [np.zeros_like(b) for b in self.biases]
        delta = dout[:, None]
        grads_w[-1] = acts[-1].T @ delta
        grads_b[-1] = delta.sum(axis=0)
        for layer in range(len(self.weights) - 2, -1, -1):
            delta = delta @ self.weights[layer + 1].T
            if dropout_masks is not None:
                delta = delta * dropout_masks[layer]
            delta = delta * (acts[layer + 1] > 0)
            grads_w[layer] = acts[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
        return value, grads_w, grads_b

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": FORMAT_VERSION,
                "kind": "mlp_pao2",
                "input_names": self.input_names,
                "hidden_layers": list(self.hidden_layers),
                "dropout_rate": self.dropout_rate,
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "x_mean": self.x_mean.tolist(),
                "x_scale": self.x_scale.tolist(),
                "y_mean": self.y_mean,
                "y_scale": self.y_scale,
                "validation_mae": self.validation_mae,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        doc = json.loads(text)
        if doc.get("kind") != "mlp_pao2":
            raise ConfigError(f"not an MLP document: kind={doc.get('kind')!r}")
        model = cls(
            input_names=doc["input_names"],
            hidden_layers=tuple(doc["hidden_layers"]),
            weights=[np.array(w, dtype=float) for w in doc["weights"]],
            biases=[np.array(b, dtype=float) for b in doc["biases"]],
            dropout_rate=doc["dropout_rate"],
            x_mean=np.array(doc["x_mean"], dtype=float),
            x_scale=np.array(doc["x_scale"], dtype=float),
            y_mean=doc["y_mean"],
            y_scale=doc["y_scale"],
        )
        model.validation_mae = doc.get("validation_mae")
        return model


class _Adam:
    def __init__(self, params: list[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def region_mae(model: MlpModel, dataset: PaO2Dataset, max_sat: float = REGION_MAX_SAT) -> float:
    """Mean absolute error (mmHg) restricted to saturations below the cutoff."""
    mask = dataset.sat < max_sat
    if not mask.any():
        mask = np.ones(len(dataset), dtype=bool)
    pred = model.predict(dataset.inputs[mask])
    return float(np.mean(np.abs(pred - dataset.target[mask])))


def train_mlp(
    train: PaO2Dataset,
    valid: PaO2Dataset,
    hp: HyperparamPoint,
    seed: int,
    settings: TrainSettings | None = None,
) -> MlpModel:
    """Fit an estimator on the given input columns; deterministic per seed."""
    settings = settings or TrainSettings()
    if len(train) == 0:
        raise TrainingError("empty training set")
    if not np.isfinite(train.target).all():
        bad = int(np.flatnonzero(~np.isfinite(train.target))[0])
        raise TrainingError(f"non-finite training target at row {bad}")
    x_mean = np.nanmean(train.inputs, axis=0)
    x_scale = np.maximum(np.nanstd(train.inputs, axis=0), 1e-8)
    y_mean = float(np.mean(train.target))
    y_scale = max(float(np.std(train.target)), 1e-8)
    model = MlpModel.initialize(
        train.input_names, hp.hidden_layers, hp.dropout_rate, x_mean, x_scale, y_mean, y_scale, seed
    )
    if settings.epochs == 0:
        model.validation_mae = region_mae(model, valid, settings.region_max_sat) if len(valid) else None
        return model

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    Z = model.normalize(train.inputs)
    y_norm = (train.target - y_mean) / y_scale
    sample_w = example_weight(train.sat, hp.gamma)
    params = model.weights + model.biases
    adam = _Adam(params, hp.learning_rate)
    n = len(train)
    best = {"mae": np.inf, "weights": None, "biases": None}
    epochs_since_best = 0
    for epoch in range(settings.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            rows = order[start : start + hp.batch_size]
            masks = None
            if hp.dropout_rate > 0:
                masks = [
                    (rng.uniform(size=(len(rows), width)) >= hp.dropout_rate) / (1.0 - hp.dropout_rate)
                    for width in hp.hidden_layers
                ]
            value, gw, gb = model.loss_and_gradients(Z[rows], y_norm[rows], sample_w[rows], settings.loss, masks)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite {settings.loss} loss at epoch {epoch}, batch row {start} "
                    f"(lr={hp.learning_rate}, layers={hp.hidden_layers})"
                )
            adam.step(params, gw + gb)
        eval_loss, _, _ = model.loss_and_gradients(Z, y_norm, sample_w, settings.loss, None)
        model.train_loss_history.append(eval_loss)
        if len(valid):
            v_mae = region_mae(model, valid, settings.region_max_sat)
            if v_mae < best["mae"]:
                best = {
                    "mae": v_mae,
                    "weights": [w.copy() for w in model.weights],
                    "biases": [b.copy() for b in model.biases],
                }
                epochs_since_best = 0
            else:
                epochs_since_best += 1
                if settings.early_stop_patience and epochs_since_best >= settings.early_stop_patience:
                    break
    if best["weights"] is not None:
        model.weights = best["weights"]
        model.biases = best["biases"]
        model.validation_mae = best["mae"]
    return model


def finite_difference_check(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    loss: str = "mse",
    n_params: int = 10,
    seed: int = 0,
    step: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    rng = np.random.default_rng(seed)
    Z = model.normalize(X)
    y_norm = (np.asarray(y, dtype=float) - model.y_mean) / model.y_scale
    w = np.ones(len(y_norm))
    _, gw, gb = model.loss_and_gradients(Z, y_norm, w, loss, None)
    grads = gw + gb
    params = model.weights + model.biases
    worst = 0.0
    for _ in range(n_params):
        layer = int(rng.integers(len(params)))
        flat = int(rng.integers(params[layer].size))
        idx = np.unravel_index(flat, params[layer].shape)
        original = params[layer][idx]
        h = step * max(1.0, abs(original))
        params[layer][idx] = original + h
        up, _, _ = model.loss_and_gradients(Z, y_norm, w, loss, None)
        params[layer][idx] = original - h
        down, _, _ = model.loss_and_gradients(Z, y_norm, w, loss, None)
        params[layer][idx] = original
        numeric = (up - down) / (2.0 * h)
        analytic = grads[layer][idx]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst
