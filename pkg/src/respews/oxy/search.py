"""Hyperparameter grid search and greedy backward variable selection.

Model selection minimizes the cross-validated mean absolute prediction
error in the clinically relevant region (saturation below 96%).
"""

from __future__ import annotations

import itertools

import numpy as np

from respews.errors import ConfigError
from respews.oxy.dataset import PaO2Dataset
from respews.oxy.mlp import HyperparamPoint, TrainSettings, region_mae, train_mlp

# full search space of the development procedure
SEARCH_SPACE = {
    "batch_size": (30, 50, 100, 300, 500),
    "hidden_layers": (
        (8, 8), (16, 16), (32, 32), (64, 64), (128, 128), (256, 256),
        (64, 128), (128, 64), (64, 64, 64), (64, 128, 64), (128, 128, 128),
        (128, 256, 128), (256, 512, 256),
    ),
    "gamma": (None, 0.1, 0.2, 0.33, 0.5, 1.0),
    "learning_rate": tuple(np.logspace(-4, -1, 10, endpoint=False)),
    "dropout_rate": tuple(np.linspace(0.0, 0.5, 10, endpoint=False)),
}

# selected values for the two shipped estimators
SPO2_NN_HP = HyperparamPoint(batch_size=50, hidden_layers=(64, 128, 64), gamma=None,
                             learning_rate=1e-4, dropout_rate=0.5)
FULL_NN_HP = HyperparamPoint(batch_size=50, hidden_layers=(8, 8), gamma=0.2,
                             learning_rate=1e-3, dropout_rate=0.0)


def full_search_space() -> list[HyperparamPoint]:
    keys = ("batch_size", "hidden_layers", "gamma", "learning_rate", "dropout_rate")
    return [
        HyperparamPoint(**dict(zip(keys, combo)))
        for combo in itertools.product(*(SEARCH_SPACE[k] for k in keys))
    ]


def _fold_masks(n: int, folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(97,)))
    assignment = rng.permutation(n) % folds
    return [assignment == k for k in range(folds)]


def cv_region_mae(
    dataset: PaO2Dataset,
    input_names,
    hp: HyperparamPoint,
    folds: int,
    seed: int,
    settings: TrainSettings | None = None,
) -> float:
    """Cross-validated region-restricted MAE of one configuration."""
    settings = settings or TrainSettings()
    data = dataset.select_inputs(tuple(input_names))
    errors = []
    for k, held in enumerate(_fold_masks(len(data), folds, seed)):
        model = train_mlp(data.subset(~held), data.subset(held), hp,
                          seed=seed * 1000 + k, settings=settings)
        errors.append(region_mae(model, data.subset(held), settings.region_max_sat))
    return float(np.mean(errors))


def grid_search(
    dataset: PaO2Dataset,
    space: list[HyperparamPoint],
    folds: int = 3,
    seed: int = 0,
    settings: TrainSettings | None = None,
    input_names=None,
) -> tuple[HyperparamPoint, dict[HyperparamPoint, float]]:
    """Exhaustive search over `space`; ties go to the smaller model, then
    to the lexicographically smallest hyperparameter tuple."""
    if not space:
        raise ConfigError("hyperparameter space is empty")
    if folds < 2:
        raise ConfigError("grid search needs at least 2 folds")
    names = tuple(input_names) if input_names is not None else tuple(dataset.input_names)
    scores = {hp: cv_region_mae(dataset, names, hp, folds, seed, settings) for hp in space}
    best = min(scores, key=lambda hp: (scores[hp], hp.n_weights(len(names)), hp.sort_key()))
    return best, scores


def backward_select(
    dataset: PaO2Dataset,
    initial_variables,
    hp: HyperparamPoint,
    folds: int = 3,
    seed: int = 0,
    settings: TrainSettings | None = None,
) -> tuple[list[str], list[dict]]:
    """Greedy backward elimination on the input set.

    Repeatedly removes the variable whose removal lowers the cross-validated
    region MAE the most, until no removal improves or one input remains.
    Returns the retained set and the removal trace.
    """
    current = list(initial_variables)
    if not current:
        raise ConfigError("initial variable set is empty")
    best_err = cv_region_mae(dataset, current, hp, folds, seed, settings)
    trace = [{"removed": None, "cv_mae": best_err, "kept": list(current)}]
    while len(current) > 1:
        candidates = []
        for var in current:
            reduced = [v for v in current if v != var]
            err = cv_region_mae(dataset, reduced, hp, folds, seed, settings)
            candidates.append((err, var))
        err, var = min(candidates, key=lambda c: (c[0], current.index(c[1])))
        if err >= best_err:
            break
        current = [v for v in current if v != var]
        best_err = err
        trace.append({"removed": var, "cv_mae": err, "kept": list(current)})
    return current, trace
