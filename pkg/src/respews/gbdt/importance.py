"""Model introspection: split-gain and permutation feature importance."""

from __future__ import annotations

import numpy as np

from respews.gbdt.trees import BoostedEnsemble


def gain_importance(model: BoostedEnsemble) -> list[tuple[str, float]]:
    """Total split gain per feature over the trees used at prediction time."""
    totals = np.zeros(len(model.feature_names))
    for tree in model.trees[: model.best_iteration]:
        for feature, gain in zip(tree.feature, tree.gain):
            if feature >= 0:
                totals[feature] += gain
    order = np.argsort(-totals, kind="stable")
    return [(model.feature_names[i], float(totals[i])) for i in order]


def permutation_importance(
    model: BoostedEnsemble,
    X_valid: np.ndarray,
    y_valid: np.ndarray,
    seed: int = 0,
) -> list[tuple[str, float]]:
    """Validation log-loss increase when one feature column is shuffled."""
    X_valid = np.ascontiguousarray(X_valid, dtype=np.float64)
    y_valid = np.asarray(y_valid, dtype=np.float64)
    margin = model.margin(X_valid)
    base = float(np.mean(np.logaddexp(0.0, margin) - y_valid * margin))
    deltas = np.zeros(len(model.feature_names))
    for j in range(X_valid.shape[1]):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(j,)))
        shuffled = X_valid.copy()
        shuffled[:, j] = shuffled[rng.permutation(len(shuffled)), j]
        m = model.margin(shuffled)
        deltas[j] = float(np.mean(np.logaddexp(0.0, m) - y_valid * m)) - base
    order = np.argsort(-deltas, kind="stable")
    return [(model.feature_names[i], float(deltas[i])) for i in order]


def feature_importance(
    model: BoostedEnsemble,
    X_valid: np.ndarray,
    y_valid: np.ndarray,
    seed: int = 0,
) -> dict[str, list[tuple[str, float]]]:
    return {
        "gain": gain_importance(model),
        "permutation": permutation_importance(model, X_valid, y_valid, seed),
    }
