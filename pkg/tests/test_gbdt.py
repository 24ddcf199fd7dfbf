import numpy as np
import pytest

from conftest import brute_force_auroc
from respews.errors import SchemaMismatchError, TrainingError
from respews.gbdt import kernels
from respews.gbdt.importance import feature_importance, gain_importance
from respews.gbdt.train import GbdtParams, baseline_s, predict_scores, train_baseline_c, train_gbdt
from respews.gbdt.trees import BoostedEnsemble, Tree


def naive_tree_walk(tree: Tree, row: np.ndarray) -> float:
    """Independent single-row tree evaluator."""
    i = 0
    while tree.feature[i] >= 0:
        v = row[tree.feature[i]]
        if np.isnan(v):
            left = tree.default_left[i]
        else:
            left = v <= tree.threshold[i]
        i = tree.left[i] if left else tree.right[i]
    return tree.value[i]


def naive_predict(model: BoostedEnsemble, X: np.ndarray) -> np.ndarray:
    out = np.full(len(X), model.base_score)
    for tree in model.trees[: model.best_iteration]:
        out += np.array([naive_tree_walk(tree, row) for row in X])
    return 1.0 / (1.0 + np.exp(-out))


def _separable(n=800, seed=0, missing=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X[:, 1] > 0.0).astype(np.int8)
    if missing:
        X[rng.uniform(size=X.shape) < missing] = np.nan
        y = (np.nan_to_num(X[:, 1], nan=-1.0) > 0.0).astype(np.int8)
    return X, y


FEATURES = ["f0", "f1", "f2", "f3"]
FAST = GbdtParams(max_trees=25, learning_rate=0.3, max_leaves=8, min_child_samples=5, patience=10)


def test_separable_reaches_auroc_one_quickly():
    X, y = _separable()
    model = train_gbdt(X[:600], y[:600], X[600:], y[600:], FEATURES,
                       GbdtParams(max_trees=20, learning_rate=0.3, max_leaves=8, min_child_samples=5, patience=0))
    assert len(model.trees) <= 20
    scores = predict_scores(model, X[:600])
    assert brute_force_auroc(scores, y[:600]) == 1.0


def test_patience_zero_disables_early_stopping():
    X, y = _separable()
    model = train_gbdt(X[:600], y[:600], X[600:], y[600:], FEATURES,
                       GbdtParams(max_trees=15, learning_rate=0.05, max_leaves=4, min_child_samples=5, patience=0))
    assert len(model.trees) == 15
    if all(b < a for a, b in zip(model.valid_loss, model.valid_loss[1:])):
        assert model.best_iteration == 15


def test_constant_features_predict_base_rate():
    X = np.ones((100, 3))
    y = np.array([1] * 30 + [0] * 70, dtype=np.int8)
    model = train_gbdt(X, y, X[:10], y[:10], ["a", "b", "c"], FAST)
    assert len(model.trees) == 0
    scores = predict_scores(model, X)
    assert np.all(np.abs(scores - 0.3) < 1e-6)


def test_empty_ensemble_prediction_is_base_score():
    X, _ = _separable(200)
    base_score = -0.7
    empty = BoostedEnsemble(trees=[], learning_rate=0.1, base_score=base_score,
                            best_iteration=0, feature_names=FEATURES)
    expected = 1.0 / (1.0 + np.exp(-base_score))
    assert np.allclose(empty.predict(X[:5]), expected)


def test_prediction_ignores_trees_beyond_best_iteration():
    X, y = _separable()
    model = train_gbdt(X[:500], y[:500], X[500:], y[500:], FEATURES, FAST)
    before = predict_scores(model, X[500:])
    extra = Tree()
    extra.add_node(1)
    extra.value[0] = 99.0
    model.trees.append(extra)
    assert np.array_equal(predict_scores(model, X[500:]), before)


def test_predictions_match_naive_oracle_with_missing():
    X, y = _separable(900, seed=3, missing=0.25)
    model = train_gbdt(X[:600], y[:600], X[600:], y[600:], FEATURES, FAST)
    rng = np.random.default_rng(1)
    Xq = rng.normal(size=(1000, 4))
    Xq[rng.uniform(size=Xq.shape) < 0.3] = np.nan
    fast = predict_scores(model, Xq)
    slow = naive_predict(model, Xq)
    assert np.max(np.abs(fast - slow)) < 1e-12


def test_training_loss_non_increasing():
    X, y = _separable(600, seed=5)
    model = train_gbdt(X, y, X[:100], y[:100], FEATURES,
                       GbdtParams(max_trees=60, learning_rate=0.3, max_leaves=8, min_child_samples=1, patience=0))
    losses = np.array(model.train_loss)
    assert np.all(np.diff(losses) <= 1e-12)


def test_early_stopping_selects_validation_argmin():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(700, 6))
    logit = X[:, 0] * 1.2 + rng.normal(scale=1.6, size=700)
    y = (logit > 0).astype(np.int8)
    model = train_gbdt(X[:400], y[:400], X[400:], y[400:], [f"f{i}" for i in range(6)],
                       GbdtParams(max_trees=400, learning_rate=0.2, max_leaves=16, min_child_samples=5, patience=25))
    losses = model.valid_loss
    assert model.best_iteration == int(np.argmin(losses)) + 1
    assert losses[model.best_iteration - 1] <= min(losses)
    assert len(losses) - model.best_iteration >= 25 or len(losses) == 400


def test_single_class_labels_error():
    X = np.random.default_rng(0).normal(size=(50, 2))
    with pytest.raises(TrainingError):
        train_gbdt(X, np.ones(50, dtype=np.int8), X, np.ones(50, dtype=np.int8), ["a", "b"], FAST)


def test_schema_mismatch_error():
    X, y = _separable(300)
    model = train_gbdt(X, y, X, y, FEATURES, FAST)
    with pytest.raises(SchemaMismatchError):
        model.predict(X[:, :3])
    with pytest.raises(SchemaMismatchError):
        model.predict(X, feature_names=["x0", "x1", "x2", "x3"])


def test_deterministic_serialization():
    X, y = _separable(500, seed=9, missing=0.1)
    a = train_gbdt(X[:350], y[:350], X[350:], y[350:], FEATURES, FAST, seed=4)
    b = train_gbdt(X[:350], y[:350], X[350:], y[350:], FEATURES, FAST, seed=4)
    assert a.to_json() == b.to_json()


def test_json_round_trip_preserves_predictions():
    X, y = _separable(400, seed=2)
    model = train_gbdt(X[:300], y[:300], X[300:], y[300:], FEATURES, FAST)
    restored = BoostedEnsemble.from_json(model.to_json())
    assert np.array_equal(predict_scores(restored, X), predict_scores(model, X))


def test_missing_value_default_direction_per_node():
    X, y = _separable(900, seed=3, missing=0.25)
    model = train_gbdt(X[:700], y[:700], X[700:], y[700:], FEATURES, FAST)
    probe = np.full((1, 4), np.nan)
    for tree in model.trees[: model.best_iteration]:
        i = 0
        while tree.feature[i] >= 0:
            i = tree.left[i] if tree.default_left[i] else tree.right[i]
        assert naive_tree_walk(tree, probe[0]) == tree.value[i]


def test_kernel_implementations_agree():
    X, y = _separable(500, seed=11, missing=0.15)
    kwargs = dict(feature_names=FEATURES, params=FAST, seed=0)
    compiled_available = kernels.KERNEL_IMPL == "compiled"
    a = train_gbdt(X[:350], y[:350], X[350:], y[350:], kernel="fallback", **kwargs)
    if compiled_available:
        b = train_gbdt(X[:350], y[:350], X[350:], y[350:], kernel="compiled", **kwargs)
        sa = predict_scores(a, X)
        sb = predict_scores(b, X)
        assert np.max(np.abs(sa - sb)) < 1e-9


# -- baselines --------------------------------------------------------------------

def test_baseline_s_comparisons():
    assert baseline_s(np.array([88.0]), 90.0).tolist() == [1.0]
    assert baseline_s(np.array([95.0]), 90.0).tolist() == [0.0]
    assert baseline_s(np.array([np.nan]), 90.0).tolist() == [0.0]
    assert np.all(baseline_s(np.array([50.0, 99.9]), 100.0) == 1.0)
    with pytest.raises(TrainingError):
        baseline_s(np.array([95.0]), 0.0)


def test_baseline_c_recovers_fio2_rule():
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(85, 100, 1500), rng.uniform(0.21, 0.9, 1500)])
    y = (X[:, 1] > 0.4).astype(np.int8)
    model = train_baseline_c(X, y, ["spo2", "fio2_estimate"], min_child_samples=5)
    assert model.n_leaves <= 32
    assert brute_force_auroc(model.predict(X), y) == 1.0
    # label depends only on fio2, so two leaves suffice
    used = {leaf for leaf in model.tree.leaf_index(X)}
    assert len(used) <= 2


def test_baseline_c_leaf_cap():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(3000, 2))
    y = (rng.uniform(size=3000) < 1 / (1 + np.exp(-(X[:, 0] + np.sin(3 * X[:, 1]))))).astype(np.int8)
    model = train_baseline_c(X, y, ["a", "b"], min_child_samples=5)
    assert model.n_leaves <= 32


def test_baseline_c_monotone_rescaling_invariance():
    rng = np.random.default_rng(2)
    X = np.column_stack([rng.uniform(85, 100, 800), rng.uniform(0.21, 0.9, 800)])
    logit = -(X[:, 0] - 92) / 2 + 4 * (X[:, 1] - 0.4)
    y = (rng.uniform(size=800) < 1 / (1 + np.exp(-logit))).astype(np.int8)
    base = train_baseline_c(X, y, ["spo2", "fio2"], min_child_samples=10)
    Xs = X.copy()
    Xs[:, 0] = np.exp(X[:, 0] / 20.0)  # strictly monotone rescaling
    rescaled = train_baseline_c(Xs, y, ["spo2", "fio2"], min_child_samples=10)
    assert np.array_equal(base.tree.leaf_index(X), rescaled.tree.leaf_index(Xs))


def test_baseline_c_scores_are_smoothed_fractions():
    X = np.column_stack([np.r_[np.zeros(60), np.ones(40)], np.zeros(100)])
    y = np.r_[np.zeros(60), np.ones(40)].astype(np.int8)
    model = train_baseline_c(X, y, ["a", "b"], min_child_samples=5)
    scores = model.predict(X)
    assert scores[0] == pytest.approx(1.0 / 62.0)
    assert scores[-1] == pytest.approx(41.0 / 42.0)


# -- importance -------------------------------------------------------------------

def test_importance_single_informative_feature():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(1200, 5))
    y = (X[:, 3] > 0.2).astype(np.int8)
    model = train_gbdt(X[:800], y[:800], X[800:], y[800:], [f"f{i}" for i in range(5)], FAST)
    ranked = feature_importance(model, X[800:], y[800:], seed=0)
    assert ranked["gain"][0][0] == "f3"
    assert ranked["permutation"][0][0] == "f3"


def test_importance_unused_feature_zero_gain():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(600, 3))
    y = (X[:, 0] > 0).astype(np.int8)
    model = train_gbdt(X[:400], y[:400], X[400:], y[400:], ["a", "b", "c"],
                       GbdtParams(max_trees=5, learning_rate=0.3, max_leaves=4, min_child_samples=5, patience=0))
    gains = dict(gain_importance(model))
    used = {f for t in model.trees for f in t.feature if f >= 0}
    for j, name in enumerate(["a", "b", "c"]):
        if j not in used:
            assert gains[name] == 0.0


def test_importance_duplicated_feature_pair():
    rng = np.random.default_rng(6)
    base = rng.normal(size=1500)
    X = np.column_stack([base, base, rng.normal(size=1500)])
    y = (base > 0).astype(np.int8)
    model = train_gbdt(X[:1000], y[:1000], X[1000:], y[1000:], ["dup1", "dup2", "noise"], FAST)
    perm = dict(feature_importance(model, X[1000:], y[1000:], seed=0)["permutation"])
    # reported, not asserted strictly: the duplicated pair should dominate noise
    assert perm["dup1"] + perm["dup2"] >= perm["noise"]
