"""Boosted-tree training with validation-based early stopping, plus baselines.

Boosting minimizes binary log-loss; trees grow leaf-wise by exact
sorted-scan split search (compiled kernel when available).  After each tree
the validation loss is evaluated and training stops once it has not
improved for `patience` consecutive rounds; prediction uses the tree
prefix that minimized validation loss.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, asdict

import numpy as np

from respews.errors import TrainingError
from respews.gbdt import kernels
from respews.gbdt.trees import BoostedEnsemble, SingleTreeBaseline, Tree


@dataclass(frozen=True)
class GbdtParams:
    max_trees: int = 5000
    learning_rate: float = 0.05
    max_leaves: int = 64
    min_child_samples: int = 20
    patience: int = 50  # 0 disables early stopping
    reg_lambda: float = 1.0
    min_split_gain: float = 1e-12


def _logloss(margin: np.ndarray, y: np.ndarray) -> float:
    # mean(log(1 + e^m) - y*m), numerically stable
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def _presort(X: np.ndarray) -> np.ndarray:
    order = np.argsort(X, axis=0, kind="stable")  # NaN sorts to the tail
    return np.ascontiguousarray(order.T.astype(np.int32))


class _NodeState:
    __slots__ = ("node_id", "sorted_rows", "grad_sum", "hess_sum", "split")

    def __init__(self, node_id, sorted_rows, grad_sum, hess_sum, split):
        self.node_id = node_id
        self.sorted_rows = sorted_rows
        self.grad_sum = grad_sum
        self.hess_sum = hess_sum
        self.split = split  # (feature, threshold, gain, default_left, n_left)


def _grow_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    root_sorted: np.ndarray,
    params: GbdtParams,
    scratch: np.ndarray,
    impl,
    learning_rate: float,
) -> Tree | None:
    """One leaf-wise tree; returns None when the root admits no useful split."""
    tree = Tree()
    lam = params.reg_lambda
    G = float(np.sum(grad[root_sorted[0]]))
    H = float(np.sum(hess[root_sorted[0]]))
    root_id = tree.add_node(root_sorted.shape[1])
    split = impl.find_best_split(X, grad, hess, root_sorted, G, H, params.min_child_samples, lam)
    if split[0] < 0 or split[2] <= params.min_split_gain:
        return None
    heap: list[tuple[float, int, _NodeState]] = []
    counter = 0
    heapq.heappush(heap, (-split[2], counter, _NodeState(root_id, root_sorted, G, H, split)))
    n_leaves = 1
    while heap and n_leaves < params.max_leaves:
        _, _, state = heapq.heappop(heap)
        feature, threshold, gain, default_left, _ = state.split
        left_rows, right_rows = impl.partition_rows(
            X, state.sorted_rows, feature, threshold, default_left, scratch
        )
        nid = state.node_id
        tree.feature[nid] = feature
        tree.threshold[nid] = threshold
        tree.default_left[nid] = bool(default_left)
        tree.gain[nid] = gain
        left_id = tree.add_node(left_rows.shape[1])
        right_id = tree.add_node(right_rows.shape[1])
        tree.left[nid] = left_id
        tree.right[nid] = right_id
        n_leaves += 1
        for child_id, child_rows in ((left_id, left_rows), (right_id, right_rows)):
            g_sum = float(np.sum(grad[child_rows[0]]))
            h_sum = float(np.sum(hess[child_rows[0]]))
            tree.value[child_id] = -learning_rate * g_sum / (h_sum + lam)
            if n_leaves < params.max_leaves and child_rows.shape[1] >= 2 * params.min_child_samples:
                child_split = impl.find_best_split(
                    X, grad, hess, child_rows, g_sum, h_sum, params.min_child_samples, lam
                )
                if child_split[0] >= 0 and child_split[2] > params.min_split_gain:
                    counter += 1
                    heapq.heappush(
                        heap,
                        (-child_split[2], counter, _NodeState(child_id, child_rows, g_sum, h_sum, child_split)),
                    )
    return tree


def _check_training_inputs(X, y, feature_names):
    if len(X) != len(y):
        raise TrainingError(f"{len(X)} rows but {len(y)} labels")
    if len(X) == 0:
        raise TrainingError("empty training set")
    classes = np.unique(y)
    if not np.isin(classes, (0, 1)).all():
        raise TrainingError(f"labels must be binary 0/1, got {classes}")
    if len(classes) < 2:
        raise TrainingError("training labels contain a single class")
    if X.shape[1] != len(feature_names):
        raise TrainingError(f"{X.shape[1]} columns but {len(feature_names)} feature names")


def train_gbdt(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_valid: np.ndarray,
    y_valid: np.ndarray,
    feature_names: list[str],
    params: GbdtParams | None = None,
    seed: int = 0,
    kernel: str = "auto",
) -> BoostedEnsemble:
    params = params or GbdtParams()
    impl = kernels.get_impl(kernel)
    X_train = np.ascontiguousarray(X_train, dtype=np.float64)
    X_valid = np.ascontiguousarray(X_valid, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    y_valid = np.asarray(y_valid, dtype=np.float64)
    _check_training_inputs(X_train, y_train, feature_names)
    if X_valid.shape[1] != X_train.shape[1]:
        raise TrainingError("validation matrix schema differs from training matrix")

    p_bar = float(np.clip(np.mean(y_train), 1e-6, 1 - 1e-6))
    base_score = float(np.log(p_bar / (1.0 - p_bar)))
    root_sorted = _presort(X_train)
    scratch = np.zeros(len(X_train), dtype=np.int8)

    margin_train = np.full(len(X_train), base_score)
    margin_valid = np.full(len(X_valid), base_score)
    model = BoostedEnsemble(
        trees=[],
        learning_rate=params.learning_rate,
        base_score=base_score,
        best_iteration=0,
        feature_names=list(feature_names),
        params={**asdict(params), "seed": seed, "kernel": kernels.KERNEL_IMPL if kernel == "auto" else kernel},
    )
    best_loss = _logloss(margin_valid, y_valid)
    rounds_since_best = 0
    for _ in range(params.max_trees):
        prob = 1.0 / (1.0 + np.exp(-margin_train))
        grad = prob - y_train
        hess = prob * (1.0 - prob)
        tree = _grow_tree(
            X_train, grad, hess, root_sorted, params, scratch, impl, params.learning_rate
        )
        if tree is None:
            break
        model.trees.append(tree)
        margin_train += tree.predict_value(X_train)
        margin_valid += tree.predict_value(X_valid)
        train_loss = _logloss(margin_train, y_train)
        valid_loss = _logloss(margin_valid, y_valid)
        if not np.isfinite(train_loss) or not np.isfinite(valid_loss):
            raise TrainingError(f"non-finite loss at round {len(model.trees)}")
        model.train_loss.append(train_loss)
        model.valid_loss.append(valid_loss)
        if valid_loss < best_loss:
            best_loss = valid_loss
            model.best_iteration = len(model.trees)
            rounds_since_best = 0
        else:
            rounds_since_best += 1
            if params.patience > 0 and rounds_since_best >= params.patience:
                break
    return model


def predict_scores(model: BoostedEnsemble, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
    return model.predict(np.ascontiguousarray(X, dtype=np.float64), feature_names)


def baseline_s(spo2: np.ndarray, threshold: float) -> np.ndarray:
    """Clinical baseline S: alarm score 1 iff current SpO2 < threshold (% units)."""
    if not 0 < threshold <= 100:
        raise TrainingError(f"SpO2 threshold {threshold} outside (0, 100]")
    spo2 = np.asarray(spo2, dtype=float)
    return (np.isfinite(spo2) & (spo2 < threshold)).astype(float)


def train_baseline_c(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: list[str] = ("spo2", "fio2_estimate"),
    max_leaves: int = 32,
    min_child_samples: int = 20,
    kernel: str = "auto",
) -> SingleTreeBaseline:
    """Clinical baseline C: one log-loss-grown tree with at most 32 leaves.

    Leaf scores are Laplace-smoothed positive fractions of the training rows
    reaching the leaf.
    """
    feature_names = list(feature_names)
    if len(feature_names) != 2:
        raise TrainingError("baseline C uses exactly two features")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(X, y, feature_names)
    impl = kernels.get_impl(kernel)
    params = GbdtParams(max_leaves=max_leaves, min_child_samples=min_child_samples, learning_rate=1.0)
    p_bar = float(np.clip(np.mean(y), 1e-6, 1 - 1e-6))
    margin = np.full(len(y), np.log(p_bar / (1.0 - p_bar)))
    prob = 1.0 / (1.0 + np.exp(-margin))
    grad = prob - y
    hess = prob * (1.0 - prob)
    scratch = np.zeros(len(X), dtype=np.int8)
    tree = _grow_tree(X, grad, hess, _presort(X), params, scratch, impl, 1.0)
    if tree is None:
        tree = Tree()
        tree.add_node(len(y))
    leaf = tree.leaf_index(X)
    for node in np.unique(leaf):
        rows = leaf == node
        tree.value[int(node)] = (float(np.sum(y[rows])) + 1.0) / (int(np.sum(rows)) + 2.0)
    return SingleTreeBaseline(tree=tree, feature_names=feature_names)
