"""Decision-tree containers and the boosted-ensemble model."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from respews.errors import SchemaMismatchError

FORMAT_VERSION = 1


class Tree:
    """Binary tree over flat node arrays.

    Internal nodes carry (feature, threshold, default_left, gain); leaves
    carry an additive value.  Rows with a missing split feature follow the
    node's stored default direction.
    """

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.default_left: list[bool] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.gain: list[float] = []
        self.n_samples: list[int] = []

    def add_node(self, n_samples: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.default_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.gain.append(0.0)
        self.n_samples.append(int(n_samples))
        return len(self.feature) - 1

    @property
    def n_leaves(self) -> int:
        return sum(1 for f in self.feature if f < 0)

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        """Vectorized routing of rows to leaf node ids."""
        feature = np.asarray(self.feature, dtype=np.int64)
        threshold = np.asarray(self.threshold)
        default_left = np.asarray(self.default_left, dtype=bool)
        left = np.asarray(self.left, dtype=np.int64)
        right = np.asarray(self.right, dtype=np.int64)
        idx = np.zeros(len(X), dtype=np.int64)
        while True:
            active = feature[idx] >= 0
            if not active.any():
                return idx
            rows = np.flatnonzero(active)
            node = idx[rows]
            v = X[rows, feature[node]]
            goes_left = np.where(np.isnan(v), default_left[node], v <= threshold[node])
            idx[rows] = np.where(goes_left, left[node], right[node])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.value)[self.leaf_index(X)]

    def to_dict(self) -> dict:
        def emit(i: int) -> dict:
            if self.feature[i] < 0:
                return {"value": self.value[i], "n": self.n_samples[i]}
            return {
                "feature": self.feature[i],
                "threshold": self.threshold[i],
                "default_left": self.default_left[i],
                "gain": self.gain[i],
                "n": self.n_samples[i],
                "children": [emit(self.left[i]), emit(self.right[i])],
            }

        return emit(0)

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        tree = cls()

        def build(node_doc: dict) -> int:
            i = tree.add_node(node_doc.get("n", 0))
            if "children" in node_doc:
                tree.feature[i] = int(node_doc["feature"])
                tree.threshold[i] = float(node_doc["threshold"])
                tree.default_left[i] = bool(node_doc["default_left"])
                tree.gain[i] = float(node_doc.get("gain", 0.0))
                tree.left[i] = build(node_doc["children"][0])
                tree.right[i] = build(node_doc["children"][1])
            else:
                tree.value[i] = float(node_doc["value"])
            return i

        build(doc)
        return tree


def schema_hash(feature_names: list[str]) -> str:
    payload = json.dumps(list(feature_names)).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def _sigmoid(m: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-m))


@dataclass
class BoostedEnsemble:
    """Gradient-boosted tree classifier with a validation-selected length."""

    trees: list[Tree]
    learning_rate: float
    base_score: float  # log-odds
    best_iteration: int  # number of trees used at prediction time
    feature_names: list[str]
    params: dict = field(default_factory=dict)
    train_loss: list[float] = field(default_factory=list)
    valid_loss: list[float] = field(default_factory=list)

    def margin(self, X: np.ndarray, n_trees: int | None = None) -> np.ndarray:
        n = self.best_iteration if n_trees is None else n_trees
        out = np.full(len(X), self.base_score)
        for tree in self.trees[:n]:
            out += tree.predict_value(X)
        return out

    def predict(self, X: np.ndarray, feature_names: list[str] | None = None) -> np.ndarray:
        if feature_names is not None and list(feature_names) != list(self.feature_names):
            raise SchemaMismatchError(
                f"matrix schema hash {schema_hash(feature_names)} does not match "
                f"model schema hash {schema_hash(self.feature_names)}"
            )
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatchError(
                f"matrix has {X.shape[1]} columns, model expects {len(self.feature_names)}"
            )
        return _sigmoid(self.margin(X))

    def to_json(self) -> str:
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "boosted_ensemble",
            "learning_rate": self.learning_rate,
            "base_score": self.base_score,
            "best_iteration": self.best_iteration,
            "feature_names": list(self.feature_names),
            "schema_hash": schema_hash(self.feature_names),
            "params": self.params,
            "train_loss": self.train_loss,
            "valid_loss": self.valid_loss,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "BoostedEnsemble":
        doc = json.loads(text)
        if doc.get("kind") != "boosted_ensemble":
            raise SchemaMismatchError(f"not an ensemble document: kind={doc.get('kind')!r}")
        return cls(
            trees=[Tree.from_dict(t) for t in doc["trees"]],
            learning_rate=doc["learning_rate"],
            base_score=doc["base_score"],
            best_iteration=doc["best_iteration"],
            feature_names=doc["feature_names"],
            params=doc.get("params", {}),
            train_loss=doc.get("train_loss", []),
            valid_loss=doc.get("valid_loss", []),
        )


@dataclass
class SingleTreeBaseline:
    """Clinical baseline C: one tree over current SpO2 and FiO2 estimate.

    Leaf scores are smoothed positive fractions, so predictions are already
    probabilities.
    """

    tree: Tree
    feature_names: list[str]

    def predict(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatchError(
                f"matrix has {X.shape[1]} columns, baseline expects {len(self.feature_names)}"
            )
        return self.tree.predict_value(X)

    @property
    def n_leaves(self) -> int:
        return self.tree.n_leaves

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": FORMAT_VERSION,
                "kind": "single_tree_baseline",
                "feature_names": list(self.feature_names),
                "tree": self.tree.to_dict(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SingleTreeBaseline":
        doc = json.loads(text)
        return cls(tree=Tree.from_dict(doc["tree"]), feature_names=doc["feature_names"])
