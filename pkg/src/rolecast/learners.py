"""From-scratch multi-class learners with probability outputs.

CART decision trees (Gini criterion, midpoint thresholds), a bootstrap random
forest, and SAMME AdaBoost over depth-1 stumps. Training is bit-reproducible
for a fixed seed; per-tree randomness derives from (seed, tree index).
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _treekernel
from .errors import DataFormatError

__all__ = [
    "TreeParams",
    "ForestParams",
    "BoostParams",
    "TreeModel",
    "ForestModel",
    "BoostModel",
    "gini_impurity",
    "best_split",
    "train_decision_tree",
    "train_random_forest",
    "train_adaboost",
    "predict_proba",
    "derive_seed",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "rolecast-model"
MODEL_VERSION = 1


def derive_seed(seed: int, *tags) -> int:
    """Stable 32-bit seed derived from a base seed and string/int tags."""
    parts = [int(seed)]
    for tag in tags:
        parts.append(tag if isinstance(tag, int) else zlib.crc32(str(tag).encode()))
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def gini_impurity(counts) -> float:
    """1 - sum(p_i^2) over class proportions."""
    counts = list(counts)
    total = float(sum(counts))
    if total <= 0:
        raise DataFormatError("gini impurity needs a positive total count")
    g = 1.0
    for c in counts:
        p = c / total
        g -= p * p
    return g


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataFormatError(f"X must be 2-D, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DataFormatError("X contains non-finite values")
    return X


def _as_labels(y, n_rows: int, n_classes: int | None) -> tuple[np.ndarray, int]:
    y = np.ascontiguousarray(y, dtype=np.int64)
    if y.ndim != 1 or y.shape[0] != n_rows:
        raise DataFormatError(f"y must be 1-D with {n_rows} entries, got shape {y.shape}")
    if y.size and y.min() < 0:
        raise DataFormatError("labels must be non-negative class indices")
    inferred = int(y.max()) + 1 if y.size else 0
    if n_classes is None:
        n_classes = inferred
    elif inferred > n_classes:
        raise DataFormatError(f"label {y.max()} outside {n_classes} classes")
    return y, n_classes


def best_split(X, y, features=None, n_classes: int | None = None):
    """Exhaustive best Gini split, or None when nothing decreases impurity.

    Thresholds are midpoints between consecutive distinct sorted values of each
    candidate feature; ties break toward the lowest feature index, then the
    lowest threshold. Returns (feature, threshold, impurity_decrease).
    """
    X = _as_matrix(X)
    n, d = X.shape
    if n < 2:
        raise DataFormatError("best_split needs at least 2 samples")
    y, n_classes = _as_labels(y, n, n_classes)
    if features is None:
        feats = np.arange(d, dtype=np.int64)
    else:
        feats = np.array(sorted(set(int(f) for f in features)), dtype=np.int64)
        if feats.size == 0:
            raise DataFormatError("candidate feature set is empty")
        if feats.min() < 0 or feats.max() >= d:
            raise DataFormatError("candidate feature index out of range")
    w = np.ones(n, dtype=np.float64)
    order = np.arange(n, dtype=np.int64)
    found, f, thr, dec = _treekernel.best_split_scan(
        X, y, w, order, 0, n, feats, n_classes, 1
    )
    if not found:
        return None
    return int(f), float(thr), float(dec)


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_leaf: int = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    features_per_split: int | None = None  # None -> ceil(sqrt(d))
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_leaf: int = 1


@dataclass(frozen=True)
class BoostParams:
    n_stages: int = 50


@dataclass
class TreeModel:
    """Binary CART tree stored as flat arrays; feature[i] == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) class counts (weighted)
    n_classes: int
    n_features: int
    params: TreeParams = field(default_factory=TreeParams)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass
class ForestModel:
    trees: list[TreeModel]
    n_classes: int
    n_features: int
    seed: int
    params: ForestParams = field(default_factory=ForestParams)


@dataclass
class BoostModel:
    stumps: list[TreeModel]
    alphas: list[float]
    n_classes: int
    n_features: int
    params: BoostParams = field(default_factory=BoostParams)


def _grow(X, y, w, n_classes, max_depth, min_leaf, m_try, seed, bootstrap) -> TreeModel:
    depth = -1 if max_depth is None else int(max_depth)
    feature, threshold, left, right, counts = _treekernel.grow_tree(
        X, y, w, n_classes, depth, min_leaf, m_try, seed, bootstrap
    )
    return TreeModel(
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        counts=counts,
        n_classes=n_classes,
        n_features=X.shape[1],
        params=TreeParams(max_depth=max_depth, min_samples_leaf=min_leaf),
    )


def train_decision_tree(
    X,
    y,
    params: TreeParams = TreeParams(),
    seed: int = 0,
    n_classes: int | None = None,
    sample_weight=None,
) -> TreeModel:
    X = _as_matrix(X)
    if X.shape[0] < 1:
        raise DataFormatError("training needs at least 1 sample")
    y, n_classes = _as_labels(y, X.shape[0], n_classes)
    if sample_weight is None:
        w = np.ones(X.shape[0], dtype=np.float64)
    else:
        w = np.ascontiguousarray(sample_weight, dtype=np.float64)
        if w.shape != (X.shape[0],):
            raise DataFormatError("sample_weight shape mismatch")
    return _grow(
        X,
        y,
        w,
        n_classes,
        params.max_depth,
        params.min_samples_leaf,
        X.shape[1],
        derive_seed(seed, "tree"),
        False,
    )


def train_random_forest(
    X, y, params: ForestParams = ForestParams(), seed: int = 0, n_classes: int | None = None
) -> ForestModel:
    X = _as_matrix(X)
    if X.shape[0] < 1:
        raise DataFormatError("training needs at least 1 sample")
    y, n_classes = _as_labels(y, X.shape[0], n_classes)
    if params.n_trees < 1:
        raise DataFormatError("n_trees must be >= 1")
    d = X.shape[1]
    m_try = params.features_per_split
    if m_try is None:
        m_try = int(math.ceil(math.sqrt(d)))
    m_try = max(1, min(m_try, d))
    w = np.ones(X.shape[0], dtype=np.float64)
    trees = [
        _grow(
            X,
            y,
            w,
            n_classes,
            params.max_depth,
            params.min_samples_leaf,
            m_try,
            derive_seed(seed, t),
            params.bootstrap,
        )
        for t in range(params.n_trees)
    ]
    return ForestModel(
        trees=trees, n_classes=n_classes, n_features=d, seed=seed, params=params
    )


def train_adaboost(
    X, y, params: BoostParams = BoostParams(), seed: int = 0, n_classes: int | None = None
) -> BoostModel:
    """SAMME boosting with depth-1 trees.

    Stage weight alpha = ln((1-err)/err) + ln(n_classes-1); stops early on a
    perfect stump (kept with alpha 1) or when a stump is no better than chance.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if n < 1:
        raise DataFormatError("training needs at least 1 sample")
    y, n_classes = _as_labels(y, n, n_classes)
    if n_classes < 2:
        raise DataFormatError("adaboost needs at least 2 classes")
    if params.n_stages < 1:
        raise DataFormatError("n_stages must be >= 1")
    w = np.full(n, 1.0 / n, dtype=np.float64)
    stumps: list[TreeModel] = []
    alphas: list[float] = []
    chance = 1.0 - 1.0 / n_classes
    for stage in range(params.n_stages):
        stump = _grow(X, y, w, n_classes, 1, 1, X.shape[1], derive_seed(seed, stage), False)
        pred = _tree_predict_class(stump, X)
        miss = pred != y
        err = float(w[miss].sum())
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(1.0)
            break
        if err >= chance:
            if not stumps:
                stumps.append(stump)
                alphas.append(0.0)
            break
        alpha = math.log((1.0 - err) / err) + math.log(n_classes - 1)
        stumps.append(stump)
        alphas.append(alpha)
        w = w * np.where(miss, math.exp(alpha), 1.0)
        w = w / w.sum()
    return BoostModel(
        stumps=stumps,
        alphas=alphas,
        n_classes=n_classes,
        n_features=X.shape[1],
        params=params,
    )


def _leaf_proba(tree: TreeModel, X: np.ndarray) -> np.ndarray:
    leaves = _treekernel.apply_tree(tree.feature, tree.threshold, tree.left, tree.right, X)
    counts = tree.counts[leaves]
    return counts / counts.sum(axis=1, keepdims=True)


def _tree_predict_class(tree: TreeModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(_leaf_proba(tree, X), axis=1)


def _check_input(x, n_features: int) -> tuple[np.ndarray, bool]:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise DataFormatError(
            f"input has {arr.shape[-1]} features, model expects {n_features}"
        )
    return arr, single


def predict_proba(model, x) -> np.ndarray:
    """Class-probability vector(s) for a feature vector or matrix.

    Trees normalize leaf counts; forests average tree vectors; boost models
    softmax the per-class stage-weight votes. Rows always sum to 1.
    """
    if isinstance(model, TreeModel):
        X, single = _check_input(x, model.n_features)
        probs = _leaf_proba(model, X)
    elif isinstance(model, ForestModel):
        X, single = _check_input(x, model.n_features)
        acc = np.zeros((X.shape[0], model.n_classes), dtype=np.float64)
        for tree in model.trees:
            acc += _leaf_proba(tree, X)
        probs = acc / len(model.trees)
    elif isinstance(model, BoostModel):
        X, single = _check_input(x, model.n_features)
        votes = np.zeros((X.shape[0], model.n_classes), dtype=np.float64)
        for stump, alpha in zip(model.stumps, model.alphas):
            pred = _tree_predict_class(stump, X)
            votes[np.arange(X.shape[0]), pred] += alpha
        shifted = votes - votes.max(axis=1, keepdims=True)
        expv = np.exp(shifted)
        probs = expv / expv.sum(axis=1, keepdims=True)
    else:
        raise DataFormatError(f"unknown model type {type(model).__name__}")
    return probs[0] if single else probs


def _tree_to_dict(tree: TreeModel) -> dict:
    return {
        "kind": "tree",
        "n_classes": tree.n_classes,
        "n_features": tree.n_features,
        "params": {
            "max_depth": tree.params.max_depth,
            "min_samples_leaf": tree.params.min_samples_leaf,
        },
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "counts": tree.counts.tolist(),
    }


def _tree_from_dict(obj: dict) -> TreeModel:
    return TreeModel(
        feature=np.array(obj["feature"], dtype=np.int64),
        threshold=np.array(obj["threshold"], dtype=np.float64),
        left=np.array(obj["left"], dtype=np.int64),
        right=np.array(obj["right"], dtype=np.int64),
        counts=np.array(obj["counts"], dtype=np.float64).reshape(
            len(obj["feature"]), obj["n_classes"]
        ),
        n_classes=obj["n_classes"],
        n_features=obj["n_features"],
        params=TreeParams(**obj["params"]),
    )


def model_to_dict(model) -> dict:
    if isinstance(model, TreeModel):
        return _tree_to_dict(model)
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "seed": model.seed,
            "params": {
                "n_trees": model.params.n_trees,
                "features_per_split": model.params.features_per_split,
                "bootstrap": model.params.bootstrap,
                "max_depth": model.params.max_depth,
                "min_samples_leaf": model.params.min_samples_leaf,
            },
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, BoostModel):
        return {
            "kind": "boost",
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "params": {"n_stages": model.params.n_stages},
            "alphas": list(model.alphas),
            "stumps": [_tree_to_dict(t) for t in model.stumps],
        }
    raise DataFormatError(f"unknown model type {type(model).__name__}")


def model_from_dict(obj: dict):
    kind = obj.get("kind")
    if kind == "tree":
        return _tree_from_dict(obj)
    if kind == "forest":
        return ForestModel(
            trees=[_tree_from_dict(t) for t in obj["trees"]],
            n_classes=obj["n_classes"],
            n_features=obj["n_features"],
            seed=obj["seed"],
            params=ForestParams(**obj["params"]),
        )
    if kind == "boost":
        return BoostModel(
            stumps=[_tree_from_dict(t) for t in obj["stumps"]],
            alphas=[float(a) for a in obj["alphas"]],
            n_classes=obj["n_classes"],
            n_features=obj["n_features"],
            params=BoostParams(**obj["params"]),
        )
    raise DataFormatError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    """Serialize a model as versioned JSON; reloads predict bit-identically."""
    payload = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "model": model_to_dict(model)}
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path):
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise DataFormatError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise DataFormatError(f"{path}: unsupported model version {payload.get('version')!r}")
    return model_from_dict(payload["model"])
