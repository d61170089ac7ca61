"""From-scratch CART trees and bagged/extra-trees ensembles.

Induction is greedy weighted-Gini. Candidate thresholds sit at midpoints of
consecutive distinct sorted values (CART) or are drawn uniformly inside the
node-local min-max (extra trees). Equal-cost splits break toward the lowest
feature index, then the lowest threshold, so fits are reproducible across
platforms. Each tree derives its randomness from (seed, tree_index), which
keeps ensembles deterministic regardless of fitting order.

Sample weights enter the Gini arithmetic directly; bootstrap resampling for
forests draws row indices with probability proportional to weight and then
trains on unit weights, so integer-weighted fits coincide with fits on
row-replicated data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .balancing import LabeledMatrix, SampleWeightVector
from .errors import InputError, ParameterError, SchemaError, ShapeError, TrainingError
from .schema import FeatureSpec

DECISION_TREE = "decision_tree"
RANDOM_FOREST = "random_forest"
EXTRA_TREES = "extra_trees"

MODEL_KINDS = (DECISION_TREE, RANDOM_FOREST, EXTRA_TREES)

MODEL_FORMAT = "bankcf-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature_index >= 0) or leaf (feature_index == -1)."""

    feature_index: int
    threshold: float
    left: Optional["TreeNode"]
    right: Optional["TreeNode"]
    positive_mass: float
    total_weight: float

    @staticmethod
    def leaf(positive_mass: float, total_weight: float) -> "TreeNode":
        return TreeNode(-1, math.nan, None, None, float(positive_mass), float(total_weight))

    @staticmethod
    def internal(feature_index: int, threshold: float, left: "TreeNode", right: "TreeNode") -> "TreeNode":
        if not math.isfinite(threshold):
            raise TrainingError(f"non-finite split threshold {threshold}")
        return TreeNode(int(feature_index), float(threshold), left, right, math.nan, math.nan)

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    mtry: Optional[int] = None  # default sqrt(d) for ensembles, d for a single tree
    bootstrap: Optional[bool] = None  # default True for forest, False otherwise
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.min_samples_split < 1:
            raise ParameterError("n_trees and min_samples_split must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ParameterError("max_depth must be >= 1 when bounded")
        if self.mtry is not None and self.mtry < 1:
            raise ParameterError("mtry must be >= 1 when set")


class _FlatTree:
    """Array view of a tree for vectorized prediction."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, root: TreeNode):
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []

        def walk(node: TreeNode) -> int:
            idx = len(feature)
            feature.append(node.feature_index)
            threshold.append(node.threshold)
            left.append(-1)
            right.append(-1)
            value.append(node.positive_mass)
            if not node.is_leaf:
                left[idx] = walk(node.left)
                right[idx] = walk(node.right)
            return idx

        walk(root)
        self.feature = np.array(feature, dtype=np.int32)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=np.int32)
        self.right = np.array(right, dtype=np.int32)
        self.value = np.array(value, dtype=float)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int32)
        while True:
            feats = self.feature[node]
            active = np.flatnonzero(feats >= 0)
            if len(active) == 0:
                return self.value[node]
            cur = node[active]
            go_left = X[active, feats[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])


@dataclass(frozen=True)
class EnsembleModel:
    kind: str
    trees: tuple[TreeNode, ...]
    feature_names: tuple[str, ...]
    train_config: TrainConfig
    decision_threshold: float = 0.5
    _flat: tuple[_FlatTree, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ParameterError(f"unknown model kind {self.kind!r}")
        if self.kind == DECISION_TREE and len(self.trees) != 1:
            raise TrainingError("decision tree model must hold exactly one tree")
        object.__setattr__(self, "_flat", tuple(_FlatTree(t) for t in self.trees))

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _node_depth_ok(depth: int, max_depth: Optional[int]) -> bool:
    return max_depth is None or depth < max_depth


def _leaf_from(y: np.ndarray, w: np.ndarray) -> TreeNode:
    total = float(w.sum())
    positive = float((w * y).sum())
    return TreeNode.leaf(positive / total, total)


def _cart_feature_best(v: np.ndarray, y: np.ndarray, w: np.ndarray) -> Optional[tuple[float, float]]:
    """Best (cost, threshold) for one feature over all distinct-value midpoints."""
    order = np.argsort(v, kind="stable")
    vs = v[order]
    if vs[0] == vs[-1]:
        return None
    ws = w[order]
    wps = (w * y)[order]
    cw = np.cumsum(ws)
    cwp = np.cumsum(wps)
    valid = vs[:-1] < vs[1:]
    if not valid.any():
        return None
    w_left = cw[:-1][valid]
    wp_left = cwp[:-1][valid]
    w_total = cw[-1]
    wp_total = cwp[-1]
    w_right = w_total - w_left
    wp_right = wp_total - wp_left
    cost = 2.0 * (
        wp_left * (w_left - wp_left) / w_left + wp_right * (w_right - wp_right) / w_right
    )
    thresholds = (vs[:-1][valid] + vs[1:][valid]) / 2.0
    i = int(np.argmin(cost))  # thresholds ascend, so first min is the lowest
    return float(cost[i]), float(thresholds[i])


def _random_feature_best(
    v: np.ndarray, y: np.ndarray, w: np.ndarray, rng: np.random.Generator
) -> Optional[tuple[float, float]]:
    """One uniform threshold in the node-local min-max, scored by weighted Gini."""
    lo = float(v.min())
    hi = float(v.max())
    if lo == hi:
        return None
    threshold = float(rng.uniform(lo, hi))
    go_left = v <= threshold
    if go_left.all() or not go_left.any():
        return None
    w_left = float(w[go_left].sum())
    wp_left = float((w * y)[go_left].sum())
    w_right = float(w[~go_left].sum())
    wp_right = float((w * y)[~go_left].sum())
    cost = 2.0 * (
        wp_left * (w_left - wp_left) / w_left + wp_right * (w_right - wp_right) / w_right
    )
    return cost, threshold


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    depth: int,
    mtry: int,
    max_depth: Optional[int],
    min_samples_split: int,
    rng: np.random.Generator,
    random_thresholds: bool,
) -> TreeNode:
    positive = float((w * y).sum())
    total = float(w.sum())
    if (
        len(y) < min_samples_split
        or positive == 0.0
        or positive == total
        or not _node_depth_ok(depth, max_depth)
    ):
        return _leaf_from(y, w)

    d = X.shape[1]
    # walk a seeded permutation, skipping node-constant features, until mtry
    # usable candidates were scored; lexicographic (cost, feature, threshold)
    # keeps equal-cost choices deterministic
    perm = rng.permutation(d) if mtry < d else np.arange(d)
    best: Optional[tuple[float, int, float]] = None
    scored = 0
    for j in perm:
        v = X[:, j]
        result = (
            _random_feature_best(v, y, w, rng)
            if random_thresholds
            else _cart_feature_best(v, y, w)
        )
        if result is None:
            continue
        scored += 1
        cost, threshold = result
        candidate = (cost, int(j), threshold)
        if best is None or candidate < best:
            best = candidate
        if scored >= mtry:
            break
    if best is None:
        return _leaf_from(y, w)

    _, feature_index, threshold = best
    go_left = X[:, feature_index] <= threshold
    left = _build_tree(
        X[go_left], y[go_left], w[go_left], depth + 1, mtry, max_depth,
        min_samples_split, rng, random_thresholds,
    )
    right = _build_tree(
        X[~go_left], y[~go_left], w[~go_left], depth + 1, mtry, max_depth,
        min_samples_split, rng, random_thresholds,
    )
    return TreeNode.internal(feature_index, threshold, left, right)


def _check_training_input(data: LabeledMatrix, weights: SampleWeightVector) -> None:
    if len(data) == 0:
        raise TrainingError("cannot fit on empty data")
    if len(weights) != len(data):
        raise ShapeError(f"{len(weights)} weights for {len(data)} rows")


def _resolve_mtry(config: TrainConfig, d: int, default: int) -> int:
    mtry = config.mtry if config.mtry is not None else default
    if mtry > d:
        raise ParameterError(f"mtry={mtry} exceeds feature count {d}")
    return mtry


def _fit_ensemble(
    kind: str,
    data: LabeledMatrix,
    weights: SampleWeightVector,
    config: TrainConfig,
    feature_names: Optional[Sequence[str]],
    n_trees: int,
    mtry: int,
    bootstrap: bool,
    random_thresholds: bool,
) -> EnsembleModel:
    X = data.features
    y = data.labels.astype(float)
    w = weights.weights
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([config.seed, t])
        if bootstrap:
            idx = rng.choice(len(y), size=len(y), replace=True, p=w / w.sum())
            Xt, yt, wt = X[idx], y[idx], np.ones(len(idx))
        else:
            Xt, yt, wt = X, y, w
        trees.append(
            _build_tree(
                Xt, yt, wt, 0, mtry, config.max_depth, config.min_samples_split,
                rng, random_thresholds,
            )
        )
    names = tuple(feature_names) if feature_names else tuple(f"f{j}" for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise ShapeError(f"{len(names)} feature names for {X.shape[1]} columns")
    resolved = replace(config, n_trees=n_trees, mtry=mtry, bootstrap=bootstrap)
    return EnsembleModel(kind=kind, trees=tuple(trees), feature_names=names, train_config=resolved)


def fit_decision_tree(
    data: LabeledMatrix,
    weights: SampleWeightVector,
    config: TrainConfig = TrainConfig(),
    feature_names: Optional[Sequence[str]] = None,
) -> EnsembleModel:
    """Single CART tree; considers every feature at each split (mtry = d)."""
    _check_training_input(data, weights)
    d = data.features.shape[1]
    mtry = _resolve_mtry(config, d, d)
    return _fit_ensemble(
        DECISION_TREE, data, weights, config, feature_names,
        n_trees=1, mtry=mtry, bootstrap=bool(config.bootstrap), random_thresholds=False,
    )


def fit_random_forest(
    data: LabeledMatrix,
    weights: SampleWeightVector,
    config: TrainConfig = TrainConfig(),
    feature_names: Optional[Sequence[str]] = None,
) -> EnsembleModel:
    """Bagged CART trees on weighted bootstrap resamples, mtry = ceil(sqrt(d))."""
    _check_training_input(data, weights)
    d = data.features.shape[1]
    mtry = _resolve_mtry(config, d, math.ceil(math.sqrt(d)))
    bootstrap = True if config.bootstrap is None else config.bootstrap
    return _fit_ensemble(
        RANDOM_FOREST, data, weights, config, feature_names,
        n_trees=config.n_trees, mtry=mtry, bootstrap=bootstrap, random_thresholds=False,
    )


def fit_extra_trees(
    data: LabeledMatrix,
    weights: SampleWeightVector,
    config: TrainConfig = TrainConfig(),
    feature_names: Optional[Sequence[str]] = None,
) -> EnsembleModel:
    """Extremely randomized trees: no bootstrap, one uniform threshold per candidate."""
    _check_training_input(data, weights)
    d = data.features.shape[1]
    mtry = _resolve_mtry(config, d, math.ceil(math.sqrt(d)))
    bootstrap = False if config.bootstrap is None else config.bootstrap
    return _fit_ensemble(
        EXTRA_TREES, data, weights, config, feature_names,
        n_trees=config.n_trees, mtry=mtry, bootstrap=bootstrap, random_thresholds=True,
    )


def _check_vector(model: EnsembleModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("input vector contains non-finite values")
    return x


def predict_proba_matrix(model: EnsembleModel, X: np.ndarray) -> np.ndarray:
    """Mean per-tree leaf positive mass for each row of X (no per-row checks)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(f"expected (n, {model.n_features}) matrix, got {X.shape}")
    out = np.zeros(len(X))
    for flat in model._flat:
        out += flat.predict(X)
    return out / len(model.trees)


def predict_proba(model: EnsembleModel, x) -> float:
    x = _check_vector(model, x)
    return float(predict_proba_matrix(model, x.reshape(1, -1))[0])


def predict_label(model: EnsembleModel, x) -> int:
    """1 iff the positive probability reaches the decision threshold."""
    return int(predict_proba(model, x) >= model.decision_threshold)


def predict_label_matrix(model: EnsembleModel, X: np.ndarray) -> np.ndarray:
    return (predict_proba_matrix(model, X) >= model.decision_threshold).astype(int)


def _tree_to_rows(root: TreeNode) -> list[list]:
    rows: list[list] = []

    def walk(node: TreeNode) -> int:
        idx = len(rows)
        rows.append(None)  # placeholder; children get indices first
        if node.is_leaf:
            rows[idx] = [-1, None, -1, -1, node.positive_mass, node.total_weight]
        else:
            left = walk(node.left)
            right = walk(node.right)
            rows[idx] = [node.feature_index, node.threshold, left, right, None, None]
        return idx

    walk(root)
    return rows


def _tree_from_rows(rows: list[list]) -> TreeNode:
    def build(idx: int) -> TreeNode:
        feat, thr, left, right, mass, weight = rows[idx]
        if feat < 0:
            return TreeNode.leaf(mass, weight)
        return TreeNode.internal(feat, thr, build(left), build(right))

    return build(0)


def _spec_to_json(spec: FeatureSpec) -> dict:
    return {
        "name": spec.name,
        "kind": spec.kind,
        "valid_range": list(spec.valid_range) if spec.valid_range else None,
        "observed_range": list(spec.observed_range) if spec.observed_range else None,
        "mutable_in_cf": spec.mutable_in_cf,
    }


def _spec_from_json(doc: dict) -> FeatureSpec:
    return FeatureSpec(
        name=doc["name"],
        kind=doc["kind"],
        valid_range=tuple(doc["valid_range"]) if doc.get("valid_range") else None,
        observed_range=tuple(doc["observed_range"]) if doc.get("observed_range") else None,
        mutable_in_cf=doc.get("mutable_in_cf", True),
    )


def model_to_json(model: EnsembleModel, schema: Sequence[FeatureSpec]) -> dict:
    names = tuple(spec.name for spec in schema)
    if names != model.feature_names:
        raise SchemaError(f"schema names {names} do not match model {model.feature_names}")
    cfg = model.train_config
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "decision_threshold": model.decision_threshold,
        "train_config": {
            "n_trees": cfg.n_trees,
            "max_depth": cfg.max_depth,
            "min_samples_split": cfg.min_samples_split,
            "mtry": cfg.mtry,
            "bootstrap": cfg.bootstrap,
            "seed": cfg.seed,
        },
        "schema": [_spec_to_json(spec) for spec in schema],
        "trees": [_tree_to_rows(tree) for tree in model.trees],
    }


def model_from_json(doc: dict) -> tuple[EnsembleModel, list[FeatureSpec]]:
    if doc.get("format") != MODEL_FORMAT:
        raise SchemaError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise SchemaError(f"unsupported model version {doc.get('version')!r}")
    schema = [_spec_from_json(item) for item in doc["schema"]]
    names = tuple(doc["feature_names"])
    if names != tuple(spec.name for spec in schema):
        raise SchemaError("feature_names do not match the stored schema")
    model = EnsembleModel(
        kind=doc["kind"],
        trees=tuple(_tree_from_rows(rows) for rows in doc["trees"]),
        feature_names=names,
        train_config=TrainConfig(**doc["train_config"]),
        decision_threshold=doc["decision_threshold"],
    )
    return model, schema


def save_model(model: EnsembleModel, schema: Sequence[FeatureSpec], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_json(model, schema), sort_keys=True), encoding="utf-8"
    )


def load_model(path: str | Path) -> tuple[EnsembleModel, list[FeatureSpec]]:
    return model_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
