"""Imbalance handling: under/oversampling, SMOTE, and cost-sensitive weights.

All operations are value-in/value-out and deterministic per seed. Resampling
targets exact 1:1 label balance; cost-sensitive weighting leaves the data
untouched and equalizes per-label weight mass instead. Only SMOTE synthesizes
new rows; the other strategies copy existing rows verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import BalancingError, ParameterError, UnsupportedFeatureError

ORIGINAL = "original"
UNDERSAMPLING = "undersampling"
OVERSAMPLING = "oversampling"
SMOTE = "smote"
COST_SENSITIVE = "cost_sensitive"

STRATEGY_TAGS = (ORIGINAL, UNDERSAMPLING, OVERSAMPLING, SMOTE, COST_SENSITIVE)


@dataclass(frozen=True)
class LabeledMatrix:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int in {0, 1}

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if features.ndim != 2 or labels.ndim != 1:
            raise BalancingError("features must be 2-D and labels 1-D")
        if features.shape[0] != labels.shape[0]:
            raise BalancingError(
                f"row mismatch: {features.shape[0]} feature rows vs {labels.shape[0]} labels"
            )
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class BalancingStrategy:
    tag: str = ORIGINAL
    smote_k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.tag not in STRATEGY_TAGS:
            raise ParameterError(f"unknown balancing strategy {self.tag!r}")
        if self.tag == SMOTE and self.smote_k < 1:
            raise ParameterError(f"smote_k must be >= 1, got {self.smote_k}")


@dataclass(frozen=True)
class SampleWeightVector:
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or not np.all(weights > 0):
            raise BalancingError("sample weights must be a 1-D vector of positives")
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.weights)


def _split_by_label(data: LabeledMatrix) -> tuple[np.ndarray, np.ndarray]:
    idx0 = np.flatnonzero(data.labels == 0)
    idx1 = np.flatnonzero(data.labels == 1)
    if len(idx0) == 0 or len(idx1) == 0:
        raise BalancingError("balancing needs at least one row of each label")
    return idx0, idx1


def undersample(data: LabeledMatrix, seed: int = 0) -> LabeledMatrix:
    """Subsample the majority class without replacement down to minority count."""
    idx0, idx1 = _split_by_label(data)
    minority, majority = (idx0, idx1) if len(idx0) <= len(idx1) else (idx1, idx0)
    rng = np.random.default_rng(seed)
    kept = rng.choice(majority, size=len(minority), replace=False)
    keep = np.sort(np.concatenate([minority, kept]))
    return LabeledMatrix(data.features[keep], data.labels[keep])


def oversample(data: LabeledMatrix, seed: int = 0) -> LabeledMatrix:
    """Resample the minority class with replacement up to majority count."""
    idx0, idx1 = _split_by_label(data)
    minority, majority = (idx0, idx1) if len(idx0) <= len(idx1) else (idx1, idx0)
    deficit = len(majority) - len(minority)
    if deficit == 0:
        return data
    rng = np.random.default_rng(seed)
    extra = rng.choice(minority, size=deficit, replace=True)
    order = np.concatenate([np.arange(len(data)), extra])
    return LabeledMatrix(data.features[order], data.labels[order])


def smote(data: LabeledMatrix, k: int = 5, seed: int = 0) -> LabeledMatrix:
    """Add synthetic minority rows x + lam * (x_nn - x) until labels balance.

    Neighbors are the k nearest minority rows under Euclidean distance on
    standardized features (per-feature mean/std of the full matrix); lam is
    uniform in [0, 1]. Distance ties break toward the lowest row index.
    """
    if not np.all(np.isfinite(data.features)):
        raise UnsupportedFeatureError("smote requires finite numeric features only")
    idx0, idx1 = _split_by_label(data)
    minority, majority = (idx0, idx1) if len(idx0) <= len(idx1) else (idx1, idx0)
    if len(minority) <= k:
        raise ParameterError(
            f"smote needs minority count > k; got {len(minority)} rows with k={k}"
        )
    deficit = len(majority) - len(minority)
    if deficit == 0:
        return data
    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    std[std == 0.0] = 1.0
    scaled = (data.features[minority] - mean) / std
    # pairwise distances among minority rows; argsort is stable, so equal
    # distances resolve to the lowest row index
    diff = scaled[:, None, :] - scaled[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    neighbor_idx = np.argsort(dist, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, len(minority), size=deficit)
    pick = rng.integers(0, k, size=deficit)
    lam = rng.uniform(0.0, 1.0, size=deficit)
    x = data.features[minority][base]
    x_nn = data.features[minority][neighbor_idx[base, pick]]
    synthetic = x + lam[:, None] * (x_nn - x)

    minority_label = data.labels[minority[0]]
    features = np.vstack([data.features, synthetic])
    labels = np.concatenate([data.labels, np.full(deficit, minority_label, dtype=int)])
    return LabeledMatrix(features, labels)


def cost_sensitive_weights(labels: np.ndarray) -> SampleWeightVector:
    """Balanced inverse-frequency weights: weight(c) = n / (2 * n_c)."""
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    n_pos = int(labels.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise BalancingError("cost-sensitive weights need both labels present")
    per_label = {0: n / (2.0 * n_neg), 1: n / (2.0 * n_pos)}
    return SampleWeightVector(np.array([per_label[int(y)] for y in labels]))


def apply_strategy(
    data: LabeledMatrix, strategy: BalancingStrategy
) -> tuple[LabeledMatrix, SampleWeightVector]:
    """Dispatch a balancing strategy; resampled outputs carry unit weights."""
    if strategy.tag == ORIGINAL:
        return data, SampleWeightVector(np.ones(len(data)))
    if strategy.tag == UNDERSAMPLING:
        out = undersample(data, strategy.seed)
        return out, SampleWeightVector(np.ones(len(out)))
    if strategy.tag == OVERSAMPLING:
        out = oversample(data, strategy.seed)
        return out, SampleWeightVector(np.ones(len(out)))
    if strategy.tag == SMOTE:
        out = smote(data, strategy.smote_k, strategy.seed)
        return out, SampleWeightVector(np.ones(len(out)))
    return data, cost_sensitive_weights(data.labels)
