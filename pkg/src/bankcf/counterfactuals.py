"""Counterfactual queries, objective scoring, and the WhatIf/NICE generators.

A counterfactual is a modified indicator vector whose predicted label flips
to the desired class. WhatIf returns the nearest observed unlike instances
under Gower distance; NICE walks feature values over from the HEOM-nearest
unlike neighbor one at a time, greedily maximizing the desired-class
probability, and records every prefix that already flips the prediction.
Both respect frozen features and report a reason instead of raising when no
counterfactual exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .distances import gower_distance, gower_matrix, heom_matrix, knn_mean_distance
from .errors import ParameterError, ShapeError
from .schema import DataTable, FeatureSpec
from .trees import EnsembleModel, predict_label, predict_label_matrix, predict_proba

WHATIF = "whatif"
NICE = "nice"
MOC = "moc"

CF_METHODS = (WHATIF, NICE, MOC)


@dataclass(frozen=True)
class CFQuery:
    factual: np.ndarray
    desired_class: int
    desired_proba_interval: tuple[float, float] = (0.5, 1.0)
    frozen_features: frozenset[str] = frozenset()
    max_counterfactuals: int = 5

    def __post_init__(self):
        object.__setattr__(self, "factual", np.asarray(self.factual, dtype=float))
        if self.desired_class not in (0, 1):
            raise ParameterError(f"desired_class must be 0/1, got {self.desired_class}")
        lo, hi = self.desired_proba_interval
        if not 0.0 <= lo <= hi <= 1.0:
            raise ParameterError(f"bad probability interval [{lo}, {hi}]")
        if self.max_counterfactuals < 1:
            raise ParameterError("max_counterfactuals must be >= 1")


@dataclass(frozen=True)
class ObjectiveVector:
    prediction_gap: float  # distance of desired-class probability to the target interval
    proximity: float  # Gower distance to the factual
    sparsity: int  # count of changed features
    implausibility: float  # mean Gower distance to the k nearest training rows

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.prediction_gap, self.proximity, float(self.sparsity), self.implausibility)


@dataclass(frozen=True)
class Counterfactual:
    values: np.ndarray
    method: str
    changed_features: frozenset[str]
    objectives: ObjectiveVector
    predicted_proba: float  # model probability of the failing class

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class CFResult:
    """Generator output: possibly-empty counterfactual list plus a reason when empty."""

    counterfactuals: tuple[Counterfactual, ...]
    reason: Optional[str] = None

    def __iter__(self) -> Iterator[Counterfactual]:
        return iter(self.counterfactuals)

    def __len__(self) -> int:
        return len(self.counterfactuals)

    def __getitem__(self, i: int) -> Counterfactual:
        return self.counterfactuals[i]


def desired_class_proba(model: EnsembleModel, query: CFQuery, x: np.ndarray) -> float:
    p = predict_proba(model, x)
    return p if query.desired_class == 1 else 1.0 - p


def interval_gap(p: float, interval: tuple[float, float]) -> float:
    lo, hi = interval
    return max(0.0, lo - p, p - hi)


def _check_query(query: CFQuery, model: EnsembleModel, specs: Sequence[FeatureSpec]) -> None:
    if len(query.factual) != len(specs):
        raise ShapeError(
            f"factual has {len(query.factual)} features, schema has {len(specs)}"
        )
    names = {spec.name for spec in specs}
    unknown = query.frozen_features - names
    if unknown:
        raise ParameterError(f"frozen features not in schema: {sorted(unknown)}")
    if predict_label(model, query.factual) == query.desired_class:
        raise ParameterError("factual already predicted as the desired class")


def _frozen_mask(query: CFQuery, specs: Sequence[FeatureSpec]) -> np.ndarray:
    frozen = set(query.frozen_features) | {s.name for s in specs if not s.mutable_in_cf}
    return np.array([spec.name in frozen for spec in specs], dtype=bool)


def changed_feature_names(values: np.ndarray, factual: np.ndarray,
                          specs: Sequence[FeatureSpec]) -> frozenset[str]:
    return frozenset(
        spec.name for j, spec in enumerate(specs) if values[j] != factual[j]
    )


def evaluate_objectives(
    candidate,
    query: CFQuery,
    model: EnsembleModel,
    training: DataTable,
    k: int = 10,
) -> ObjectiveVector:
    """Score one candidate on the four search objectives (all minimized)."""
    specs = training.schema
    candidate = np.asarray(candidate, dtype=float)
    if len(candidate) != len(specs):
        raise ShapeError(f"candidate has {len(candidate)} features, schema {len(specs)}")
    gap = interval_gap(
        desired_class_proba(model, query, candidate), query.desired_proba_interval
    )
    proximity = gower_distance(candidate, query.factual, specs)
    sparsity = int(np.sum(candidate != query.factual))
    implausibility = knn_mean_distance(candidate, training.matrix(), specs, k)
    return ObjectiveVector(gap, proximity, sparsity, implausibility)


def build_counterfactual(
    values: np.ndarray,
    method: str,
    query: CFQuery,
    model: EnsembleModel,
    training: DataTable,
    k: int = 10,
) -> Counterfactual:
    return Counterfactual(
        values=np.asarray(values, dtype=float),
        method=method,
        changed_features=changed_feature_names(values, query.factual, training.schema),
        objectives=evaluate_objectives(values, query, model, training, k),
        predicted_proba=predict_proba(model, values),
    )


def generate_whatif(
    query: CFQuery,
    model: EnsembleModel,
    reference: DataTable,
    k: int = 10,
) -> CFResult:
    """Nearest reference rows already predicted as the desired class, by Gower."""
    specs = reference.schema
    _check_query(query, model, specs)
    matrix = reference.matrix()
    if len(matrix) == 0:
        return CFResult((), reason="reference table is empty")
    predictions = predict_label_matrix(model, matrix)
    keep = predictions == query.desired_class
    frozen = _frozen_mask(query, specs)
    if frozen.any():
        keep &= np.all(matrix[:, frozen] == query.factual[frozen], axis=1)
    candidates = np.flatnonzero(keep)
    if len(candidates) == 0:
        return CFResult(
            (), reason="no reference row is predicted as the desired class "
                       "(after the frozen-feature filter)"
        )
    distances = gower_matrix(matrix[candidates], query.factual, specs)
    order = np.argsort(distances, kind="stable")[: query.max_counterfactuals]
    found = tuple(
        build_counterfactual(matrix[candidates[i]], WHATIF, query, model, reference, k)
        for i in order
    )
    return CFResult(found)


def nearest_unlike_neighbor(
    query: CFQuery, model: EnsembleModel, reference: DataTable
) -> Optional[np.ndarray]:
    """HEOM-nearest reference row predicted as the desired class; None if absent."""
    matrix = reference.matrix()
    if len(matrix) == 0:
        return None
    predictions = predict_label_matrix(model, matrix)
    candidates = np.flatnonzero(predictions == query.desired_class)
    if len(candidates) == 0:
        return None
    distances = heom_matrix(matrix[candidates], query.factual, reference.schema)
    return matrix[candidates[int(np.argmin(distances))]]


def generate_nice(
    query: CFQuery,
    model: EnsembleModel,
    reference: DataTable,
    k: int = 10,
) -> CFResult:
    """Greedy feature substitution from the nearest unlike neighbor.

    Copies one NUN feature value per step, picking the substitution that
    maximizes the desired-class probability; every intermediate vector whose
    prediction already flips is recorded, so one run can yield several
    alternatives of increasing sparsity.
    """
    specs = reference.schema
    _check_query(query, model, specs)
    nun = nearest_unlike_neighbor(query, model, reference)
    if nun is None:
        return CFResult((), reason="no reference row is predicted as the desired class")
    frozen = _frozen_mask(query, specs)
    differing = np.flatnonzero(nun != query.factual)
    substitutable = [j for j in differing if not frozen[j]]
    if not substitutable:
        reason = (
            "nearest unlike neighbor differs only on frozen features"
            if len(differing) else "nearest unlike neighbor equals the factual"
        )
        return CFResult((), reason=reason)

    current = query.factual.copy()
    remaining = list(substitutable)
    flipped: list[np.ndarray] = []
    while remaining:
        best_j = None
        best_p = -1.0
        for j in remaining:  # ascending feature index breaks probability ties
            trial = current.copy()
            trial[j] = nun[j]
            p = desired_class_proba(model, query, trial)
            if p > best_p:
                best_p = p
                best_j = j
        current[best_j] = nun[best_j]
        remaining.remove(best_j)
        if predict_label(model, current) == query.desired_class:
            flipped.append(current.copy())
    if not flipped:
        hint = " (frozen features blocked the remaining substitutions)" if frozen.any() else ""
        return CFResult((), reason="greedy substitution never flipped the prediction" + hint)

    found = [
        build_counterfactual(vec, NICE, query, model, reference, k) for vec in flipped
    ]
    found.sort(key=lambda cf: (cf.objectives.sparsity, cf.objectives.proximity))
    return CFResult(tuple(found[: query.max_counterfactuals]))
