"""Classification metrics and counterfactual desiderata scoring.

Validity is kept in two flavors side by side: the conventional check that the
prediction actually flipped, and the threshold form 1{d(x, x') <= eps} that
only looks at the distance. Figure-style grids report flip validity as the
`validity` metric and carry the threshold variant alongside. Aggregation uses
the population standard deviation since a cell summarizes its full run set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .counterfactuals import Counterfactual
from .distances import gower_distance, heom_distance, knn_mean_distance
from .errors import ParameterError, ShapeError
from .schema import DataTable
from .trees import EnsembleModel, predict_label, predict_label_matrix

GOWER = "gower"
HEOM = "heom"

DESIDERATA_METRICS = ("validity", "proximity", "sparsity", "plausibility")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float


def classification_report(model: EnsembleModel, table: DataTable) -> ClassificationReport:
    """Accuracy and F1 of the model's label predictions over the table."""
    if len(table) == 0:
        raise ShapeError("cannot evaluate on an empty table")
    if table.feature_names != model.feature_names:
        raise ShapeError(
            f"table features {table.feature_names} != model {model.feature_names}"
        )
    predicted = predict_label_matrix(model, table.matrix())
    actual = table.labels()
    tp = int(np.sum((predicted == 1) & (actual == 1)))
    fp = int(np.sum((predicted == 1) & (actual == 0)))
    tn = int(np.sum((predicted == 0) & (actual == 0)))
    fn = int(np.sum((predicted == 0) & (actual == 1)))
    confusion = ConfusionMatrix(tp, fp, tn, fn)
    accuracy = (tp + tn) / confusion.total
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if tp else 0.0
    return ClassificationReport(confusion, accuracy, precision, recall, f1)


@dataclass(frozen=True)
class DesiderataConfig:
    epsilon: float = 0.5  # threshold-validity cutoff, in distance units
    k_plaus: int = 10
    distance: str = GOWER

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")
        if self.k_plaus < 1:
            raise ParameterError("k_plaus must be >= 1")
        if self.distance not in (GOWER, HEOM):
            raise ParameterError(f"unknown distance {self.distance!r}")


@dataclass(frozen=True)
class DesiderataRecord:
    valid_flip: bool
    valid_threshold: bool
    proximity: float
    sparsity: int
    plausibility: float


def desiderata(
    factual,
    cf: Counterfactual,
    model: EnsembleModel,
    training: DataTable,
    config: DesiderataConfig = DesiderataConfig(),
) -> DesiderataRecord:
    """Score one counterfactual against its factual on the four desiderata."""
    specs = training.schema
    factual = np.asarray(factual, dtype=float)
    if len(factual) != len(specs) or len(cf.values) != len(specs):
        raise ShapeError("factual/counterfactual arity does not match the schema")
    desired = 1 - predict_label(model, factual)
    dist_fn = gower_distance if config.distance == GOWER else heom_distance
    proximity = dist_fn(factual, cf.values, specs)
    return DesiderataRecord(
        valid_flip=predict_label(model, cf.values) == desired,
        valid_threshold=proximity <= config.epsilon,
        proximity=proximity,
        sparsity=int(np.sum(cf.values != factual)),
        plausibility=knn_mean_distance(
            cf.values, training.matrix(), specs, config.k_plaus, metric=config.distance
        ),
    )


CellKey = tuple[str, str, str]  # (model kind, balancing strategy, CF method)


@dataclass(frozen=True)
class CellStat:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class BenchmarkGrid:
    cells: dict[CellKey, dict[str, CellStat]]
    empty: dict[CellKey, str]  # reason per cell with zero counterfactuals
    provenance: dict

    def all_keys(self) -> list[CellKey]:
        return sorted(set(self.cells) | set(self.empty))


def _stat(values: Sequence[float]) -> CellStat:
    arr = np.asarray(values, dtype=float)
    return CellStat(float(arr.mean()), float(arr.std()), len(arr))


def aggregate_benchmark(
    runs: Sequence[tuple[CellKey, DesiderataRecord]],
    empty_reasons: Optional[dict[CellKey, str]] = None,
    expected_cells: Optional[Sequence[CellKey]] = None,
    provenance: Optional[dict] = None,
) -> BenchmarkGrid:
    """Mean/population-std per cell for the four desiderata (plus the
    threshold-validity variant); cells without records are kept with a reason."""
    by_cell: dict[CellKey, list[DesiderataRecord]] = {}
    for key, record in runs:
        by_cell.setdefault(key, []).append(record)

    cells: dict[CellKey, dict[str, CellStat]] = {}
    for key, records in by_cell.items():
        cells[key] = {
            "validity": _stat([1.0 if r.valid_flip else 0.0 for r in records]),
            "validity_threshold": _stat([1.0 if r.valid_threshold else 0.0 for r in records]),
            "proximity": _stat([r.proximity for r in records]),
            "sparsity": _stat([float(r.sparsity) for r in records]),
            "plausibility": _stat([r.plausibility for r in records]),
        }

    empty: dict[CellKey, str] = dict(empty_reasons or {})
    for key in expected_cells or ():
        if key not in cells and key not in empty:
            empty[key] = "no desiderata records produced"
    empty = {key: reason for key, reason in empty.items() if key not in cells}
    return BenchmarkGrid(cells=cells, empty=empty, provenance=provenance or {})
