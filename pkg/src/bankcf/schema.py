"""Feature schema, predictor groups, and the bank-quarter data table.

Tables are immutable after construction: every mutator-looking operation in
`bankcf.dataset` returns a new table. Numeric ranges live in two places on a
FeatureSpec: `valid_range` is the a-priori validity interval used by range
validation, `observed_range` is the (min, max) actually seen at fit time and
feeds the distance denominators.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DuplicateRowError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str = NUMERIC
    valid_range: Optional[tuple[float, float]] = None
    observed_range: Optional[tuple[float, float]] = None
    mutable_in_cf: bool = True

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.valid_range is not None and self.valid_range[0] > self.valid_range[1]:
            raise SchemaError(f"valid_range for {self.name!r} has lower > upper")
        if self.observed_range is not None and self.observed_range[0] > self.observed_range[1]:
            raise SchemaError(f"observed_range for {self.name!r} has lower > upper")

    def with_observed_range(self, lo: float, hi: float) -> "FeatureSpec":
        return replace(self, observed_range=(float(lo), float(hi)))


@dataclass(frozen=True)
class PredictorGroup:
    id: str
    features: tuple[str, ...]


# Financial-ratio indicators and their validity ranges. Units are ratios or
# percentages as reported by the FDIC call-report fields of the same name.
INDICATOR_RANGES: dict[str, tuple[float, float]] = {
    "TICRC": (-0.01, 0.19),
    "PLLL": (-3.0, 10.0),
    "TIE": (0.0, 2.2),
    "EQR": (-20.0, 100.0),
    "NIMY": (-4.0, 26.0),
    "INTEXPYQ": (-0.5, 5.5),
    "RBCIAAJ": (-20.0, 200.0),
    "ROE": (-12000.0, 1000.0),
    "NIMYQ": (-4.0, 26.0),
    "LNATRESR": (0.0, 26.0),
    "NONIXAYQ": (-20.0, 300.0),
    "ROAQ": (-100.0, 350.0),
}

PREDICTOR_GROUPS: dict[str, PredictorGroup] = {
    "I": PredictorGroup("I", ("TICRC", "PLLL", "TIE", "EQR")),
    "II": PredictorGroup("II", ("TICRC", "NIMY", "INTEXPYQ", "RBCIAAJ", "ROE")),
    "III": PredictorGroup("III", ("NIMYQ", "LNATRESR", "NONIXAYQ", "ROAQ")),
}


def specs_for_group(group_id: str) -> list[FeatureSpec]:
    """Build FeatureSpecs (with validity ranges) for a named predictor group."""
    if group_id not in PREDICTOR_GROUPS:
        raise SchemaError(f"unknown predictor group {group_id!r}")
    group = PREDICTOR_GROUPS[group_id]
    return [FeatureSpec(name, NUMERIC, INDICATOR_RANGES[name]) for name in group.features]


@dataclass(frozen=True)
class BankQuarterRecord:
    """One bank-quarter observation.

    Raw snapshots may carry failed rows without a failure date or rows dated
    after the failure; `label_with_failure_lag` is the operation that raises
    on the former and drops the latter, establishing the labeling invariants.
    """

    bank_id: str
    report_date: dt.date
    indicators: dict[str, float]
    failed_label: int = 0
    failure_date: Optional[dt.date] = None

    def __post_init__(self):
        if self.failed_label not in (0, 1):
            raise SchemaError(f"failed_label must be 0/1, got {self.failed_label!r}")


@dataclass(frozen=True)
class DataTable:
    schema: tuple[FeatureSpec, ...]
    rows: tuple[BankQuarterRecord, ...]

    def __post_init__(self):
        names = self.feature_names
        seen: set[tuple[str, dt.date]] = set()
        for row in self.rows:
            if set(row.indicators) != set(names):
                raise SchemaError(
                    f"bank {row.bank_id} {row.report_date}: indicator keys "
                    f"{sorted(row.indicators)} != schema {sorted(names)}"
                )
            key = (row.bank_id, row.report_date)
            if key in seen:
                raise DuplicateRowError(f"duplicate (bank_id, report_date) {key}")
            seen.add(key)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.schema)

    def __len__(self) -> int:
        return len(self.rows)

    def matrix(self) -> np.ndarray:
        """Row-major feature matrix in schema order."""
        names = self.feature_names
        return np.array(
            [[row.indicators[n] for n in names] for row in self.rows], dtype=float
        ).reshape(len(self.rows), len(names))

    def labels(self) -> np.ndarray:
        return np.array([row.failed_label for row in self.rows], dtype=int)

    def keys(self) -> set[tuple[str, dt.date]]:
        return {(r.bank_id, r.report_date) for r in self.rows}

    def with_observed_ranges(self) -> "DataTable":
        """Freeze each numeric feature's observed (min, max) from this table's rows."""
        if not self.rows:
            return self
        mat = self.matrix()
        schema = []
        for j, spec in enumerate(self.schema):
            if spec.kind == NUMERIC:
                schema.append(spec.with_observed_range(mat[:, j].min(), mat[:, j].max()))
            else:
                schema.append(spec)
        return DataTable(tuple(schema), self.rows)


@dataclass(frozen=True)
class SplitBundle:
    in_sample: DataTable
    out_of_sample: DataTable
    out_of_time: DataTable
    boundary_date: dt.date
    holdout_ratio: float
    seed: int


def quarter_end(date: dt.date) -> dt.date:
    """Snap a date to its calendar quarter end (FDIC reporting cadence)."""
    q_month = ((date.month - 1) // 3 + 1) * 3
    last_day = {3: 31, 6: 30, 9: 30, 12: 31}[q_month]
    return dt.date(date.year, q_month, last_day)


def make_table(schema: Sequence[FeatureSpec], rows: Iterable[BankQuarterRecord]) -> DataTable:
    return DataTable(tuple(schema), tuple(rows))
