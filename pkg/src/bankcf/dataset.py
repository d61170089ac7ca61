"""Ingestion, failure-lag labeling, predictor selection, and the temporal split.

The evaluation protocol needs three partitions: an in-sample/out-of-sample
holdout taken uniformly at random from the pre-boundary years, and an
out-of-time partition holding every later quarter. Failure labels are applied
with a lag window so that only the quarters shortly before a bank's closure
count as positive; post-mortem quarters are dropped to avoid leakage.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import LabelingError, RowParseError, SchemaError, SplitError
from .schema import (
    NUMERIC,
    BankQuarterRecord,
    DataTable,
    FeatureSpec,
    PredictorGroup,
    SplitBundle,
    make_table,
    quarter_end,
)

logger = logging.getLogger(__name__)

DEFAULT_BOUNDARY = dt.date(2014, 1, 1)
DEFAULT_LAG_DAYS = 365

META_COLUMNS = ("bank_id", "report_date", "failed_label")


def _parse_date(raw: str, line: int, column: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError as exc:
        raise RowParseError(f"line {line}: bad date in {column!r}: {raw!r}", line=line) from exc


def load_csv(path: str | Path, schema: Sequence[FeatureSpec]) -> DataTable:
    """Load bank-quarter rows from a UTF-8 CSV with an ISO-8601 date header.

    Required columns: bank_id, report_date, failed_label, plus one column per
    schema feature; failure_date is optional. Report dates are snapped to the
    calendar quarter end. Rows with missing numeric cells are dropped with a
    counted warning so downstream distances stay total.
    """
    path = Path(path)
    names = [spec.name for spec in schema]
    rows: list[BankQuarterRecord] = []
    dropped_missing = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in (*META_COLUMNS, *names):
            if column not in header:
                raise SchemaError(f"CSV {path.name} is missing column {column!r}")
        has_failure_date = "failure_date" in header
        for line, raw in enumerate(reader, start=2):
            report_date = quarter_end(_parse_date(raw["report_date"], line, "report_date"))
            label_raw = (raw["failed_label"] or "").strip()
            if label_raw not in ("0", "1"):
                raise RowParseError(
                    f"line {line}: failed_label must be 0/1, got {label_raw!r}", line=line
                )
            failure_date: Optional[dt.date] = None
            if has_failure_date and (raw.get("failure_date") or "").strip():
                failure_date = _parse_date(raw["failure_date"], line, "failure_date")
            indicators: dict[str, float] = {}
            missing = False
            for name in names:
                cell = (raw[name] or "").strip()
                if not cell:
                    missing = True
                    break
                try:
                    indicators[name] = float(cell)
                except ValueError as exc:
                    raise RowParseError(
                        f"line {line}: unparseable value for {name!r}: {cell!r}", line=line
                    ) from exc
            if missing:
                dropped_missing += 1
                continue
            rows.append(
                BankQuarterRecord(
                    bank_id=str(raw["bank_id"]).strip(),
                    report_date=report_date,
                    indicators=indicators,
                    failed_label=int(label_raw),
                    failure_date=failure_date,
                )
            )
    if dropped_missing:
        logger.warning("%s: dropped %d rows with missing numeric cells", path.name, dropped_missing)
    return make_table(schema, rows)


def label_with_failure_lag(table: DataTable, lag_days: int = DEFAULT_LAG_DAYS) -> DataTable:
    """Relabel rows from failure dates: positive inside (failure - lag, failure].

    Rows of failed banks dated after the failure are dropped (post-mortem
    financials would leak the outcome); every other row is labeled 0.
    Idempotent: the positive window depends only on failure_date.
    """
    failure_dates: dict[str, dt.date] = {}
    for row in table.rows:
        if row.failure_date is not None:
            failure_dates[row.bank_id] = row.failure_date
        elif row.failed_label == 1:
            raise LabelingError(f"bank {row.bank_id} labeled failed but has no failure_date")
    lag = dt.timedelta(days=lag_days)
    out: list[BankQuarterRecord] = []
    for row in table.rows:
        failure = failure_dates.get(row.bank_id)
        if failure is None:
            out.append(
                row if row.failed_label == 0 else
                BankQuarterRecord(row.bank_id, row.report_date, row.indicators, 0, None)
            )
            continue
        if row.report_date > failure:
            continue
        label = 1 if row.report_date > failure - lag else 0
        out.append(
            BankQuarterRecord(row.bank_id, row.report_date, row.indicators, label, failure)
        )
    return make_table(table.schema, out)


def select_predictors(table: DataTable, group: PredictorGroup) -> DataTable:
    """Project the table onto a predictor group's features, in group order."""
    available = {spec.name: spec for spec in table.schema}
    for name in group.features:
        if name not in available:
            raise SchemaError(f"predictor group {group.id}: feature {name!r} not in table")
    schema = tuple(available[name] for name in group.features)
    rows = tuple(
        BankQuarterRecord(
            row.bank_id,
            row.report_date,
            {name: row.indicators[name] for name in group.features},
            row.failed_label,
            row.failure_date,
        )
        for row in table.rows
    )
    return DataTable(schema, rows)


def split_temporal_holdout(
    table: DataTable,
    boundary: dt.date = DEFAULT_BOUNDARY,
    ratio: float = 0.8,
    seed: int = 0,
) -> SplitBundle:
    """Split into in-sample/out-of-sample (pre-boundary, by seeded shuffle) and
    out-of-time (boundary and later)."""
    if not 0 < ratio < 1:
        raise SplitError(f"holdout ratio must be in (0, 1), got {ratio}")
    pre = [row for row in table.rows if row.report_date < boundary]
    post = [row for row in table.rows if row.report_date >= boundary]
    if not pre or not post:
        raise SplitError(
            f"boundary {boundary} leaves {len(pre)} pre-boundary and "
            f"{len(post)} post-boundary rows; both sides must be non-empty"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pre))
    n_in = int(len(pre) * ratio)
    in_idx = sorted(order[:n_in].tolist())
    out_idx = sorted(order[n_in:].tolist())
    return SplitBundle(
        in_sample=make_table(table.schema, (pre[i] for i in in_idx)),
        out_of_sample=make_table(table.schema, (pre[i] for i in out_idx)),
        out_of_time=make_table(table.schema, post),
        boundary_date=boundary,
        holdout_ratio=ratio,
        seed=seed,
    )


@dataclass(frozen=True)
class RangeViolation:
    row_index: int
    bank_id: str
    feature: str
    value: float
    valid_range: tuple[float, float]


def validate_ranges(table: DataTable) -> list[RangeViolation]:
    """List every (row, feature, value) outside its closed validity interval."""
    violations: list[RangeViolation] = []
    for i, row in enumerate(table.rows):
        for spec in table.schema:
            if spec.kind != NUMERIC or spec.valid_range is None:
                continue
            value = row.indicators[spec.name]
            lo, hi = spec.valid_range
            if value < lo or value > hi:
                violations.append(RangeViolation(i, row.bank_id, spec.name, value, (lo, hi)))
    return violations


def desk_dataset_path() -> Path:
    """Path of the bundled desk-scale bank-quarter snapshot (Group II indicators)."""
    return Path(resources.files("bankcf.data") / "desk_bank_quarters.csv")
