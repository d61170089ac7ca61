import datetime as dt

import numpy as np
import pytest

from bankcf.balancing import LabeledMatrix, SampleWeightVector
from bankcf.dataset import (
    desk_dataset_path,
    label_with_failure_lag,
    load_csv,
    select_predictors,
    split_temporal_holdout,
)
from bankcf.schema import (
    BankQuarterRecord,
    DataTable,
    FeatureSpec,
    PREDICTOR_GROUPS,
    specs_for_group,
)
from bankcf.trees import TrainConfig, fit_random_forest


@pytest.fixture(scope="session")
def desk_table():
    table = load_csv(desk_dataset_path(), specs_for_group("II"))
    table = label_with_failure_lag(table)
    return select_predictors(table, PREDICTOR_GROUPS["II"])


@pytest.fixture(scope="session")
def desk_split(desk_table):
    split = split_temporal_holdout(desk_table, dt.date(2014, 1, 1), 0.8, seed=1)
    in_sample = split.in_sample.with_observed_ranges()
    return split, in_sample


def make_toy_table(n=400, seed=7, d=4, shift=2.4, pos_rate=0.1):
    """Two overlapping gaussian blobs as bank-quarter rows (labels in rows)."""
    rng = np.random.default_rng(seed)
    n_pos = int(n * pos_rate)
    X = np.vstack([
        rng.normal(0.0, 1.0, (n - n_pos, d)),
        rng.normal(shift, 1.0, (n_pos, d)),
    ])
    y = np.concatenate([np.zeros(n - n_pos, int), np.ones(n_pos, int)])
    specs = tuple(
        FeatureSpec(f"F{j}", observed_range=(float(X[:, j].min()), float(X[:, j].max())))
        for j in range(d)
    )
    base = dt.date(2010, 3, 31)
    rows = tuple(
        BankQuarterRecord(
            bank_id=f"b{i:04d}",
            report_date=base + dt.timedelta(days=91 * (i % 16)),
            indicators={f"F{j}": float(X[i, j]) for j in range(d)},
            failed_label=int(y[i]),
            failure_date=(base + dt.timedelta(days=91 * (i % 16))) if y[i] else None,
        )
        for i in range(n)
    )
    return DataTable(specs, rows), X, y


@pytest.fixture(scope="session")
def toy():
    return make_toy_table()


@pytest.fixture(scope="session")
def toy_model(toy):
    table, X, y = toy
    model = fit_random_forest(
        LabeledMatrix(X, y),
        SampleWeightVector(np.ones(len(y))),
        TrainConfig(seed=3, n_trees=40),
        feature_names=table.feature_names,
    )
    return model
