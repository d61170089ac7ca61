"""End-to-end orchestration: train, benchmark grid, single-bank explanation.

The flow is ingest -> lag label -> predictor select -> temporal split ->
balance (training partition only; evaluation partitions are never resampled)
-> fit -> evaluate/explain. Observed feature ranges are frozen on the
training partition and travel with the model, so distances are identical at
train, benchmark, and serve time. Per-cell seeds derive from the run seed
plus the cell coordinates, which keeps the whole grid reproducible.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from .balancing import BalancingStrategy, LabeledMatrix, STRATEGY_TAGS, apply_strategy
from .config import RunConfig, config_hash, semantic_snapshot
from .counterfactuals import (
    CF_METHODS,
    CFQuery,
    CFResult,
    MOC,
    NICE,
    WHATIF,
    generate_nice,
    generate_whatif,
)
from .dataset import (
    desk_dataset_path,
    label_with_failure_lag,
    load_csv,
    select_predictors,
    split_temporal_holdout,
)
from .errors import ConfigError
from .evaluation import (
    DesiderataConfig,
    aggregate_benchmark,
    classification_report,
    desiderata,
)
from .moc import MocConfig, generate_moc
from .reporting import (
    ReportBundle,
    classification_to_doc,
    counterfactual_entry,
    explanation_document,
    emit_report,
)
from .schema import DataTable, PREDICTOR_GROUPS, SplitBundle
from .trees import (
    EnsembleModel,
    MODEL_KINDS,
    TrainConfig,
    fit_decision_tree,
    fit_extra_trees,
    fit_random_forest,
    load_model,
    predict_label,
    predict_label_matrix,
    predict_proba,
    save_model,
)

logger = logging.getLogger(__name__)

_FITTERS = {
    "decision_tree": fit_decision_tree,
    "random_forest": fit_random_forest,
    "extra_trees": fit_extra_trees,
}


def _config_snapshot(config: RunConfig) -> dict:
    return semantic_snapshot(config)


def prepare_split(config: RunConfig) -> SplitBundle:
    """Ingest, lag-label, select predictors, and split; in_sample carries the
    frozen observed ranges."""
    path = Path(config.data_csv) if config.data_csv else desk_dataset_path()
    group = PREDICTOR_GROUPS[config.predictor_group]
    table = load_csv(path, [spec for spec in _group_schema(config)])
    table = label_with_failure_lag(table, config.lag_days)
    table = select_predictors(table, group)
    split = split_temporal_holdout(table, config.boundary, config.holdout_ratio, config.seed)
    in_sample = split.in_sample.with_observed_ranges()
    # evaluation partitions reuse the fit-time specs so distances agree
    return SplitBundle(
        in_sample=in_sample,
        out_of_sample=DataTable(in_sample.schema, split.out_of_sample.rows),
        out_of_time=DataTable(in_sample.schema, split.out_of_time.rows),
        boundary_date=split.boundary_date,
        holdout_ratio=split.holdout_ratio,
        seed=split.seed,
    )


def _group_schema(config: RunConfig):
    from .schema import specs_for_group

    return specs_for_group(config.predictor_group)


def fit_one(
    kind: str,
    strategy_tag: str,
    in_sample: DataTable,
    seed: int,
    config: RunConfig,
) -> EnsembleModel:
    """Balance the training partition and fit one model kind."""
    data = LabeledMatrix(in_sample.matrix(), in_sample.labels())
    strategy = BalancingStrategy(strategy_tag, seed=seed)
    balanced, weights = apply_strategy(data, strategy)
    train_config = TrainConfig(
        n_trees=config.n_trees, max_depth=config.max_depth, seed=seed
    )
    fitter = _FITTERS[kind]
    return fitter(balanced, weights, train_config, feature_names=in_sample.feature_names)


def run_train(config: RunConfig, write: bool = True) -> ReportBundle:
    """Train one (kind, strategy) model and report accuracy/F1 on the held-out
    and out-of-time partitions; writes the model JSON next to the report."""
    split = prepare_split(config)
    model = fit_one(config.model_kind, config.strategy, split.in_sample, config.seed, config)
    bundle = ReportBundle(
        config_hash=config_hash(config),
        config_snapshot=_config_snapshot(config),
        classification={
            "out_of_sample": classification_to_doc(
                classification_report(model, split.out_of_sample)
            ),
            "out_of_time": classification_to_doc(
                classification_report(model, split.out_of_time)
            ),
        },
    )
    if write:
        out = Path(config.out_dir)
        written: list[Path] = []
        try:
            out.mkdir(parents=True, exist_ok=True)
            written = emit_report(bundle, out)
            model_path = out / f"model_{config.model_kind}_{config.strategy}.json"
            save_model(model, split.in_sample.schema, model_path)
            written.append(model_path)
        except BaseException:
            for path in written:
                path.unlink(missing_ok=True)
            raise
    return bundle


def _cell_seed(seed: int, kind_i: int, strat_i: int, extra: int = 0) -> int:
    # deterministic, collision-free within the grid's coordinate ranges
    return ((seed * 31 + kind_i) * 31 + strat_i) * 1009 + extra


def generate_for_method(
    method: str,
    query: CFQuery,
    model: EnsembleModel,
    reference: DataTable,
    config: RunConfig,
    seed: int,
) -> CFResult:
    if method == WHATIF:
        return generate_whatif(query, model, reference, k=config.k_plaus)
    if method == NICE:
        return generate_nice(query, model, reference, k=config.k_plaus)
    if method == MOC:
        return generate_moc(
            query, model, reference,
            MocConfig(
                population_size=config.moc_population,
                generations=config.moc_generations,
                k_plausibility=config.k_plaus,
                seed=seed,
            ),
        )
    raise ConfigError(f"unknown counterfactual method {method!r}")


def run_benchmark(config: RunConfig, write: bool = True) -> ReportBundle:
    """Counterfactual-quality grid over model kinds x strategies x methods.

    Each cell explains up to `benchmark_cap` out-of-sample banks predicted as
    failing, scores every returned counterfactual on the desiderata, and
    aggregates mean/std. Cells that cannot produce counterfactuals stay in
    the grid with a reason.
    """
    split = prepare_split(config)
    in_sample = split.in_sample
    desiderata_config = DesiderataConfig(
        epsilon=config.epsilon, k_plaus=config.k_plaus, distance=config.distance
    )
    oos_matrix = split.out_of_sample.matrix()

    records = []
    empty: dict[tuple[str, str, str], str] = {}
    expected = [
        (kind, strategy, method)
        for kind in MODEL_KINDS
        for strategy in STRATEGY_TAGS
        for method in CF_METHODS
    ]
    for kind_i, kind in enumerate(MODEL_KINDS):
        for strat_i, strategy in enumerate(STRATEGY_TAGS):
            seed = _cell_seed(config.seed, kind_i, strat_i)
            model = fit_one(kind, strategy, in_sample, seed, config)
            predicted = predict_label_matrix(model, oos_matrix)
            failing = np.flatnonzero(predicted == 1)[: config.benchmark_cap]
            if len(failing) == 0:
                for method in CF_METHODS:
                    empty[(kind, strategy, method)] = (
                        "no out-of-sample bank is predicted as failing"
                    )
                continue
            for method in CF_METHODS:
                cell = (kind, strategy, method)
                n_found = 0
                reasons: list[str] = []
                for fi, row_index in enumerate(failing):
                    query = CFQuery(
                        factual=oos_matrix[row_index],
                        desired_class=0,
                        max_counterfactuals=config.max_counterfactuals,
                    )
                    result = generate_for_method(
                        method, query, model, in_sample, config,
                        seed=_cell_seed(config.seed, kind_i, strat_i, fi + 1),
                    )
                    if result.reason:
                        reasons.append(result.reason)
                    for cf in result:
                        record = desiderata(
                            query.factual, cf, model, in_sample, desiderata_config
                        )
                        records.append((cell, record))
                        n_found += 1
                if n_found == 0:
                    empty[cell] = "; ".join(sorted(set(reasons))) or "no counterfactual found"
    grid = aggregate_benchmark(
        records,
        empty_reasons=empty,
        expected_cells=expected,
        provenance={"seed": config.seed, "config_hash": config_hash(config),
                    "factual_cap": config.benchmark_cap},
    )
    bundle = ReportBundle(
        config_hash=config_hash(config),
        config_snapshot=_config_snapshot(config),
        grid=grid,
    )
    if write:
        emit_report(bundle, config.out_dir, formats=("csv", "json", "plotdata"))
    return bundle


def explain_record(
    model_path: str | Path,
    indicators: dict[str, float],
    method: str,
    config: RunConfig,
    frozen: Sequence[str] = (),
) -> dict:
    """Explanation document for one bank record against a saved model."""
    model, schema = load_model(model_path)
    names = [spec.name for spec in schema]
    missing = [n for n in names if n not in indicators]
    if missing:
        raise ConfigError(f"record is missing indicators: {missing}")
    factual = np.array([float(indicators[n]) for n in names])
    probability = predict_proba(model, factual)
    label = predict_label(model, factual)
    chash = config_hash(config)
    if label == 0:
        return explanation_document(
            status="no_action_needed", factual=factual, specs=schema,
            probability=probability, label=label, method=method, config_hash=chash,
        )

    reference = _reference_table(config, schema)
    query = CFQuery(
        factual=factual,
        desired_class=0,
        frozen_features=frozenset(frozen),
        max_counterfactuals=config.max_counterfactuals,
    )
    result = generate_for_method(method, query, model, reference, config, seed=config.seed)
    if len(result) == 0:
        return explanation_document(
            status="no_counterfactual", factual=factual, specs=schema,
            probability=probability, label=label, method=method,
            reason=result.reason or "no counterfactual found", config_hash=chash,
        )
    desiderata_config = DesiderataConfig(
        epsilon=config.epsilon, k_plaus=config.k_plaus, distance=config.distance
    )
    entries = [
        counterfactual_entry(
            cf, factual, schema,
            desiderata(factual, cf, model, reference, desiderata_config),
        )
        for cf in result
    ]
    return explanation_document(
        status="ok", factual=factual, specs=schema, probability=probability,
        label=label, method=method, entries=entries, config_hash=chash,
    )


def _reference_table(config: RunConfig, schema) -> DataTable:
    """Labeled real rows, projected to the model's features, carrying the
    model's fit-time observed ranges."""
    path = Path(config.data_csv) if config.data_csv else desk_dataset_path()
    names = [spec.name for spec in schema]
    from .schema import FeatureSpec, INDICATOR_RANGES

    load_schema = [
        FeatureSpec(n, valid_range=INDICATOR_RANGES.get(n)) for n in names
    ]
    table = label_with_failure_lag(load_csv(path, load_schema), config.lag_days)
    return DataTable(tuple(schema), table.rows)
