"""Command-line entry points: train, benchmark, explain, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import resolve_config
from .errors import BankcfError, ConfigError
from .pipeline import explain_record, run_benchmark, run_train
from .reporting import render_explanation_text, write_json

EXIT_NO_COUNTERFACTUAL = 3


def _resolve(config_path, **overrides):
    try:
        return resolve_config(config_path, overrides)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


@click.group()
def main():
    """Bank failure prediction and counterfactual explanation toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_csv", type=click.Path(exists=True), default=None,
              help="Bank-quarter CSV (defaults to the bundled desk dataset).")
@click.option("--group", "predictor_group", default=None, help="Predictor group: I, II, III.")
@click.option("--model", "model_kind", default=None,
              help="decision_tree | random_forest | extra_trees.")
@click.option("--strategy", default=None,
              help="original | undersampling | oversampling | smote | cost_sensitive.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def train(config_path, **overrides):
    """Train one model and report accuracy/F1 out-of-sample and out-of-time."""
    config = _resolve(config_path, **overrides)
    try:
        bundle = run_train(config)
    except BankcfError as exc:
        raise click.ClickException(f"training failed: {exc}") from exc
    for partition, doc in bundle.classification.items():
        click.echo(
            f"{partition}: accuracy={doc['accuracy']:.6f} f1={doc['f1']:.6f}"
        )
    click.echo(f"artifacts written to {config.out_dir} (config {bundle.config_hash})")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_csv", type=click.Path(exists=True), default=None)
@click.option("--group", "predictor_group", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--cap", "benchmark_cap", type=int, default=None,
              help="Factual instances explained per grid cell.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
def benchmark(config_path, **overrides):
    """Counterfactual-quality grid over model kinds, strategies, and methods."""
    config = _resolve(config_path, **overrides)
    try:
        bundle = run_benchmark(config)
    except BankcfError as exc:
        raise click.ClickException(f"benchmark failed: {exc}") from exc
    grid = bundle.grid
    click.echo(
        f"grid cells: {len(grid.cells)} populated, {len(grid.empty)} empty with reason"
    )
    click.echo(f"artifacts written to {config.out_dir} (config {bundle.config_hash})")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True,
              help="Model JSON written by `train`.")
@click.option("--record", "record_path", type=click.Path(exists=True), required=True,
              help="JSON file mapping indicator names to values.")
@click.option("--method", default="nice", help="whatif | nice | moc.")
@click.option("--freeze", multiple=True, help="Feature that must not change (repeatable).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_csv", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def explain(model_path, record_path, method, freeze, config_path, **overrides):
    """Explain one bank record: prediction plus counterfactual directions."""
    config = _resolve(config_path, methods=(method,), **overrides)
    try:
        record = json.loads(Path(record_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read record: {exc}") from exc
    try:
        doc = explain_record(model_path, record, method, config, frozen=freeze)
    except BankcfError as exc:
        raise click.ClickException(f"explanation failed: {exc}") from exc
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "explanation.json", doc)
    click.echo(render_explanation_text(doc), nl=False)
    if doc["status"] == "no_counterfactual":
        sys.exit(EXIT_NO_COUNTERFACTUAL)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--models-dir", type=click.Path(exists=True), required=True,
              help="Directory of model JSON files to serve.")
@click.option("--data", "data_csv", type=click.Path(exists=True), default=None)
@click.option("--host", "service_host", default=None)
@click.option("--port", "service_port", type=int, default=None)
@click.option("--seed", type=int, default=None)
def serve(config_path, models_dir, **overrides):
    """Serve predictions and counterfactuals over HTTP."""
    import uvicorn

    from .service import build_app

    config = _resolve(config_path, **overrides)
    app = build_app(models_dir, config)
    uvicorn.run(app, host=config.service_host, port=config.service_port)


if __name__ == "__main__":
    main()
