"""Bit-stable report emission: grid CSV/JSON, plot data, explanation documents.

Every writer sorts keys and formats floats to six decimal places, so a rerun
with the same seeds produces byte-identical files. Explanation documents
mirror the analyst-facing presentation: per-feature direction markers
(increase / decrease / unchanged) with old and new values plus desiderata.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .counterfactuals import Counterfactual
from .errors import ReportError
from .evaluation import BenchmarkGrid, ClassificationReport, DesiderataRecord, DESIDERATA_METRICS
from .schema import FeatureSpec

UP = "up"
DOWN = "down"
UNCHANGED = "unchanged"

ARROWS = {UP: "↑", DOWN: "↓", UNCHANGED: "="}


def fmt6(x: float) -> str:
    return f"{x:.6f}"


def round6(x: float) -> float:
    return float(f"{x:.6f}")


def write_json(path: Path, document: dict) -> None:
    path.write_text(
        json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def classification_to_doc(report: ClassificationReport) -> dict:
    c = report.confusion
    return {
        "confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
        "accuracy": round6(report.accuracy),
        "precision": round6(report.precision),
        "recall": round6(report.recall),
        "f1": round6(report.f1),
    }


def grid_csv_text(grid: BenchmarkGrid) -> str:
    """Long-format CSV: one row per (cell, desideratum); empty cells keep their
    four metric rows with blank mean/std and the reason."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "strategy", "method", "metric", "mean", "std", "n", "reason"])
    for key in grid.all_keys():
        model, strategy, method = key
        if key in grid.cells:
            stats = grid.cells[key]
            for metric in DESIDERATA_METRICS:
                stat = stats[metric]
                writer.writerow(
                    [model, strategy, method, metric, fmt6(stat.mean), fmt6(stat.std),
                     stat.n, ""]
                )
        else:
            for metric in DESIDERATA_METRICS:
                writer.writerow(
                    [model, strategy, method, metric, "", "", 0, grid.empty[key]]
                )
    return buf.getvalue()


def grid_json_doc(grid: BenchmarkGrid) -> dict:
    cells = []
    for key in grid.all_keys():
        model, strategy, method = key
        entry: dict = {"model": model, "strategy": strategy, "method": method}
        if key in grid.cells:
            entry["metrics"] = {
                metric: {"mean": round6(stat.mean), "std": round6(stat.std), "n": stat.n}
                for metric, stat in sorted(grid.cells[key].items())
            }
        else:
            entry["reason"] = grid.empty[key]
        cells.append(entry)
    return {"cells": cells, "provenance": grid.provenance}


def plotdata_doc(grid: BenchmarkGrid) -> dict:
    """Per-metric mean/std series keyed by cell label, ready for error bars."""
    series: dict = {}
    for metric in DESIDERATA_METRICS:
        labels, means, stds = [], [], []
        for key in grid.all_keys():
            if key not in grid.cells:
                continue
            stat = grid.cells[key][metric]
            labels.append("/".join(key))
            means.append(round6(stat.mean))
            stds.append(round6(stat.std))
        series[metric] = {"labels": labels, "mean": means, "std": stds}
    return {"metrics": list(DESIDERATA_METRICS), "series": series,
            "provenance": grid.provenance}


def feature_deltas(
    factual: np.ndarray, values: np.ndarray, specs: Sequence[FeatureSpec]
) -> dict[str, dict]:
    deltas = {}
    for j, spec in enumerate(specs):
        old = float(factual[j])
        new = float(values[j])
        if new > old:
            direction = UP
        elif new < old:
            direction = DOWN
        else:
            direction = UNCHANGED
        deltas[spec.name] = {"direction": direction, "old": round6(old), "new": round6(new)}
    return deltas


def desiderata_to_doc(record: DesiderataRecord) -> dict:
    return {
        "valid_flip": record.valid_flip,
        "valid_threshold": record.valid_threshold,
        "proximity": round6(record.proximity),
        "sparsity": record.sparsity,
        "plausibility": round6(record.plausibility),
    }


def counterfactual_entry(
    cf: Counterfactual,
    factual: np.ndarray,
    specs: Sequence[FeatureSpec],
    record: Optional[DesiderataRecord] = None,
) -> dict:
    entry = {
        "method": cf.method,
        "values": {spec.name: round6(float(cf.values[j])) for j, spec in enumerate(specs)},
        "deltas": feature_deltas(factual, cf.values, specs),
        "changed_features": sorted(cf.changed_features),
        "predicted_probability": round6(cf.predicted_proba),
    }
    if record is not None:
        entry["desiderata"] = desiderata_to_doc(record)
    return entry


def explanation_document(
    *,
    status: str,
    factual: np.ndarray,
    specs: Sequence[FeatureSpec],
    probability: float,
    label: int,
    method: Optional[str] = None,
    entries: Sequence[dict] = (),
    reason: Optional[str] = None,
    config_hash: Optional[str] = None,
) -> dict:
    doc = {
        "status": status,  # ok | no_action_needed | no_counterfactual
        "factual": {spec.name: round6(float(factual[j])) for j, spec in enumerate(specs)},
        "prediction": {"probability": round6(probability), "label": label},
        "counterfactuals": list(entries),
    }
    if method is not None:
        doc["method"] = method
    if reason is not None:
        doc["reason"] = reason
    if config_hash is not None:
        doc["config_hash"] = config_hash
    return doc


def render_explanation_text(doc: dict) -> str:
    """Human-readable rendering with arrow markers per changed feature."""
    lines = []
    pred = doc["prediction"]
    lines.append(f"prediction: label={pred['label']} probability={fmt6(pred['probability'])}")
    if doc["status"] == "no_action_needed":
        lines.append("no action needed: bank is not predicted to fail")
        return "\n".join(lines) + "\n"
    if doc["status"] == "no_counterfactual":
        lines.append(f"no counterfactual found: {doc.get('reason', 'unknown reason')}")
        return "\n".join(lines) + "\n"
    for i, entry in enumerate(doc["counterfactuals"], start=1):
        lines.append(f"counterfactual {i} ({entry['method']}):")
        for name, delta in entry["deltas"].items():
            if delta["direction"] == UNCHANGED:
                continue
            arrow = ARROWS[delta["direction"]]
            lines.append(f"  {arrow} {name}: {fmt6(delta['old'])} -> {fmt6(delta['new'])}")
        if "desiderata" in entry:
            d = entry["desiderata"]
            lines.append(
                f"  desiderata: valid={d['valid_flip']} proximity={fmt6(d['proximity'])} "
                f"sparsity={d['sparsity']} plausibility={fmt6(d['plausibility'])}"
            )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReportBundle:
    config_hash: str
    config_snapshot: dict
    classification: dict = field(default_factory=dict)  # partition name -> report doc
    grid: Optional[BenchmarkGrid] = None
    explanations: tuple[dict, ...] = ()


def emit_report(bundle: ReportBundle, out_dir: str | Path, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write the bundle's artifacts; returns the paths written."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {out}: {exc}") from exc
    written: list[Path] = []

    def emit_json(name: str, doc: dict) -> None:
        path = out / name
        try:
            write_json(path, doc)
        except OSError as exc:
            raise ReportError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    if bundle.classification:
        emit_json(
            "metrics.json",
            {
                "config_hash": bundle.config_hash,
                "config": bundle.config_snapshot,
                "partitions": bundle.classification,
            },
        )
    if bundle.grid is not None:
        if "csv" in formats:
            path = out / "grid.csv"
            path.write_text(grid_csv_text(bundle.grid), encoding="utf-8")
            written.append(path)
        if "json" in formats:
            emit_json("grid.json", grid_json_doc(bundle.grid))
        if "plotdata" in formats or "json" in formats:
            emit_json("plotdata.json", plotdata_doc(bundle.grid))
    for i, doc in enumerate(bundle.explanations):
        emit_json(f"explanation_{i:03d}.json", doc)
        path = out / f"explanation_{i:03d}.txt"
        path.write_text(render_explanation_text(doc), encoding="utf-8")
        written.append(path)
    return written
