"""HTTP what-if service: model listing, prediction, counterfactual search.

Stateless per request over immutable shared models. Schema violations return
400 with field-level messages; an unknown model is 404; a request for which
no counterfactual exists is 422 with the reason in the body. MOC work per
request is bounded by the configured population/generation budget and the
soft time budget.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .config import RunConfig
from .counterfactuals import CF_METHODS, CFQuery
from .errors import BankcfError
from .evaluation import DesiderataConfig, desiderata
from .pipeline import _reference_table, generate_for_method
from .reporting import counterfactual_entry, round6
from .schema import DataTable, FeatureSpec
from .trees import EnsembleModel, load_model, predict_label, predict_proba

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServedModel:
    model_id: str
    model: EnsembleModel
    schema: tuple[FeatureSpec, ...]
    reference: DataTable


class PredictRequest(BaseModel):
    model_id: str
    indicators: dict[str, float | int | None] = Field(default_factory=dict)


class CounterfactualRequest(BaseModel):
    model_id: str
    indicators: dict[str, float | int | None] = Field(default_factory=dict)
    method: str = "nice"
    frozen_features: list[str] = Field(default_factory=list)
    max_counterfactuals: Optional[int] = None


def load_served_models(models_dir: str | Path, config: RunConfig) -> dict[str, ServedModel]:
    served: dict[str, ServedModel] = {}
    for path in sorted(Path(models_dir).glob("*.json")):
        try:
            model, schema = load_model(path)
        except (BankcfError, KeyError, ValueError):
            continue  # not a model document
        reference = _reference_table(config, schema)
        served[path.stem] = ServedModel(path.stem, model, tuple(schema), reference)
    if not served:
        raise BankcfError(f"no loadable model JSON files in {models_dir}")
    return served


def _validate_indicators(
    served: ServedModel, indicators: dict[str, float | int | None]
) -> np.ndarray:
    """Field-level validation mirroring the indicator validity ranges."""
    errors: list[dict] = []
    names = [spec.name for spec in served.schema]
    for name in indicators:
        if name not in names:
            errors.append({"field": name, "error": "unknown indicator"})
    values = []
    for spec in served.schema:
        raw = indicators.get(spec.name)
        if raw is None:
            errors.append({"field": spec.name, "error": "missing value"})
            continue
        value = float(raw)
        if not np.isfinite(value):
            errors.append({"field": spec.name, "error": "value must be finite"})
            continue
        if spec.valid_range is not None:
            lo, hi = spec.valid_range
            if not lo <= value <= hi:
                errors.append(
                    {"field": spec.name,
                     "error": f"value {value} outside valid range [{lo}, {hi}]"}
                )
                continue
        values.append(value)
    if errors:
        raise HTTPException(status_code=400, detail={"errors": errors})
    return np.array(values, dtype=float)


def build_app(models_dir: str | Path, config: RunConfig) -> FastAPI:
    served = load_served_models(models_dir, config)
    desiderata_config = DesiderataConfig(
        epsilon=config.epsilon, k_plaus=config.k_plaus, distance=config.distance
    )
    app = FastAPI(title="bankcf what-if service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def get_served(model_id: str) -> ServedModel:
        if model_id not in served:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id!r}")
        return served[model_id]

    @app.get("/health")
    def health():
        return {"status": "ok", "models": sorted(served)}

    @app.get("/models")
    def models():
        return [
            {
                "id": sm.model_id,
                "kind": sm.model.kind,
                "decision_threshold": sm.model.decision_threshold,
                "features": [
                    {
                        "name": spec.name,
                        "kind": spec.kind,
                        "valid_range": list(spec.valid_range) if spec.valid_range else None,
                        "observed_range": list(spec.observed_range) if spec.observed_range else None,
                    }
                    for spec in sm.schema
                ],
            }
            for sm in served.values()
        ]

    @app.post("/predict")
    def predict(request: PredictRequest):
        sm = get_served(request.model_id)
        x = _validate_indicators(sm, request.indicators)
        probability = predict_proba(sm.model, x)
        return {
            "probability": round6(probability),
            "label": predict_label(sm.model, x),
        }

    @app.post("/counterfactuals")
    def counterfactuals(request: CounterfactualRequest):
        sm = get_served(request.model_id)
        if request.method not in CF_METHODS:
            raise HTTPException(
                status_code=400,
                detail={"errors": [{"field": "method",
                                    "error": f"unknown method {request.method!r}"}]},
            )
        unknown = [f for f in request.frozen_features
                   if f not in {s.name for s in sm.schema}]
        if unknown:
            raise HTTPException(
                status_code=400,
                detail={"errors": [{"field": f, "error": "unknown frozen feature"}
                                   for f in unknown]},
            )
        x = _validate_indicators(sm, request.indicators)
        label = predict_label(sm.model, x)
        if label == 0:
            raise HTTPException(
                status_code=422,
                detail={"reason": "bank is already predicted as non-failing"},
            )
        cap = min(request.max_counterfactuals or config.max_counterfactuals,
                  config.max_counterfactuals)
        query = CFQuery(
            factual=x,
            desired_class=0,
            frozen_features=frozenset(request.frozen_features),
            max_counterfactuals=cap,
        )
        started = time.monotonic()
        result = generate_for_method(
            request.method, query, sm.model, sm.reference, config, seed=config.seed
        )
        elapsed = time.monotonic() - started
        if elapsed > config.service_time_budget:
            logger.warning(
                "counterfactual search took %.1fs (budget %.1fs); consider a "
                "smaller moc_generations for this deployment",
                elapsed, config.service_time_budget,
            )
        if len(result) == 0:
            raise HTTPException(
                status_code=422,
                detail={"reason": result.reason or "no counterfactual found"},
            )
        return {
            "method": request.method,
            "counterfactuals": [
                counterfactual_entry(
                    cf, x, sm.schema,
                    desiderata(x, cf, sm.model, sm.reference, desiderata_config),
                )
                for cf in result
            ],
        }

    return app
