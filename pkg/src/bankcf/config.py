"""Run configuration: TOML file + environment overrides + CLI overrides.

One resolved RunConfig is the single source of truth for a run; its canonical
JSON hash stamps every emitted artifact so reports can be traced back to the
exact configuration. Seeds are explicit (default 0) - nothing falls back to
wall-clock randomness.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .balancing import STRATEGY_TAGS
from .counterfactuals import CF_METHODS
from .errors import ConfigError
from .evaluation import GOWER, HEOM
from .schema import PREDICTOR_GROUPS
from .trees import MODEL_KINDS

ENV_PREFIX = "BANKCF_"


@dataclass(frozen=True)
class RunConfig:
    data_csv: Optional[str] = None  # None -> bundled desk dataset
    predictor_group: str = "II"
    model_kind: str = "random_forest"
    strategy: str = "cost_sensitive"
    methods: tuple[str, ...] = ("whatif", "nice", "moc")
    boundary: dt.date = dt.date(2014, 1, 1)
    holdout_ratio: float = 0.8
    lag_days: int = 365
    seed: int = 0
    out_dir: str = "out"
    n_trees: int = 100
    max_depth: Optional[int] = None
    epsilon: float = 0.5
    k_plaus: int = 10
    distance: str = GOWER
    max_counterfactuals: int = 5
    benchmark_cap: int = 10  # factual instances explained per grid cell
    moc_population: int = 50
    moc_generations: int = 100
    service_host: str = "127.0.0.1"
    service_port: int = 8000
    service_time_budget: float = 10.0
    cors_origins: tuple[str, ...] = ("*",)

    def validate(self) -> "RunConfig":
        if self.predictor_group not in PREDICTOR_GROUPS:
            raise ConfigError(f"unknown predictor group {self.predictor_group!r}")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model_kind!r}")
        if self.strategy not in STRATEGY_TAGS:
            raise ConfigError(f"unknown balancing strategy {self.strategy!r}")
        for method in self.methods:
            if method not in CF_METHODS:
                raise ConfigError(f"unknown counterfactual method {method!r}")
        if self.distance not in (GOWER, HEOM):
            raise ConfigError(f"unknown distance {self.distance!r}")
        if not 0 < self.holdout_ratio < 1:
            raise ConfigError("holdout_ratio must be in (0, 1)")
        if self.seed is None:
            raise ConfigError("seed must be set explicitly")
        return self


_DATE_KEYS = {"boundary"}
_TUPLE_KEYS = {"methods", "cors_origins"}
_INT_KEYS = {
    "lag_days", "seed", "n_trees", "max_depth", "k_plaus", "max_counterfactuals",
    "benchmark_cap", "moc_population", "moc_generations", "service_port",
}
_FLOAT_KEYS = {"holdout_ratio", "epsilon", "service_time_budget"}


def _coerce(key: str, value):
    if value is None:
        return None
    if key in _DATE_KEYS:
        return value if isinstance(value, dt.date) else dt.date.fromisoformat(str(value))
    if key in _TUPLE_KEYS:
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        return tuple(value)
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def load_config_file(path: str | Path) -> dict:
    raw = Path(path).read_bytes()
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def resolve_config(
    file_path: Optional[str | Path] = None,
    overrides: Optional[dict] = None,
    env: Optional[dict] = None,
) -> RunConfig:
    """file < environment < explicit overrides, then validate."""
    values: dict = {}
    known = set(RunConfig.__dataclass_fields__)
    if file_path is not None:
        for key, value in load_config_file(file_path).items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r} in {file_path}")
            values[key] = _coerce(key, value)
    env = os.environ if env is None else env
    for key in known:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = _coerce(key, env[env_key])
    for key, value in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config override {key!r}")
        if value is not None:
            values[key] = _coerce(key, value)
    return RunConfig(**values).validate()


# where artifacts land / where the service binds does not affect results
NONSEMANTIC_KEYS = ("out_dir", "service_host", "service_port")


def semantic_snapshot(config: RunConfig) -> dict:
    doc = asdict(config)
    doc["boundary"] = config.boundary.isoformat()
    for key in NONSEMANTIC_KEYS:
        doc.pop(key, None)
    return doc


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(
        semantic_snapshot(config), sort_keys=True, separators=(",", ":"), default=str
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
