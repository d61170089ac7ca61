"""Paginated FDIC financials client.

Pulls bank-quarter indicator records from the FDIC BankFind-style JSON API
(offset/limit pagination) and joins the failed-bank registry to attach
failure dates. The full corpus is large (hundreds of thousands of
bank-quarters across active and closed institutions), so pages are fetched
and converted incrementally instead of in one request.

Configuration comes from an optional config file (see `bankcf.config`) with
environment overrides: BANKCF_FDIC_BASE_URL, BANKCF_FDIC_PAGE_SIZE,
BANKCF_FDIC_MAX_RETRIES.
"""

from __future__ import annotations

import datetime as dt
import logging
import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import httpx

from .errors import SchemaError, TransportError
from .schema import BankQuarterRecord, DataTable, FeatureSpec, make_table, quarter_end

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://banks.data.fdic.gov/api"


@dataclass(frozen=True)
class FdicConfig:
    base_url: str = DEFAULT_BASE_URL
    financials_path: str = "/financials"
    failures_path: str = "/failures"
    page_size: int = 1000
    max_retries: int = 3
    timeout: float = 30.0
    date_from: Optional[dt.date] = None
    date_to: Optional[dt.date] = None
    extra_filters: str = ""

    @staticmethod
    def from_env(base: "FdicConfig | None" = None) -> "FdicConfig":
        cfg = base or FdicConfig()
        base_url = os.environ.get("BANKCF_FDIC_BASE_URL", cfg.base_url)
        page_size = int(os.environ.get("BANKCF_FDIC_PAGE_SIZE", cfg.page_size))
        retries = int(os.environ.get("BANKCF_FDIC_MAX_RETRIES", cfg.max_retries))
        return FdicConfig(
            base_url=base_url,
            financials_path=cfg.financials_path,
            failures_path=cfg.failures_path,
            page_size=page_size,
            max_retries=retries,
            timeout=cfg.timeout,
            date_from=cfg.date_from,
            date_to=cfg.date_to,
            extra_filters=cfg.extra_filters,
        )


def _get_json(client: httpx.Client, url: str, params: dict, max_retries: int) -> dict:
    last_exc: Exception | None = None
    for attempt in range(max_retries + 1):
        try:
            response = client.get(url, params=params)
            if response.status_code >= 500:
                last_exc = TransportError(f"GET {url} -> {response.status_code}")
                continue
            response.raise_for_status()
            return response.json()
        except (httpx.TransportError, httpx.HTTPStatusError) as exc:
            last_exc = exc
    raise TransportError(f"GET {url} failed after {max_retries + 1} attempts: {last_exc}")


def _iter_pages(
    client: httpx.Client, url: str, params: dict, page_size: int, max_retries: int
) -> Iterator[dict]:
    """Yield raw records page by page; never materializes the whole result."""
    offset = 0
    while True:
        page_params = dict(params, limit=page_size, offset=offset)
        payload = _get_json(client, url, page_params, max_retries)
        data = payload.get("data", [])
        for item in data:
            # BankFind wraps each record in {"data": {...}}; accept both forms
            yield item.get("data", item) if isinstance(item, dict) else item
        if len(data) < page_size:
            return
        offset += page_size


def _date_filter(config: FdicConfig) -> str:
    clauses = []
    if config.date_from is not None:
        clauses.append(f"REPDTE:[{config.date_from.isoformat()} TO *]")
    if config.date_to is not None:
        clauses.append(f"REPDTE:[* TO {config.date_to.isoformat()}]")
    if config.extra_filters:
        clauses.append(config.extra_filters)
    return " AND ".join(clauses)


def _coerce_date(raw) -> dt.date:
    text = str(raw)
    if len(text) == 8 and text.isdigit():  # compact YYYYMMDD form
        return dt.date(int(text[:4]), int(text[4:6]), int(text[6:8]))
    return dt.date.fromisoformat(text[:10])


def fetch_failure_registry(config: FdicConfig, client: httpx.Client) -> dict[str, dt.date]:
    """Map bank_id (CERT) -> failure date from the failed-bank registry."""
    url = config.base_url.rstrip("/") + config.failures_path
    registry: dict[str, dt.date] = {}
    for record in _iter_pages(client, url, {}, config.page_size, config.max_retries):
        cert = record.get("CERT")
        faildate = record.get("FAILDATE")
        if cert is None or faildate is None:
            continue
        registry[str(cert)] = _coerce_date(faildate)
    return registry


def fetch_fdic_snapshot(
    config: FdicConfig,
    schema: Sequence[FeatureSpec],
    client: Optional[httpx.Client] = None,
) -> DataTable:
    """Fetch a bank-quarter snapshot for the schema's indicators.

    Each financials record must carry CERT, REPDTE, and every schema field;
    a missing field raises SchemaError. Banks present in the failure registry
    get their failure_date attached (labels stay 0 until lag labeling).
    Deterministic given a fixed remote snapshot.
    """
    names = [spec.name for spec in schema]
    own_client = client is None
    client = client or httpx.Client(timeout=config.timeout)
    try:
        registry = fetch_failure_registry(config, client)
        url = config.base_url.rstrip("/") + config.financials_path
        params: dict = {"fields": ",".join(["CERT", "REPDTE", *names])}
        filters = _date_filter(config)
        if filters:
            params["filters"] = filters
        rows: list[BankQuarterRecord] = []
        for record in _iter_pages(client, url, params, config.page_size, config.max_retries):
            if "CERT" not in record or "REPDTE" not in record:
                raise SchemaError("FDIC response record lacks CERT/REPDTE")
            indicators: dict[str, float] = {}
            for name in names:
                if name not in record:
                    raise SchemaError(f"FDIC response record lacks field {name!r}")
                indicators[name] = float(record[name])
            bank_id = str(record["CERT"])
            report_date = quarter_end(_coerce_date(record["REPDTE"]))
            failure = registry.get(bank_id)
            if failure is not None and report_date > failure:
                continue
            rows.append(BankQuarterRecord(bank_id, report_date, indicators, 0, failure))
    finally:
        if own_client:
            client.close()
    if not rows:
        logger.warning("FDIC snapshot query matched zero banks; returning empty table")
    return make_table(schema, rows)
