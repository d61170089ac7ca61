import datetime as dt

import httpx
import pytest

from bankcf.errors import SchemaError, TransportError
from bankcf.fdic import FdicConfig, fetch_fdic_snapshot
from bankcf.schema import specs_for_group

GROUP_II = specs_for_group("II")
FIELDS = ["TICRC", "NIMY", "INTEXPYQ", "RBCIAAJ", "ROE"]


def financial_record(cert, repdte, **values):
    record = {"CERT": cert, "REPDTE": repdte}
    for i, name in enumerate(FIELDS):
        record[name] = values.get(name, float(i))
    return record


class FakeFdic:
    """Offset/limit-paginating stand-in for the remote API."""

    def __init__(self, financials, failures=(), fail_first=0):
        self.financials = list(financials)
        self.failures = list(failures)
        self.fail_first = fail_first
        self.requests = []

    def handler(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        if self.fail_first > 0:
            self.fail_first -= 1
            return httpx.Response(503, text="busy")
        params = request.url.params
        offset = int(params.get("offset", 0))
        limit = int(params.get("limit", 1000))
        source = self.failures if "/failures" in request.url.path else self.financials
        page = source[offset:offset + limit]
        return httpx.Response(200, json={"data": [{"data": r} for r in page],
                                         "meta": {"total": len(source)}})

    def client(self) -> httpx.Client:
        return httpx.Client(transport=httpx.MockTransport(self.handler))


def test_snapshot_matches_schema():
    fake = FakeFdic([financial_record("10", "2010-03-31"),
                     financial_record("11", "2010-06-30")])
    table = fetch_fdic_snapshot(FdicConfig(), GROUP_II, client=fake.client())
    assert len(table) == 2
    assert table.feature_names == tuple(FIELDS)
    assert table.rows[0].bank_id == "10"
    assert table.rows[0].report_date == dt.date(2010, 3, 31)


def test_pagination_streams_pages():
    records = [financial_record(str(i), "2010-03-31") for i in range(25)]
    # distinct certs share a quarter; page size 10 forces 3 financials pages
    fake = FakeFdic(records)
    table = fetch_fdic_snapshot(
        FdicConfig(page_size=10), GROUP_II, client=fake.client()
    )
    assert len(table) == 25
    financial_requests = [r for r in fake.requests if "/financials" in r.url.path]
    assert len(financial_requests) == 3
    offsets = [int(r.url.params["offset"]) for r in financial_requests]
    assert offsets == [0, 10, 20]


def test_failure_registry_attaches_dates_and_drops_post_failure_rows():
    fake = FakeFdic(
        [
            financial_record("7", "2010-03-31"),
            financial_record("7", "2010-09-30"),  # after the failure: skipped
            financial_record("8", "2010-03-31"),
        ],
        failures=[{"CERT": "7", "FAILDATE": "2010-06-30"}],
    )
    table = fetch_fdic_snapshot(FdicConfig(), GROUP_II, client=fake.client())
    by_bank = {r.bank_id: r for r in table.rows}
    assert len(table) == 2
    assert by_bank["7"].failure_date == dt.date(2010, 6, 30)
    assert by_bank["8"].failure_date is None


def test_compact_dates_accepted():
    fake = FakeFdic([financial_record("7", "20100331")])
    table = fetch_fdic_snapshot(FdicConfig(), GROUP_II, client=fake.client())
    assert table.rows[0].report_date == dt.date(2010, 3, 31)


def test_missing_field_is_schema_error():
    record = financial_record("7", "2010-03-31")
    del record["ROE"]
    fake = FakeFdic([record])
    with pytest.raises(SchemaError, match="ROE"):
        fetch_fdic_snapshot(FdicConfig(), GROUP_II, client=fake.client())


def test_empty_result_warns_not_raises(caplog):
    fake = FakeFdic([])
    with caplog.at_level("WARNING"):
        table = fetch_fdic_snapshot(FdicConfig(), GROUP_II, client=fake.client())
    assert len(table) == 0
    assert any("zero banks" in m for m in caplog.messages)


def test_retry_then_success():
    fake = FakeFdic([financial_record("7", "2010-03-31")], fail_first=2)
    table = fetch_fdic_snapshot(
        FdicConfig(max_retries=3), GROUP_II, client=fake.client()
    )
    assert len(table) == 1


def test_transport_error_after_retries():
    fake = FakeFdic([financial_record("7", "2010-03-31")], fail_first=99)
    with pytest.raises(TransportError):
        fetch_fdic_snapshot(FdicConfig(max_retries=2), GROUP_II, client=fake.client())


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("BANKCF_FDIC_BASE_URL", "https://mirror.example/api")
    monkeypatch.setenv("BANKCF_FDIC_PAGE_SIZE", "123")
    config = FdicConfig.from_env()
    assert config.base_url == "https://mirror.example/api"
    assert config.page_size == 123
