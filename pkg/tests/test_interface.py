import json

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from bankcf.cli import main
from bankcf.config import resolve_config
from bankcf.dataset import desk_dataset_path
from bankcf.pipeline import prepare_split, run_train
from bankcf.service import build_app
from bankcf.trees import load_model, predict_label


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    runner = CliRunner()
    result = runner.invoke(
        main, ["train", "--seed", "1", "--out", str(out), "--model", "random_forest",
               "--strategy", "cost_sensitive"],
    )
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def failing_record(trained_dir):
    model, schema = load_model(trained_dir / "model_random_forest_cost_sensitive.json")
    import csv

    with open(desk_dataset_path(), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            x = np.array([float(row[s.name]) for s in schema])
            if predict_label(model, x) == 1:
                return {s.name: float(row[s.name]) for s in schema}
    raise AssertionError("no failing record found in the desk dataset")


@pytest.fixture(scope="module")
def healthy_record(trained_dir):
    model, schema = load_model(trained_dir / "model_random_forest_cost_sensitive.json")
    import csv

    with open(desk_dataset_path(), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            x = np.array([float(row[s.name]) for s in schema])
            if predict_label(model, x) == 0:
                return {s.name: float(row[s.name]) for s in schema}
    raise AssertionError("no healthy record found")


class TestTrainCommand:
    def test_writes_model_and_metrics(self, trained_dir):
        assert (trained_dir / "metrics.json").exists()
        assert (trained_dir / "model_random_forest_cost_sensitive.json").exists()
        doc = json.loads((trained_dir / "metrics.json").read_text())
        for partition in ("out_of_sample", "out_of_time"):
            assert 0.0 <= doc["partitions"][partition]["f1"] <= 1.0
            assert 0.0 <= doc["partitions"][partition]["accuracy"] <= 1.0

    def test_invalid_strategy_fails_before_compute(self):
        runner = CliRunner()
        result = runner.invoke(main, ["train", "--strategy", "nonsense"])
        assert result.exit_code != 0
        assert "strategy" in result.output

    def test_deterministic_reruns(self, tmp_path):
        runner = CliRunner()
        outs = []
        for sub in ("x", "y"):
            out = tmp_path / sub
            result = runner.invoke(
                main,
                ["train", "--seed", "5", "--out", str(out), "--model", "decision_tree",
                 "--strategy", "original"],
            )
            assert result.exit_code == 0, result.output
            outs.append(out)
        a = (outs[0] / "metrics.json").read_bytes()
        b = (outs[1] / "metrics.json").read_bytes()
        assert a == b
        ma = (outs[0] / "model_decision_tree_original.json").read_bytes()
        mb = (outs[1] / "model_decision_tree_original.json").read_bytes()
        assert ma == mb


class TestEvaluationPartitionsNeverBalanced:
    def test_partition_rows_match_split(self):
        config = resolve_config(None, {"seed": 1}, env={})
        split = prepare_split(config)
        bundle = run_train(config, write=False)
        oos = bundle.classification["out_of_sample"]["confusion"]
        oot = bundle.classification["out_of_time"]["confusion"]
        assert sum(oos.values()) == len(split.out_of_sample)
        assert sum(oot.values()) == len(split.out_of_time)


class TestExplainCommand:
    def test_explain_failing_bank(self, trained_dir, failing_record, tmp_path):
        record_path = tmp_path / "record.json"
        record_path.write_text(json.dumps(failing_record))
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["explain", "--model",
             str(trained_dir / "model_random_forest_cost_sensitive.json"),
             "--record", str(record_path), "--method", "nice",
             "--seed", "1", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "explanation.json").read_text())
        assert doc["status"] == "ok"
        assert len(doc["counterfactuals"]) >= 1
        for entry in doc["counterfactuals"]:
            assert entry["desiderata"]["valid_flip"] is True

    def test_explain_healthy_bank_short_circuits(self, trained_dir, healthy_record, tmp_path):
        record_path = tmp_path / "record.json"
        record_path.write_text(json.dumps(healthy_record))
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["explain", "--model",
             str(trained_dir / "model_random_forest_cost_sensitive.json"),
             "--record", str(record_path), "--method", "nice",
             "--seed", "1", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "no action needed" in result.output
        doc = json.loads((tmp_path / "explanation.json").read_text())
        assert doc["status"] == "no_action_needed"
        assert doc["counterfactuals"] == []

    def test_frozen_all_features_no_counterfactual_exit_code(
        self, trained_dir, failing_record, tmp_path
    ):
        record_path = tmp_path / "record.json"
        record_path.write_text(json.dumps(failing_record))
        runner = CliRunner()
        freeze_args = []
        for name in failing_record:
            freeze_args += ["--freeze", name]
        result = runner.invoke(
            main,
            ["explain", "--model",
             str(trained_dir / "model_random_forest_cost_sensitive.json"),
             "--record", str(record_path), "--method", "nice",
             "--seed", "1", "--out", str(tmp_path), *freeze_args],
        )
        assert result.exit_code == 3, result.output  # documented no-CF status
        doc = json.loads((tmp_path / "explanation.json").read_text())
        assert doc["status"] == "no_counterfactual"
        assert doc["reason"]


@pytest.fixture(scope="module")
def client(trained_dir):
    config = resolve_config(None, {"seed": 1, "moc_generations": 25}, env={})
    app = build_app(trained_dir, config)
    return TestClient(app)


MODEL_ID = "model_random_forest_cost_sensitive"


class TestService:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"

    def test_models_carry_schema_and_ranges(self, client):
        body = client.get("/models").json()
        assert len(body) == 1
        features = {f["name"]: f for f in body[0]["features"]}
        assert features["ROE"]["valid_range"] == [-12000.0, 1000.0]
        assert features["ROE"]["observed_range"] is not None

    def test_predict_contract(self, client, failing_record):
        response = client.post(
            "/predict", json={"model_id": MODEL_ID, "indicators": failing_record}
        )
        assert response.status_code == 200
        body = response.json()
        assert 0.0 <= body["probability"] <= 1.0
        assert body["label"] in (0, 1)

    def test_predict_missing_field_is_400_naming_it(self, client, failing_record):
        partial = dict(failing_record)
        del partial["ROE"]
        response = client.post(
            "/predict", json={"model_id": MODEL_ID, "indicators": partial}
        )
        assert response.status_code == 400
        errors = response.json()["detail"]["errors"]
        assert any(e["field"] == "ROE" for e in errors)

    def test_predict_out_of_range_is_400(self, client, failing_record):
        bad = dict(failing_record, ROE=-99999.0)
        response = client.post(
            "/predict", json={"model_id": MODEL_ID, "indicators": bad}
        )
        assert response.status_code == 400

    def test_unknown_model_is_404(self, client, failing_record):
        response = client.post(
            "/predict", json={"model_id": "missing", "indicators": failing_record}
        )
        assert response.status_code == 404

    def test_counterfactuals_flip(self, client, failing_record):
        response = client.post(
            "/counterfactuals",
            json={"model_id": MODEL_ID, "indicators": failing_record, "method": "nice"},
        )
        assert response.status_code == 200
        body = response.json()
        assert len(body["counterfactuals"]) >= 1
        for entry in body["counterfactuals"]:
            assert entry["desiderata"]["valid_flip"] is True
            changed = [
                name for name, delta in entry["deltas"].items()
                if delta["direction"] != "unchanged"
            ]
            assert changed  # a flip requires at least one change

    def test_counterfactuals_on_healthy_bank_is_422(self, client, healthy_record):
        response = client.post(
            "/counterfactuals",
            json={"model_id": MODEL_ID, "indicators": healthy_record, "method": "nice"},
        )
        assert response.status_code == 422
        assert "non-failing" in response.json()["detail"]["reason"]

    def test_unknown_method_is_400(self, client, failing_record):
        response = client.post(
            "/counterfactuals",
            json={"model_id": MODEL_ID, "indicators": failing_record, "method": "dice"},
        )
        assert response.status_code == 400

    def test_concurrent_requests_consistent(self, client, failing_record):
        from concurrent.futures import ThreadPoolExecutor

        def call(_):
            return client.post(
                "/predict", json={"model_id": MODEL_ID, "indicators": failing_record}
            ).json()

        with ThreadPoolExecutor(8) as pool:
            answers = list(pool.map(call, range(16)))
        assert all(a == answers[0] for a in answers)
