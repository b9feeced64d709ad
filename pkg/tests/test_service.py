import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from afslab.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    assert client.get("/health").json()["status"] == "ok"


def test_evaluate(client):
    body = client.post("/evaluate", json={"plan": [16, 3, 6]}).json()
    assert body["plan"] == [3, 6, 16]
    assert body["objective"] == pytest.approx(5.1204, abs=5e-5)
    assert len(body["nodes"]) == 24 and body["csv"].startswith("node,probability")


def test_evaluate_rejects_bad_plans(client):
    assert client.post("/evaluate", json={"plan": [3, 6, 16], "budget": 2}).status_code == 422
    assert client.post("/evaluate", json={"plan": [99]}).status_code == 422


def test_validation_errors(client):
    assert client.post("/experiments/solve", json={"budgets": []}).status_code == 422
    assert client.post("/experiments/solve", json={"sof": 1.5}).status_code == 422
    assert client.post("/experiments/solve", json={"solver": "cplex"}).status_code == 422
    assert client.post("/experiments/solve", json={"population": 10, "children": 10}).status_code == 422
    assert client.post("/experiments/nope", json={}).status_code == 422
    bad = client.post("/experiments/paths", json={"network": "garbage", "probs": "1,0.5\n"})
    assert bad.status_code == 422 and bad.json()["kind"] == "NetworkParseError"


def test_guard_maps_to_409(client):
    resp = client.post("/experiments/solve", json={"budgets": [2], "solver": "exact", "node_limit": 1})
    assert resp.status_code == 409 and resp.json()["kind"] == "GuardError"


def test_solve_round_trip(client):
    resp = client.post("/experiments/solve", json={"budgets": [1, 2], "solver": "exact"})
    body = resp.json()
    assert resp.status_code == 200 and body["command"] == "solve"
    assert body["summary"]["plans"] == {"1": [16], "2": [6, 16]}
    assert "budget_table.csv" in body["files"]


def test_export_defaults(client):
    body = client.post("/experiments/export-milp", json={"k": 1}).json()
    assert body["files"]["model.lp"].startswith("\\ Problem:")
    assert body["summary"]["constraints"] > 0
