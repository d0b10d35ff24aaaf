import pytest
from fastapi.testclient import TestClient

from src.api.main import app
from tests.conftest import CYCLIC_ONLY_DOCUMENT, E1_DOCUMENT


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert body["uptime_seconds"] >= 0


def test_convert(client):
    response = client.post("/convert", json=E1_DOCUMENT)
    assert response.status_code == 200
    assert len(response.json()["vertices"]) == 11


def test_simplify(client):
    circuit = client.post("/convert", json=E1_DOCUMENT).json()
    response = client.post("/simplify", json=circuit)
    assert response.status_code == 200
    body = response.json()
    assert body["converged"]
    assert len(body["circuit"]["vertices"]) == 1
    assert body["log"]


def test_extract(client):
    response = client.post("/extract", json=E1_DOCUMENT)
    assert response.status_code == 200
    assert response.json() == {"choices": {"A": "sqrt", "B": "two"}, "cost": 2.0, "acyclic": True}


def test_extract_cyclic_only(client):
    assert client.post("/extract", json=CYCLIC_ONLY_DOCUMENT).status_code == 409

    response = client.post("/extract", params={"acyclic": "false"}, json=CYCLIC_ONLY_DOCUMENT)
    assert response.status_code == 200
    assert response.json()["acyclic"] is False


@pytest.mark.parametrize(
    "params, document",
    [
        ({}, {"nodes": {"a": {"children": []}}, "root_eclasses": ["A"]}),
        ({}, {"nodes": {"a": {"eclass": "A", "children": ["b"]}}, "root_eclasses": ["A"]}),
        ({"heuristic": "max-degree"}, E1_DOCUMENT),
        ({"rules": "nope"}, E1_DOCUMENT),
        ({"timeout": "0"}, E1_DOCUMENT),
    ],
)
def test_extract_rejects_bad_requests(client, params, document):
    assert client.post("/extract", params=params, json=document).status_code == 422
