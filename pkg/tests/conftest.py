import json
import os
import tempfile

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

os.environ.setdefault("LOG_DIR", os.path.join(tempfile.gettempdir(), "egraph-extract-test-logs"))

from src.services.circuit import egraph_to_circuit
from src.services.egraph import parse_egraph

settings.register_profile(
    "egraph-extract",
    deadline=None,
    derandomize=True,
    database=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "egraph-extract"))

# seeds for the instance generators in src.services.generators
SEEDS = st.integers(min_value=0, max_value=2**32 - 1)

# sqrt(2) = sqrt(2) + 0: class A holds both forms, the "+" form depends on A itself.
E1_DOCUMENT = {
    "nodes": {
        "sqrt": {"op": "sqrt", "children": ["two"], "eclass": "A", "cost": 1.0},
        "plus": {"op": "+", "children": ["sqrt", "zero"], "eclass": "A", "cost": 1.0},
        "two": {"op": "2", "children": [], "eclass": "B", "cost": 1.0},
        "zero": {"op": "0", "children": [], "eclass": "C", "cost": 1.0},
    },
    "root_eclasses": ["A"],
}

# Only the self-referencing form is left, so every satisfying extraction is cyclic.
CYCLIC_ONLY_DOCUMENT = {
    "nodes": {
        "plus": {"op": "+", "children": ["plus", "zero"], "eclass": "A", "cost": 1.0},
        "zero": {"op": "0", "children": [], "eclass": "C", "cost": 1.0},
    },
    "root_eclasses": ["A"],
}


@pytest.fixture
def e1_document():
    return {"nodes": {k: dict(v) for k, v in E1_DOCUMENT["nodes"].items()}, "root_eclasses": ["A"]}


@pytest.fixture
def e1(e1_document):
    return parse_egraph(e1_document)


@pytest.fixture
def e1_circuit(e1):
    circuit, mapping = egraph_to_circuit(e1)
    return circuit, mapping


@pytest.fixture
def cyclic_only():
    return parse_egraph(CYCLIC_ONLY_DOCUMENT)


@pytest.fixture
def write_json_file(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return write

