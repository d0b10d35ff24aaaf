import pytest
from hypothesis import given, settings

from src import config
from src.exceptions import InstanceTooLarge
from src.services.circuit import egraph_to_circuit
from src.services.egraph import Extraction
from src.services.generators import chain_egraph, random_circuit, random_egraph
from src.services.oracle import (
    brute_force_circuit,
    brute_force_evaluations,
    brute_force_extract,
    candidate_count,
    enumerate_minimal_extractions,
)
from tests.conftest import SEEDS


def test_e1_optimum(e1):
    result = brute_force_extract(e1)
    assert result.optimum == 2.0
    assert result.witnesses == [Extraction({"A": "sqrt", "B": "two"})]
    assert result.count_satisfying == 1

    relaxed = brute_force_extract(e1, require_acyclic=False)
    assert relaxed.optimum == 2.0
    assert Extraction({"A": "plus", "C": "zero"}) in relaxed.witnesses
    assert relaxed.count_satisfying == 2


def test_cyclic_only(cyclic_only):
    assert not brute_force_extract(cyclic_only).satisfiable
    assert brute_force_extract(cyclic_only, require_acyclic=False).optimum == 2.0

    c, _ = egraph_to_circuit(cyclic_only)
    assert not brute_force_circuit(c).satisfiable
    assert brute_force_evaluations(c, require_acyclic=False).optimum == 2.0


def test_minimal_extractions_are_distinct(e1):
    found = [tuple(sorted(x.choice.items())) for x in enumerate_minimal_extractions(e1)]
    assert len(found) == len(set(found)) == 2
    assert candidate_count(e1) == 3 * 2 * 2


@settings(max_examples=300)
@given(seed=SEEDS)
def test_oracles_agree_on_random_egraphs(seed):
    g = random_egraph(seed, max_classes=5)
    c, _ = egraph_to_circuit(g)
    by_extraction = brute_force_extract(g)
    by_inputs = brute_force_circuit(c)
    assert by_extraction.satisfiable == by_inputs.satisfiable
    if by_extraction.satisfiable:
        assert by_extraction.optimum == pytest.approx(by_inputs.optimum)


@settings(max_examples=200)
@given(seed=SEEDS)
def test_input_and_evaluation_oracles_agree(seed):
    c = random_circuit(seed, max_vertices=10)
    by_inputs = brute_force_circuit(c)
    by_evaluations = brute_force_evaluations(c)
    assert by_inputs.optimum == by_evaluations.optimum


def test_size_guards(monkeypatch):
    monkeypatch.setattr(config, "ORACLE_MAX_CANDIDATES", 10)
    g = chain_egraph(12)
    with pytest.raises(InstanceTooLarge):
        brute_force_extract(g)

    c, _ = egraph_to_circuit(g)
    with pytest.raises(InstanceTooLarge):
        brute_force_circuit(c)
    with pytest.raises(InstanceTooLarge):
        brute_force_evaluations(c)
