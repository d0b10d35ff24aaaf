import pytest
from hypothesis import given, settings

from src.exceptions import InputError, PipelineTimeout, UnsatisfiableError
from src.schemas import HEURISTICS
from src.services.circuit import Kind, build_circuit, egraph_to_circuit, is_acyclic_evaluation, is_valid_evaluation
from src.services.dp import (
    Entry,
    add_output_gate,
    handle_forget,
    handle_insert,
    handle_join,
    handle_leaf,
    run_dp,
    solve,
)
from src.services.generators import random_circuit
from src.services.oracle import brute_force_circuit, brute_force_evaluations
from src.services.treewidth import min_degree_decomposition, to_nice, underlying_graph
from src.utils import Deadline
from tests.conftest import SEEDS


@pytest.fixture
def input_and():
    """Input 0 (cost 3) feeding AND gate 1."""
    return build_circuit([Kind.INPUT, Kind.AND], [(0, 1)], [1], {0: 3.0})


def test_insert_input(input_and):
    table = handle_insert(handle_leaf(), (0,), 0, input_and)
    assert {key: e.cost for key, e in table.items()} == {(0, 0, (0,)): 0.0, (1, 0, (0,)): 3.0}


def test_insert_gate_checks_obligations(input_and):
    table = handle_insert(handle_leaf(), (0,), 0, input_and)
    table = handle_insert(table, (0, 1), 1, input_and)

    # a true AND over a false input never appears
    assert all(values != 0b10 for values, _, _ in table)
    # a false AND whose only input is true waits for a false input that never comes
    assert [pending for values, pending, _ in table if values == 0b01] == [0b10]
    # true input reaches the true gate
    assert [reach for values, _, reach in table if values == 0b11] == [(0b10, 0)]

    forgotten = handle_forget(table, (0, 1), 1)
    assert {key: e.cost for key, e in forgotten.items()} == {(0, 0, (0,)): 0.0, (1, 0, (0,)): 3.0}


def test_join_counts_shared_inputs_once():
    c = build_circuit([Kind.INPUT, Kind.OR], [(0, 1)], [1], {0: 5.0})
    left = {(1, 0, (0,)): Entry(7.0)}
    right = {(1, 0, (0,)): Entry(9.0)}
    joined = handle_join(left, right, (0,), c)
    assert [e.cost for e in joined.values()] == [11.0]


def test_join_rejects_cycles_closed_across_branches():
    c = build_circuit([Kind.INPUT, Kind.OR, Kind.OR], [(0, 1), (1, 2), (2, 1)], [2], {0: 1.0})
    left = {(0b11, 0, (0b10, 0)): Entry(1.0)}
    right = {(0b11, 0, (0, 0b01)): Entry(1.0)}
    assert handle_join(left, right, (1, 2), c) == {}
    assert len(handle_join(left, right, (1, 2), c, enforce_acyclic=False)) == 1


def test_join_needs_matching_values():
    c = build_circuit([Kind.INPUT, Kind.OR], [(0, 1)], [1], {0: 5.0})
    assert handle_join({(1, 0, (0,)): Entry(1.0)}, {(0, 0, (0,)): Entry(1.0)}, (0,), c) == {}


def test_solve_e1(e1_circuit):
    c, m = e1_circuit
    result = solve(c)
    assert result.cost == 2.0
    assert result.acyclic
    assert result.evaluation.value[m.node_and["sqrt"]]
    assert not result.evaluation.value[m.node_and["plus"]]
    assert result.stats.max_table > 0


def test_cyclic_only_needs_cycles(cyclic_only):
    c, _ = egraph_to_circuit(cyclic_only)
    with pytest.raises(UnsatisfiableError):
        solve(c)
    result = solve(c, enforce_acyclic=False)
    assert result.cost == 2.0
    assert not result.acyclic
    assert not is_acyclic_evaluation(c, result.evaluation)


def test_justification_tracking_is_needed():
    c = build_circuit([Kind.INPUT, Kind.INPUT, Kind.OR], [(0, 2), (1, 2)], [2], {0: 1.0, 1: 5.0})
    extended, u_out = add_output_gate(c)
    ntd = to_nice(min_degree_decomposition(underlying_graph(extended)), u_out)

    assert run_dp(extended, ntd).cost == 1.0
    unchecked = run_dp(extended, ntd, track_justification=False)
    assert unchecked.cost < 1.0 or not is_valid_evaluation(extended, unchecked.evaluation)


def test_root_bag_must_be_a_single_vertex(input_and):
    ntd = to_nice(min_degree_decomposition(underlying_graph(input_and)), 1)
    ntd.bags.pop()
    with pytest.raises(InputError):
        run_dp(input_and, ntd)


def test_expired_deadline_stops_the_dp(e1_circuit):
    c, _ = e1_circuit
    deadline = Deadline(1e-9)
    deadline.start -= 1.0
    with pytest.raises(PipelineTimeout) as info:
        solve(c, deadline=deadline)
    assert info.value.stage in {"decompose", "dp"}


def test_add_output_gate(e1_circuit):
    c, m = e1_circuit
    extended, u_out = add_output_gate(c)
    assert extended.num_vertices == 12
    assert extended.outputs == (u_out,)
    assert extended.kinds[u_out] is Kind.AND
    assert extended.preds[u_out] == (m.class_or["A"],)


@settings(max_examples=300)
@given(seed=SEEDS)
def test_matches_input_enumeration_on_random_circuits(seed):
    c = random_circuit(seed)
    expected = brute_force_circuit(c)
    try:
        result = solve(c)
    except UnsatisfiableError:
        assert not expected.satisfiable
        return
    assert result.cost == pytest.approx(expected.optimum)


@settings(max_examples=200)
@given(seed=SEEDS)
def test_matches_evaluation_enumeration_without_acyclicity(seed):
    c = random_circuit(seed, max_vertices=10)
    expected = brute_force_evaluations(c, require_acyclic=False)
    try:
        result = solve(c, enforce_acyclic=False)
    except UnsatisfiableError:
        assert not expected.satisfiable
        return
    assert result.cost == pytest.approx(expected.optimum)
    assert is_valid_evaluation(c, result.evaluation)


def _cost_or_none(c, ntd):
    try:
        return run_dp(c, ntd).cost
    except UnsatisfiableError:
        return None


@settings(max_examples=200)
@given(seed=SEEDS)
def test_cost_does_not_depend_on_the_decomposition(seed):
    extended, u_out = add_output_gate(random_circuit(seed))
    graph = underlying_graph(extended)
    costs = {
        heuristic: _cost_or_none(extended, to_nice(min_degree_decomposition(graph, heuristic), u_out))
        for heuristic in HEURISTICS
    }
    assert len(set(costs.values())) == 1, costs
