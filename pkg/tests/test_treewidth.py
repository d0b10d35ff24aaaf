import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.exceptions import InputError
from src.schemas import HEURISTICS
from src.services.dp import add_output_gate
from src.services.generators import random_circuit
from src.services.treewidth import (
    BagKind,
    TreeDecomposition,
    check_nice,
    decompose,
    min_degree_decomposition,
    to_nice,
    underlying_graph,
    validate_decomposition,
)
from tests.conftest import SEEDS


def test_underlying_graph_is_simple_and_undirected(e1_circuit):
    c, _ = e1_circuit
    graph = underlying_graph(c)
    assert graph.number_of_nodes() == 11
    # and:plus -> or:A and or:A -> and:plus collapse into one undirected edge
    assert graph.number_of_edges() == 10


@pytest.mark.parametrize("heuristic", ["min-degree", "min-fill"])
@pytest.mark.parametrize(
    "graph, low, high",
    [
        (nx.path_graph(6), 1, 1),
        (nx.cycle_graph(7), 2, 2),
        (nx.complete_graph(5), 4, 4),
        (nx.grid_2d_graph(3, 3), 3, 4),
    ],
)
def test_known_widths(graph, low, high, heuristic):
    graph = nx.convert_node_labels_to_integers(graph)
    td = min_degree_decomposition(graph, heuristic)
    report = validate_decomposition(graph, td)
    assert report.ok, report.violations
    assert low <= td.width <= high


def test_disconnected_graph_gets_a_hub():
    graph = nx.Graph()
    graph.add_edges_from([(0, 1), (2, 3)])
    graph.add_node(4)
    td = min_degree_decomposition(graph)
    assert validate_decomposition(graph, td).ok
    assert frozenset() in td.bags


def test_rejects_empty_graph_and_unknown_heuristic():
    with pytest.raises(InputError):
        min_degree_decomposition(nx.Graph())
    with pytest.raises(InputError, match="unknown heuristic"):
        min_degree_decomposition(nx.path_graph(2), "min-width")


def test_validation_reports_broken_decompositions():
    graph = nx.path_graph(3)
    td = TreeDecomposition([frozenset({0, 1}), frozenset({2})], [(0, 1)])
    report = validate_decomposition(graph, td)
    assert report.is_tree and report.covers_vertices
    assert not report.covers_edges

    td = TreeDecomposition([frozenset({0, 1}), frozenset({2}), frozenset({1, 2})], [(0, 1), (1, 2)])
    report = validate_decomposition(graph, td)
    assert not report.connected


@settings(max_examples=100)
@given(seed=SEEDS)
def test_nice_decomposition_of_random_circuits(seed):
    c, u_out = add_output_gate(random_circuit(seed))
    graph, td = decompose(c)
    assert validate_decomposition(graph, td).ok

    ntd = to_nice(td, u_out)
    assert check_nice(ntd) == []
    assert ntd.bags[ntd.root].vertices == (u_out,)
    assert ntd.width == td.width
    assert validate_decomposition(graph, ntd.as_tree_decomposition()).ok
    assert ntd.kind_counts()[BagKind.LEAF.value] >= 1


@pytest.mark.parametrize("heuristic", HEURISTICS)
@settings(max_examples=300)
@given(
    n=st.integers(min_value=1, max_value=16),
    p=st.floats(min_value=0.05, max_value=0.7),
    seed=SEEDS,
)
def test_random_graph_decompositions_are_valid(heuristic, n, p, seed):
    graph = nx.gnp_random_graph(n, p, seed=seed)
    td = min_degree_decomposition(graph, heuristic)
    report = validate_decomposition(graph, td)
    assert report.ok, report.violations

    ntd = to_nice(td, 0)
    assert check_nice(ntd) == []
    assert ntd.bags[ntd.root].vertices == (0,)
    assert ntd.width == td.width
    assert validate_decomposition(graph, ntd.as_tree_decomposition()).ok


@pytest.mark.parametrize("heuristic", HEURISTICS)
def test_triangulated_hexagon_has_width_two(heuristic):
    # outer cycle 0..5 with chords 0-2, 0-3, 3-5
    graph = nx.cycle_graph(6)
    graph.add_edges_from([(0, 2), (0, 3), (3, 5)])
    td = min_degree_decomposition(graph, heuristic)
    assert validate_decomposition(graph, td).ok
    assert td.width == 2

    ntd = to_nice(td, 0)
    assert check_nice(ntd) == []
    assert ntd.width == 2


def test_single_bag_expands_to_an_insert_forget_chain():
    ntd = to_nice(TreeDecomposition([frozenset({0, 1, 2})], []), 0)
    assert [(b.kind, b.vertices, b.vertex) for b in ntd.bags] == [
        (BagKind.LEAF, (), None),
        (BagKind.INSERT, (0,), 0),
        (BagKind.INSERT, (0, 1), 1),
        (BagKind.INSERT, (0, 1, 2), 2),
        (BagKind.FORGET, (0, 2), 1),
        (BagKind.FORGET, (0,), 2),
    ]


def test_star_of_identical_bags_stacks_two_joins():
    bag = frozenset({0, 1})
    td = TreeDecomposition([bag, bag, bag, bag], [(0, 1), (0, 2), (0, 3)])
    ntd = to_nice(td, 0)
    assert check_nice(ntd) == []

    joins = [i for i, b in enumerate(ntd.bags) if b.kind is BagKind.JOIN]
    assert len(joins) == 2
    assert joins[0] in ntd.bags[joins[1]].children
    assert all(ntd.bags[j].vertices == (0, 1) for j in joins)
    assert ntd.bags[ntd.root].vertices == (0,)


def test_to_nice_requires_the_root_vertex():
    td = min_degree_decomposition(nx.path_graph(3))
    with pytest.raises(InputError, match="no bag contains"):
        to_nice(td, 9)


def test_check_nice_spots_a_bad_bag():
    td = min_degree_decomposition(nx.path_graph(3))
    ntd = to_nice(td, 0)
    insert = next(i for i, b in enumerate(ntd.bags) if b.kind is BagKind.INSERT)
    bag = ntd.bags[insert]
    ntd.bags[insert] = type(bag)(bag.kind, bag.vertices + (99,), bag.children, bag.vertex)
    assert any("insert equation" in p for p in check_nice(ntd))
