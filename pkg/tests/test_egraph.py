import json

import pytest

from src.exceptions import InputError
from src.services.egraph import (
    Extraction,
    extraction_cost,
    extraction_document,
    parse_egraph,
    reachable_classes,
    render_egraph,
    render_term,
    scale_costs,
    validate_extraction,
)


def test_parse_collapses_duplicate_children_into_class_deps():
    g = parse_egraph(
        {
            "nodes": {
                "x": {"op": "x", "children": [], "eclass": "X", "cost": 1},
                "sq": {"op": "*", "children": ["x", "x"], "eclass": "S", "cost": 2},
            },
            "root_eclasses": ["S"],
        }
    )
    assert g.deps["sq"] == ("X",)
    assert g.nodes["sq"].children == ("x", "x")
    assert g.num_edges == 1


def test_parse_accepts_text_and_defaults(e1_document):
    g = parse_egraph(json.dumps(e1_document))
    assert set(g.classes) == {"A", "B", "C"}
    assert g.classes["A"] == ("sqrt", "plus")
    assert g.roots == ("A",)

    bare = parse_egraph({"nodes": {"n": {"eclass": "N"}}, "root_eclasses": ["N"]})
    assert bare.cost("n") == 1.0


@pytest.mark.parametrize(
    "document, message",
    [
        ("{not json", "malformed JSON"),
        ({"nodes": {}, "root_eclasses": []}, "root_eclasses is empty"),
        ({"nodes": {"a": {"eclass": "A"}}, "root_eclasses": ["Z"]}, "does not exist"),
        ({"nodes": {"a": {"eclass": "A", "children": ["b"]}}, "root_eclasses": ["A"]}, "unknown child"),
        ({"nodes": {"a": {"eclass": "A", "cost": -1}}, "root_eclasses": ["A"]}, "negative cost"),
        ({"nodes": {"a": {"children": []}}, "root_eclasses": ["A"]}, "invalid e-graph document"),
        (
            {"nodes": {"a": {"eclass": "A"}}, "root_eclasses": ["A"], "class_data": {"B": {"nodes": ["a"]}}},
            "listed under class",
        ),
    ],
)
def test_parse_rejects_malformed_documents(document, message):
    with pytest.raises(InputError, match=message):
        parse_egraph(document)


def test_render_is_inverse_of_parse(e1):
    assert parse_egraph(render_egraph(e1)) == e1


def test_optimal_extraction_is_valid(e1):
    x = Extraction({"A": "sqrt", "B": "two"})
    report = validate_extraction(e1, x)
    assert report.ok, report.violations
    assert extraction_cost(e1, x) == 2.0
    assert render_term(e1, x) == "sqrt(2)"


def test_self_referencing_choice_is_cyclic(e1):
    x = Extraction({"A": "plus", "C": "zero"})
    report = validate_extraction(e1, x)
    assert report.is_extraction and report.is_satisfying
    assert not report.is_acyclic
    assert any("cycle" in v for v in report.violations)
    assert render_term(e1, x, max_depth=2) == "+(+(+(...), 0), 0)"


def test_unneeded_class_breaks_minimality(e1):
    x = Extraction({"A": "sqrt", "B": "two", "C": "zero"})
    report = validate_extraction(e1, x)
    assert report.is_extraction and report.is_acyclic
    assert not report.is_minimal
    assert reachable_classes(e1, x) == {"A", "B"}


def test_open_and_uncovered_extractions(e1):
    assert not validate_extraction(e1, Extraction({"A": "sqrt"})).is_extraction
    assert not validate_extraction(e1, Extraction({"B": "two"})).is_satisfying
    assert not validate_extraction(e1, Extraction({"A": "two"})).is_extraction


def test_scale_costs_and_document(e1):
    doubled = scale_costs(e1, 2.0)
    x = Extraction({"B": "two", "A": "sqrt"})
    assert extraction_cost(doubled, x) == 4.0
    assert extraction_document(e1, x, True).model_dump() == {"choices": {"A": "sqrt", "B": "two"}, "cost": 2.0, "acyclic": True}
