"""
E-graph data model, extraction-gym JSON ingestion, and extraction checks.

E-node and e-class ids are opaque strings; ``node_index`` / ``class_index``
intern them into dense integers for the circuit layer.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx
from loguru import logger
from pydantic import ValidationError

from src.exceptions import InputError
from src.schemas import EGraphDocument, ExtractionDocument


@dataclass(frozen=True)
class ENode:
    id: str
    op: str
    eclass: str
    children: Tuple[str, ...]  # child e-node ids, original order (rendering only)
    cost: float


@dataclass(frozen=True)
class EGraph:
    nodes: Dict[str, ENode]
    classes: Dict[str, Tuple[str, ...]]
    deps: Dict[str, Tuple[str, ...]]  # e-node -> dependency e-classes, duplicates collapsed
    roots: Tuple[str, ...]
    node_index: Dict[str, int] = field(init=False, repr=False, compare=False)
    class_index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "node_index", {n: i for i, n in enumerate(self.nodes)})
        object.__setattr__(self, "class_index", {c: i for i, c in enumerate(self.classes)})

    def cost(self, node_id: str) -> float:
        return self.nodes[node_id].cost

    def class_of(self, node_id: str) -> str:
        return self.nodes[node_id].eclass

    @property
    def num_edges(self) -> int:
        return sum(len(d) for d in self.deps.values())


@dataclass(frozen=True)
class Extraction:
    """A choice function on e-classes: class id -> chosen e-node id."""

    choice: Dict[str, str]

    @property
    def domain(self) -> frozenset:
        return frozenset(self.choice)


@dataclass
class ValidityReport:
    is_extraction: bool
    is_satisfying: bool
    is_acyclic: bool
    is_minimal: bool
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.is_extraction and self.is_satisfying and self.is_acyclic and self.is_minimal


def build_egraph(nodes: List[ENode], roots: List[str]) -> EGraph:
    """Assemble an EGraph from e-nodes, checking the structural invariants."""
    by_id: Dict[str, ENode] = {}
    classes: Dict[str, List[str]] = {}
    for node in nodes:
        if node.id in by_id:
            raise InputError(f"duplicate e-node id {node.id!r}")
        if not math.isfinite(node.cost):
            raise InputError(f"non-finite cost on e-node {node.id!r}")
        if node.cost < 0:
            raise InputError(f"negative cost on e-node {node.id!r}")
        by_id[node.id] = node
        classes.setdefault(node.eclass, []).append(node.id)

    deps: Dict[str, Tuple[str, ...]] = {}
    for node in nodes:
        seen: Dict[str, None] = {}
        for child in node.children:
            if child not in by_id:
                raise InputError(f"e-node {node.id!r} references unknown child {child!r}")
            seen.setdefault(by_id[child].eclass, None)
        deps[node.id] = tuple(seen)

    if not roots:
        raise InputError("root_eclasses is empty")
    for root in roots:
        if root not in classes:
            raise InputError(f"root e-class {root!r} does not exist")

    return EGraph(
        nodes=by_id,
        classes={c: tuple(members) for c, members in classes.items()},
        deps=deps,
        roots=tuple(dict.fromkeys(roots)),
    )


def parse_egraph(text: Union[str, bytes, Mapping]) -> EGraph:
    """Parse extraction-gym JSON (UTF-8 text, bytes, or an already-decoded object)."""
    try:
        raw = json.loads(text) if isinstance(text, (str, bytes, bytearray)) else text
        doc = EGraphDocument.model_validate(raw)
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON: {e}") from e
    except ValidationError as e:
        raise InputError(f"invalid e-graph document: {e}") from e

    for class_id, data in doc.class_data.items():
        for node_id in data.nodes or []:
            entry = doc.nodes.get(node_id)
            if entry is None:
                raise InputError(f"class {class_id!r} lists unknown e-node {node_id!r}")
            if entry.eclass != class_id:
                raise InputError(
                    f"e-node {node_id!r} listed under class {class_id!r} but declares class {entry.eclass!r}"
                )

    nodes = [
        ENode(id=node_id, op=entry.op, eclass=entry.eclass, children=tuple(entry.children), cost=float(entry.cost))
        for node_id, entry in doc.nodes.items()
    ]
    graph = build_egraph(nodes, doc.root_eclasses)
    logger.debug(f"📦 Parsed e-graph: {len(graph.nodes)} e-nodes, {len(graph.classes)} e-classes")
    return graph


def render_egraph(g: EGraph) -> dict:
    """Canonical extraction-gym rendering; parse_egraph(render_egraph(g)) == g."""
    return {
        "nodes": {
            n.id: {"op": n.op, "children": list(n.children), "eclass": n.eclass, "cost": n.cost}
            for n in g.nodes.values()
        },
        "root_eclasses": list(g.roots),
    }


def scale_costs(g: EGraph, factor: float) -> EGraph:
    nodes = [ENode(n.id, n.op, n.eclass, n.children, n.cost * factor) for n in g.nodes.values()]
    return build_egraph(nodes, list(g.roots))


def extraction_cost(g: EGraph, x: Extraction) -> float:
    """Sum of the chosen e-nodes' costs; each chosen node counts once."""
    return float(sum(g.cost(node_id) for node_id in set(x.choice.values())))


def selected_graph(g: EGraph, x: Extraction) -> nx.DiGraph:
    """Class-level graph of selected paths: C -> C' when choice(C) depends on C'."""
    graph = nx.DiGraph()
    graph.add_nodes_from(x.choice)
    for class_id, node_id in x.choice.items():
        if node_id not in g.nodes:
            continue
        for dep in g.deps[node_id]:
            if dep in x.choice:
                graph.add_edge(class_id, dep)
    return graph


def reachable_classes(g: EGraph, x: Extraction) -> set:
    """Classes in dom(x) reachable from the roots through selected paths."""
    graph = selected_graph(g, x)
    seen = set()
    for root in g.roots:
        if root in x.choice:
            seen.add(root)
            seen.update(nx.descendants(graph, root))
    return seen


def restrict(x: Extraction, classes: set) -> Extraction:
    return Extraction({c: n for c, n in x.choice.items() if c in classes})


def validate_extraction(g: EGraph, x: Extraction) -> ValidityReport:
    """
    Check closure, root coverage, acyclicity of the selected paths and minimality.

    Never raises; every failed property adds a line to ``violations``.
    """
    violations: List[str] = []

    is_extraction = True
    for class_id, node_id in x.choice.items():
        if class_id not in g.classes:
            violations.append(f"unknown e-class {class_id!r}")
            is_extraction = False
            continue
        if node_id not in g.nodes or g.class_of(node_id) != class_id:
            violations.append(f"{node_id!r} is not a member of e-class {class_id!r}")
            is_extraction = False
            continue
        for dep in g.deps[node_id]:
            if dep not in x.choice:
                violations.append(f"{node_id!r} depends on {dep!r}, which has no choice")
                is_extraction = False

    missing = [r for r in g.roots if r not in x.choice]
    is_satisfying = not missing
    for root in missing:
        violations.append(f"root e-class {root!r} is not covered")

    graph = selected_graph(g, x)
    is_acyclic = nx.is_directed_acyclic_graph(graph)
    if not is_acyclic:
        cycle = nx.find_cycle(graph)
        violations.append("selected path cycle: " + " -> ".join(str(u) for u, _ in cycle))

    is_minimal = False
    if is_extraction and is_satisfying:
        extra = set(x.choice) - reachable_classes(g, x)
        is_minimal = not extra
        if extra:
            violations.append(f"classes not needed by any root: {sorted(extra)}")

    return ValidityReport(is_extraction, is_satisfying, is_acyclic, is_minimal, violations)


def render_term(g: EGraph, x: Extraction, root: Optional[str] = None, max_depth: int = 64) -> str:
    """Debug printer for the extracted term rooted at ``root`` (default: first root)."""

    def show(class_id: str, depth: int) -> str:
        node = g.nodes[x.choice[class_id]]
        label = node.op or node.id
        if not node.children:
            return label
        if depth >= max_depth:
            return f"{label}(...)"
        args = ", ".join(show(g.class_of(child), depth + 1) for child in node.children)
        return f"{label}({args})"

    return show(root or g.roots[0], 0)


def extraction_document(g: EGraph, x: Extraction, acyclic: bool) -> ExtractionDocument:
    """Wire form of an extraction: chosen e-node per e-class, total cost and acyclicity."""
    return ExtractionDocument(choices=dict(sorted(x.choice.items())), cost=extraction_cost(g, x), acyclic=acyclic)
