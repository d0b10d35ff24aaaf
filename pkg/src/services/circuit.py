"""
Weighted cyclic monotone circuits: model, evaluation semantics, JSON interchange,
and the e-graph <-> circuit translation with its bijection on solutions.

Vertices are dense integers. Inputs are exactly the vertices of in-degree 0 and
carry costs; every other vertex is an AND or OR gate.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
from loguru import logger
from pydantic import ValidationError

from src.exceptions import InputError, MalformedEvaluation
from src.schemas import CircuitDocument, CircuitVertex
from src.services.egraph import EGraph, Extraction


class Kind(str, Enum):
    INPUT = "input"
    AND = "and"
    OR = "or"


@dataclass(frozen=True)
class Circuit:
    kinds: Tuple[Kind, ...]
    preds: Tuple[Tuple[int, ...], ...]
    succs: Tuple[Tuple[int, ...], ...]
    outputs: Tuple[int, ...]
    costs: Dict[int, float]
    labels: Tuple[str, ...]

    @property
    def num_vertices(self) -> int:
        return len(self.kinds)

    @property
    def num_edges(self) -> int:
        return sum(len(p) for p in self.preds)

    @property
    def inputs(self) -> List[int]:
        return [v for v, k in enumerate(self.kinds) if k is Kind.INPUT]

    def edges(self) -> Iterable[Tuple[int, int]]:
        for v, ps in enumerate(self.preds):
            for p in ps:
                yield p, v

    def cost(self, v: int) -> float:
        return self.costs.get(v, 0.0)

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.num_vertices))
        graph.add_edges_from(self.edges())
        return graph


def build_circuit(
    kinds: Sequence[Kind],
    edges: Iterable[Tuple[int, int]],
    outputs: Iterable[int],
    costs: Mapping[int, float],
    labels: Optional[Sequence[str]] = None,
) -> Circuit:
    """Build a circuit from raw parts, checking the well-formedness invariants."""
    n = len(kinds)
    preds: List[Dict[int, None]] = [dict() for _ in range(n)]
    succs: List[Dict[int, None]] = [dict() for _ in range(n)]
    for src, dst in edges:
        if not (0 <= src < n and 0 <= dst < n):
            raise InputError(f"edge ({src}, {dst}) out of range")
        preds[dst].setdefault(src, None)
        succs[src].setdefault(dst, None)

    for v, kind in enumerate(kinds):
        if kind is Kind.INPUT and preds[v]:
            raise InputError(f"input vertex {v} has incoming edges")
        if kind is not Kind.INPUT and not preds[v]:
            raise InputError(f"{kind.value} gate {v} has no inputs")

    clean_costs: Dict[int, float] = {}
    for v, kind in enumerate(kinds):
        if kind is Kind.INPUT:
            cost = float(costs.get(v, 0.0))
            if cost < 0 or cost != cost or cost == float("inf"):
                raise InputError(f"input vertex {v} has invalid cost {cost}")
            clean_costs[v] = cost

    out = tuple(sorted(set(outputs)))
    for v in out:
        if not 0 <= v < n:
            raise InputError(f"output {v} out of range")

    return Circuit(
        kinds=tuple(kinds),
        preds=tuple(tuple(sorted(p)) for p in preds),
        succs=tuple(tuple(sorted(s)) for s in succs),
        outputs=out,
        costs=clean_costs,
        labels=tuple(labels) if labels is not None else tuple(str(v) for v in range(n)),
    )


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def circuit_to_document(c: Circuit) -> dict:
    """Circuit JSON keyed by vertex labels; only inputs carry a cost."""
    doc = CircuitDocument(
        vertices=[
            CircuitVertex(id=c.labels[v], kind=kind.value, cost=c.costs[v] if kind is Kind.INPUT else None)
            for v, kind in enumerate(c.kinds)
        ],
        edges=[(c.labels[s], c.labels[d]) for s, d in c.edges()],
        outputs=[c.labels[v] for v in c.outputs],
    )
    return doc.model_dump(mode="json", exclude_none=True)


def circuit_from_document(raw: Union[Mapping, CircuitDocument]) -> Circuit:
    try:
        doc = raw if isinstance(raw, CircuitDocument) else CircuitDocument.model_validate(raw)
    except ValidationError as e:
        raise InputError(f"invalid circuit document: {e}") from e

    index: Dict[str, int] = {}
    for vertex in doc.vertices:
        key = str(vertex.id)
        if key in index:
            raise InputError(f"duplicate vertex id {vertex.id!r}")
        index[key] = len(index)

    def lookup(vid) -> int:
        try:
            return index[str(vid)]
        except KeyError:
            raise InputError(f"unknown vertex id {vid!r}") from None

    kinds = [Kind(vertex.kind) for vertex in doc.vertices]
    costs = {i: vertex.cost if vertex.cost is not None else 0.0 for i, vertex in enumerate(doc.vertices)}
    edges = [(lookup(s), lookup(d)) for s, d in doc.edges]
    outputs = [lookup(v) for v in doc.outputs]
    return build_circuit(kinds, edges, outputs, costs, labels=list(index))


# ---------------------------------------------------------------------------
# Evaluation semantics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Evaluation:
    value: Tuple[bool, ...]

    def true_vertices(self) -> List[int]:
        return [v for v, b in enumerate(self.value) if b]


@dataclass(frozen=True)
class FixpointResult:
    evaluation: Evaluation
    acyclic: bool


def _gate_holds(c: Circuit, value: Sequence[bool], v: int) -> bool:
    kind = c.kinds[v]
    if kind is Kind.INPUT:
        return True
    if kind is Kind.AND:
        return value[v] == all(value[p] for p in c.preds[v])
    return value[v] == any(value[p] for p in c.preds[v])


def is_valid_evaluation(c: Circuit, a: Evaluation) -> bool:
    """Every gate agrees with its inputs (AND of its in-neighbors, OR of them)."""
    if len(a.value) != c.num_vertices:
        return False
    return all(_gate_holds(c, a.value, v) for v in range(c.num_vertices))


def is_satisfying(c: Circuit, a: Evaluation) -> bool:
    """All outputs are true."""
    return all(a.value[v] for v in c.outputs)


def is_acyclic_evaluation(c: Circuit, a: Evaluation) -> bool:
    true_set = a.true_vertices()
    return nx.is_directed_acyclic_graph(c.to_networkx().subgraph(true_set))


def evaluation_cost(c: Circuit, a: Evaluation) -> float:
    return float(sum(c.costs[v] for v in c.inputs if a.value[v]))


def least_fixpoint(c: Circuit, true_inputs: Iterable[int]) -> List[bool]:
    """Fire AND gates once all inputs are true and OR gates once any input is."""
    value = [False] * c.num_vertices
    missing = [len(p) for p in c.preds]
    queue = deque()
    for v in true_inputs:
        if c.kinds[v] is Kind.INPUT and not value[v]:
            value[v] = True
            queue.append(v)
    while queue:
        v = queue.popleft()
        for w in c.succs[v]:
            if value[w]:
                continue
            missing[w] -= 1
            if c.kinds[w] is Kind.OR or missing[w] == 0:
                value[w] = True
                queue.append(w)
    return value


def evaluate_from_inputs(c: Circuit, inputs: Mapping[int, bool]) -> FixpointResult:
    """Unique acyclic evaluation extending ``inputs`` (least fixpoint), flagged if cyclic."""
    missing = [v for v in c.inputs if v not in inputs]
    if missing:
        raise InputError(f"input assignment is missing vertices {missing[:5]}")
    evaluation = Evaluation(tuple(least_fixpoint(c, [v for v, b in inputs.items() if b])))
    return FixpointResult(evaluation, is_acyclic_evaluation(c, evaluation))


def prune_free_inputs(c: Circuit, inputs: Mapping[int, bool]) -> FixpointResult:
    """
    Turn off zero-cost true inputs one at a time while the least fixpoint stays
    satisfying, so every remaining true input is needed. The cost never changes.
    """
    current = dict(inputs)
    result = evaluate_from_inputs(c, current)
    for v in sorted(current):
        if not current[v] or c.costs[v] != 0:
            continue
        current[v] = False
        trial = evaluate_from_inputs(c, current)
        if is_satisfying(c, trial.evaluation):
            result = trial
        else:
            current[v] = True
    return result


def _largest_fixpoint_without(c: Circuit, true_set: set, dropped: int) -> set:
    """Greatest self-supporting subset of ``true_set`` that excludes ``dropped``."""
    current = set(true_set)
    current.discard(dropped)
    queue = deque(w for w in c.succs[dropped] if w in current)
    while queue:
        v = queue.popleft()
        if v not in current:
            continue
        kind = c.kinds[v]
        if kind is Kind.AND and any(p not in current for p in c.preds[v]):
            supported = False
        elif kind is Kind.OR and not any(p in current for p in c.preds[v]):
            supported = False
        else:
            supported = True
        if not supported:
            current.discard(v)
            queue.extend(w for w in c.succs[v] if w in current)
    return current


def is_minimal(c: Circuit, a: Evaluation) -> bool:
    """
    No proper subset of the true vertices forms a valid satisfying evaluation.

    Each true vertex is tentatively dropped and the zero propagated to the gates
    that lose their support; a surviving set that is itself a valid satisfying
    evaluation is a witness of non-minimality. Exact for acyclic evaluations.
    """
    if not (is_valid_evaluation(c, a) and is_satisfying(c, a)):
        return False
    true_set = set(a.true_vertices())
    order = sorted(true_set, key=lambda v: (c.kinds[v] is not Kind.INPUT, v))
    for dropped in order:
        remaining = _largest_fixpoint_without(c, true_set, dropped)
        candidate = Evaluation(tuple(v in remaining for v in range(c.num_vertices)))
        if is_valid_evaluation(c, candidate) and is_satisfying(c, candidate):
            return False
    return True


def drop_free_inputs(c: Circuit, a: Evaluation) -> Evaluation:
    """
    Cyclic counterpart of prune_free_inputs: switch off zero-cost true inputs one at
    a time, keeping the greatest self-supporting remainder while it stays satisfying.
    """
    true_set = set(a.true_vertices())
    for v in sorted(true_set):
        if c.kinds[v] is not Kind.INPUT or c.costs[v] != 0 or v not in true_set:
            continue
        remaining = _largest_fixpoint_without(c, true_set, v)
        candidate = Evaluation(tuple(w in remaining for w in range(c.num_vertices)))
        if is_satisfying(c, candidate):
            true_set = remaining
    return Evaluation(tuple(w in true_set for w in range(c.num_vertices)))


# ---------------------------------------------------------------------------
# E-graph translation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NodeMap:
    node_input: Dict[str, int]
    node_and: Dict[str, int]
    class_or: Dict[str, int]
    vertex_origin: Dict[int, Tuple[str, str]] = field(repr=False)  # vertex -> (role, node or class id)
    node_class: Dict[str, str] = field(repr=False)


def egraph_to_circuit(g: EGraph) -> Tuple[Circuit, NodeMap]:
    """x_u -> AND_u -> OR_C for u in C, and OR_C' -> AND_u for each dependency (u, C')."""
    kinds: List[Kind] = []
    labels: List[str] = []
    costs: Dict[int, float] = {}
    node_input: Dict[str, int] = {}
    node_and: Dict[str, int] = {}
    class_or: Dict[str, int] = {}
    origin: Dict[int, Tuple[str, str]] = {}

    for node_id, node in g.nodes.items():
        x = len(kinds)
        kinds.append(Kind.INPUT)
        labels.append(f"x:{node_id}")
        costs[x] = node.cost
        node_input[node_id] = x
        origin[x] = ("input", node_id)

        gate = len(kinds)
        kinds.append(Kind.AND)
        labels.append(f"and:{node_id}")
        node_and[node_id] = gate
        origin[gate] = ("and", node_id)

    for class_id in g.classes:
        gate = len(kinds)
        kinds.append(Kind.OR)
        labels.append(f"or:{class_id}")
        class_or[class_id] = gate
        origin[gate] = ("or", class_id)

    edges: List[Tuple[int, int]] = []
    for node_id, node in g.nodes.items():
        edges.append((node_input[node_id], node_and[node_id]))
        edges.append((node_and[node_id], class_or[node.eclass]))
        for dep in g.deps[node_id]:
            edges.append((class_or[dep], node_and[node_id]))

    circuit = build_circuit(kinds, edges, [class_or[r] for r in g.roots], costs, labels)
    mapping = NodeMap(node_input, node_and, class_or, origin, {n: g.class_of(n) for n in g.nodes})
    logger.debug(f"🔌 Converted e-graph to circuit: |V|={circuit.num_vertices}, |E|={circuit.num_edges}")
    return circuit, mapping


def evaluation_to_extraction(c: Circuit, m: NodeMap, a: Evaluation) -> Extraction:
    choice: Dict[str, str] = {}
    for node_id, gate in m.node_and.items():
        if not a.value[gate]:
            continue
        class_id = m.node_class[node_id]
        if class_id in choice:
            raise MalformedEvaluation(
                f"e-class {class_id!r} has two true AND gates ({choice[class_id]!r}, {node_id!r})"
            )
        choice[class_id] = node_id
    return Extraction(choice)


def extraction_to_evaluation(g: EGraph, m: NodeMap, x: Extraction) -> Evaluation:
    value = [False] * (len(m.node_input) + len(m.node_and) + len(m.class_or))
    for class_id, node_id in x.choice.items():
        value[m.node_input[node_id]] = True
        value[m.node_and[node_id]] = True
        value[m.class_or[class_id]] = True
    return Evaluation(tuple(value))
