"""
Heuristic tree decompositions of a circuit's undirected underlying graph,
their validation, and conversion to rooted nice tree decompositions.
"""

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import networkx as nx
from loguru import logger

from src.exceptions import InputError
from src.schemas import HEURISTICS, DecompositionDocument
from src.services.circuit import Circuit


def underlying_graph(c: Circuit) -> nx.Graph:
    """Undirected simple graph on the circuit's vertices; self-loops are dropped."""
    graph = nx.Graph()
    graph.add_nodes_from(range(c.num_vertices))
    graph.add_edges_from((s, d) for s, d in c.edges() if s != d)
    return graph


@dataclass
class TreeDecomposition:
    bags: List[frozenset]
    edges: List[Tuple[int, int]]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def to_document(self) -> DecompositionDocument:
        return DecompositionDocument(bags=[sorted(b) for b in self.bags], edges=self.edges, width=self.width)


@dataclass
class DecompositionReport:
    is_tree: bool
    covers_vertices: bool
    covers_edges: bool
    connected: bool
    width: int
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.is_tree and self.covers_vertices and self.covers_edges and self.connected


def _pick_min_fill(adj: Dict[int, Set[int]]) -> int:
    def fill(v: int) -> int:
        nbrs = sorted(adj[v])
        return sum(1 for i, x in enumerate(nbrs) for y in nbrs[i + 1 :] if y not in adj[x])

    return min(adj, key=lambda v: (fill(v), v))


def min_degree_decomposition(g: nx.Graph, heuristic: str = "min-degree") -> TreeDecomposition:
    """
    Eliminate vertices greedily, emitting bag {v} + N(v) per elimination.

    Args:
        g: undirected graph with integer vertices.
        heuristic: "min-degree" (ties to the lowest index) or "min-fill".

    Returns:
        A tree decomposition; components are joined under a shared empty bag.
    """
    if g.number_of_nodes() == 0:
        raise InputError("cannot decompose an empty graph")
    if heuristic not in HEURISTICS:
        raise InputError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")

    adj: Dict[int, Set[int]] = {v: set(g[v]) - {v} for v in g.nodes}
    heap = [(len(nbrs), v) for v, nbrs in adj.items()]
    heapq.heapify(heap)

    order: List[int] = []
    bags: List[frozenset] = []
    while adj:
        if heuristic == "min-fill":
            v = _pick_min_fill(adj)
        else:
            degree, v = heapq.heappop(heap)
            if v not in adj or degree != len(adj[v]):
                continue
        nbrs = adj.pop(v)
        for x in nbrs:
            adj[x].discard(v)
            adj[x].update(nbrs - {x})
        if heuristic == "min-degree":
            for x in nbrs:
                heapq.heappush(heap, (len(adj[x]), x))
        order.append(v)
        bags.append(frozenset(nbrs | {v}))

    position = {v: i for i, v in enumerate(order)}
    edges: List[Tuple[int, int]] = []
    roots: List[int] = []
    for i, v in enumerate(order):
        later = [position[x] for x in bags[i] if x != v]
        if later:
            edges.append((i, min(later)))
        else:
            roots.append(i)
    if len(roots) > 1:
        hub = len(bags)
        bags.append(frozenset())
        edges.extend((r, hub) for r in roots)

    td = TreeDecomposition(bags, edges)
    logger.debug(f"🌳 {heuristic} decomposition: {len(bags)} bags, width {td.width}")
    return td


def validate_decomposition(g: nx.Graph, td: TreeDecomposition) -> DecompositionReport:
    """Tree shape, vertex and edge coverage, and connected occurrence sets of every vertex."""
    violations: List[str] = []

    tree = nx.Graph()
    tree.add_nodes_from(range(len(td.bags)))
    tree.add_edges_from(td.edges)
    is_tree = len(td.bags) > 0 and nx.is_tree(tree)
    if not is_tree:
        violations.append("bag graph is not a tree")

    covered = set().union(*td.bags) if td.bags else set()
    missing = [v for v in g.nodes if v not in covered]
    if missing:
        violations.append(f"vertices in no bag: {sorted(missing)[:10]}")

    uncovered = [(u, v) for u, v in g.edges if u != v and not any(u in b and v in b for b in td.bags)]
    if uncovered:
        violations.append(f"edges in no bag: {uncovered[:10]}")

    connected = True
    for v in sorted(covered):
        holders = [i for i, b in enumerate(td.bags) if v in b]
        if len(holders) > 1 and not nx.is_connected(tree.subgraph(holders)):
            connected = False
            violations.append(f"bags containing {v} are not connected")

    return DecompositionReport(is_tree, not missing, not uncovered, connected, td.width, violations)


class BagKind(str, Enum):
    LEAF = "leaf"
    INSERT = "insert"
    FORGET = "forget"
    JOIN = "join"


@dataclass(frozen=True)
class NiceBag:
    kind: BagKind
    vertices: Tuple[int, ...]  # sorted
    children: Tuple[int, ...] = ()
    vertex: Optional[int] = None  # inserted / forgotten vertex


@dataclass
class NiceTreeDecomposition:
    """Bags are stored bottom-up: every child index is smaller than its parent's."""

    bags: List[NiceBag]

    @property
    def root(self) -> int:
        return len(self.bags) - 1

    @property
    def width(self) -> int:
        return max((len(b.vertices) for b in self.bags), default=0) - 1

    def as_tree_decomposition(self) -> TreeDecomposition:
        edges = [(child, i) for i, bag in enumerate(self.bags) for child in bag.children]
        return TreeDecomposition([frozenset(b.vertices) for b in self.bags], edges)

    def kind_counts(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in BagKind}
        for bag in self.bags:
            counts[bag.kind.value] += 1
        return counts


def check_nice(ntd: NiceTreeDecomposition) -> List[str]:
    """Structural equation of every bag; empty list when all hold."""
    problems: List[str] = []
    parents: Dict[int, int] = {}
    for i, bag in enumerate(ntd.bags):
        here = set(bag.vertices)
        kids = [set(ntd.bags[c].vertices) for c in bag.children]
        for c in bag.children:
            if c >= i:
                problems.append(f"bag {i}: child {c} is not below it")
            if c in parents:
                problems.append(f"bag {c} has two parents")
            parents[c] = i
        if bag.kind is BagKind.LEAF:
            ok = not here and not kids
        elif bag.kind is BagKind.INSERT:
            ok = len(kids) == 1 and bag.vertex not in kids[0] and here == kids[0] | {bag.vertex}
        elif bag.kind is BagKind.FORGET:
            ok = len(kids) == 1 and bag.vertex in kids[0] and here == kids[0] - {bag.vertex}
        else:
            ok = len(kids) == 2 and kids[0] == here and kids[1] == here
        if not ok:
            problems.append(f"bag {i} violates its {bag.kind.value} equation")
    if len(parents) != len(ntd.bags) - 1:
        problems.append("nice decomposition is not a single rooted tree")
    return problems


class _NiceBuilder:
    def __init__(self):
        self.bags: List[NiceBag] = []

    def emit(self, kind: BagKind, vertices, children=(), vertex=None) -> int:
        self.bags.append(NiceBag(kind, tuple(sorted(vertices)), tuple(children), vertex))
        return len(self.bags) - 1

    def leaf(self) -> int:
        return self.emit(BagKind.LEAF, ())

    def morph(self, top: int, target: frozenset) -> int:
        """Forget what ``target`` lacks, then insert what it adds."""
        current = set(self.bags[top].vertices)
        for v in sorted(current - target):
            current.discard(v)
            top = self.emit(BagKind.FORGET, current, (top,), v)
        for v in sorted(target - current):
            current.add(v)
            top = self.emit(BagKind.INSERT, current, (top,), v)
        return top


def to_nice(td: TreeDecomposition, must_contain: int) -> NiceTreeDecomposition:
    """
    Root ``td`` at the lowest-index bag holding ``must_contain`` and expand it into a
    nice decomposition whose final root is exactly {must_contain}.
    """
    holders = [i for i, b in enumerate(td.bags) if must_contain in b]
    if not holders:
        raise InputError(f"no bag contains vertex {must_contain}")
    root = holders[0]

    adjacency: Dict[int, List[int]] = {i: [] for i in range(len(td.bags))}
    for a, b in td.edges:
        adjacency[a].append(b)
        adjacency[b].append(a)

    builder = _NiceBuilder()
    top: Dict[int, int] = {}
    stack: List[Tuple[int, Optional[int], bool]] = [(root, None, False)]
    while stack:
        node, parent, expanded = stack.pop()
        children = [c for c in sorted(adjacency[node]) if c != parent]
        if not expanded:
            stack.append((node, parent, True))
            stack.extend((c, node, False) for c in reversed(children))
            continue
        bag = td.bags[node]
        if not children:
            top[node] = builder.morph(builder.leaf(), bag)
            continue
        branches = [builder.morph(top.pop(c), bag) for c in children]
        current = branches[0]
        for other in branches[1:]:
            current = builder.emit(BagKind.JOIN, bag, (current, other))
        top[node] = current

    builder.morph(top[root], frozenset({must_contain}))
    ntd = NiceTreeDecomposition(builder.bags)
    logger.debug(f"🌳 Nice decomposition: {len(ntd.bags)} bags {ntd.kind_counts()}, width {ntd.width}")
    return ntd


def decompose(c: Circuit, heuristic: str = "min-degree") -> Tuple[nx.Graph, TreeDecomposition]:
    """Underlying graph of ``c`` together with its heuristic decomposition."""
    graph = underlying_graph(c)
    return graph, min_degree_decomposition(graph, heuristic)
