"""
Seeded instance generators for tests, the ``check`` batch and the bench harness.

All generators take a ``random.Random`` (or a seed) so every instance is reproducible.
"""

import random
from typing import List, Union

from src.services.circuit import Circuit, Kind, build_circuit
from src.services.egraph import EGraph, ENode, build_egraph

Seed = Union[int, random.Random]


def _rng(seed: Seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def random_egraph(
    seed: Seed,
    max_classes: int = 8,
    max_nodes_per_class: int = 3,
    max_cost: int = 9,
    back_edge_rate: float = 0.2,
) -> EGraph:
    """
    Small random e-graph: dependencies mostly point to later classes, and a
    ``back_edge_rate`` share may point anywhere, which creates cycles.
    """
    rng = _rng(seed)
    num_classes = rng.randint(1, max_classes)
    sizes = [rng.randint(1, max_nodes_per_class) for _ in range(num_classes)]
    first_node = [f"c{i}n0" for i in range(num_classes)]

    nodes: List[ENode] = []
    for ci, size in enumerate(sizes):
        for ni in range(size):
            children = []
            for _ in range(rng.choice((0, 0, 1, 1, 2))):
                if rng.random() < back_edge_rate or ci == num_classes - 1:
                    target = rng.randrange(num_classes)
                else:
                    target = rng.randrange(ci + 1, num_classes)
                children.append(first_node[target])
            nodes.append(ENode(f"c{ci}n{ni}", rng.choice(("f", "g", "h", "k")), f"c{ci}", tuple(children), float(rng.randint(0, max_cost))))

    roots = ["c0"]
    if num_classes > 2 and rng.random() < 0.3:
        roots.append(f"c{rng.randrange(1, num_classes)}")
    return build_egraph(nodes, roots)


def random_circuit(seed: Seed, max_vertices: int = 12, max_cost: int = 9) -> Circuit:
    """Small random cyclic monotone circuit with 1-4 inputs and 1-2 outputs."""
    rng = _rng(seed)
    n = rng.randint(3, max_vertices)
    num_inputs = rng.randint(1, min(4, n - 1))
    kinds = [Kind.INPUT] * num_inputs + [rng.choice((Kind.AND, Kind.OR)) for _ in range(n - num_inputs)]

    edges = []
    for v in range(num_inputs, n):
        for p in rng.sample(range(n), rng.randint(1, min(3, n))):
            if kinds[p] is Kind.INPUT or rng.random() < 0.5 or p < v:
                edges.append((p, v))
        if not any(d == v for _, d in edges):
            edges.append((rng.randrange(num_inputs), v))

    gates = list(range(num_inputs, n))
    outputs = rng.sample(gates, rng.randint(1, min(2, len(gates))))
    costs = {v: float(rng.randint(0, max_cost)) for v in range(num_inputs)}
    return build_circuit(kinds, edges, outputs, costs)


def chain_egraph(length: int, seed: Seed = 0, max_cost: int = 9) -> EGraph:
    """
    Chain of classes of constant width: class i holds a leaf and a step node
    depending on classes i+1 and i+2.
    """
    rng = _rng(seed)
    nodes: List[ENode] = []
    for i in range(length):
        nodes.append(ENode(f"leaf{i}", "const", f"c{i}", (), float(rng.randint(1, max_cost) * 4)))
        children = tuple(f"leaf{j}" for j in (i + 1, i + 2) if j < length)
        if children:
            nodes.append(ENode(f"step{i}", "op", f"c{i}", children, float(rng.randint(0, max_cost))))
    return build_egraph(nodes, ["c0"])


def compiler_like_egraph(seed: Seed, size: int = 200, window: int = 4) -> EGraph:
    """
    Term DAG in the shape compilers produce: operators over recent sub-terms, a few
    equivalent rewrites per class, and no cycles. ``size`` counts e-nodes.
    """
    rng = _rng(seed)
    nodes: List[ENode] = []
    class_nodes: List[str] = []
    ops = ("add", "mul", "shl", "load", "select")
    ci = 0
    while len(nodes) < size:
        cls = f"t{ci}"
        if ci < 3 or rng.random() < 0.15:
            node_id = f"{cls}_const"
            nodes.append(ENode(node_id, "const", cls, (), float(rng.randint(0, 3))))
        else:
            for k in range(rng.choice((1, 1, 2, 3))):
                arity = rng.choice((1, 2, 2))
                lo = max(0, ci - window)
                children = tuple(class_nodes[rng.randrange(lo, ci)] for _ in range(arity))
                nodes.append(ENode(f"{cls}_{k}", rng.choice(ops), cls, children, float(rng.randint(1, 5))))
        class_nodes.append(nodes[-1].id)
        ci += 1
    return build_egraph(nodes, [f"t{ci - 1}"])


def cyclic_trap_egraph(seed: Seed, padding: int = 3) -> EGraph:
    """
    Two classes that cheaply justify each other while their acyclic options are
    expensive, so the cheapest satisfying extraction is cyclic.
    """
    rng = _rng(seed)
    high_a, high_b = rng.randint(10, 30), rng.randint(10, 30)
    nodes = [
        ENode("a_loop", "f", "A", ("b_loop",), float(rng.randint(0, 2))),
        ENode("a_leaf", "a", "A", (), float(high_a)),
        ENode("b_loop", "g", "B", ("a_loop",), float(rng.randint(0, 2))),
        ENode("b_leaf", "b", "B", (), float(high_b)),
    ]
    previous = "a_loop"
    for i in range(padding):
        nodes.append(ENode(f"p{i}", "p", f"P{i}", (previous,), float(rng.randint(0, 5))))
        previous = f"p{i}"
    root = f"P{padding - 1}" if padding else "A"
    if rng.random() < 0.3:
        nodes.append(ENode("root_alt", "r", root, (), float(rng.randint(40, 60))))
    return build_egraph(nodes, [root])
