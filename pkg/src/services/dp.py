"""
Minimum-cost acyclic satisfying evaluation of a weighted cyclic monotone circuit by
dynamic programming over a nice tree decomposition.

A summary of a partial evaluation at a bag X (vertices sorted, addressed by position) is

    values   bitmask of the vertices that are true
    pending  bitmask of vertices with an open existential obligation:
             a true OR gate with no true input seen yet, or a false AND gate
             with no false input seen yet
    reach    per-position bitmask rows of the transitive closure of the true
             subgraph, restricted to X (empty when acyclicity is not enforced)

Universal obligations (true AND, false OR) are checked eagerly on every edge once
both endpoints share a bag, so a forget only has to finalize the pending flag.
"""

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from loguru import logger

from src import config
from src.exceptions import ExtractionError, InputError, UnsatisfiableError
from src.services.circuit import (
    Circuit,
    Evaluation,
    Kind,
    build_circuit,
    evaluation_cost,
    is_acyclic_evaluation,
    is_satisfying,
    is_valid_evaluation,
)
from src.services.treewidth import BagKind, NiceTreeDecomposition, min_degree_decomposition, to_nice, underlying_graph
from src.utils import Deadline

Key = Tuple[int, int, Tuple[int, ...]]


class Entry:
    """Best partial evaluation for one summary, with back-pointers for traceback."""

    __slots__ = ("cost", "prev", "prev2", "vertex", "value")

    def __init__(self, cost: float, prev=None, prev2=None, vertex: Optional[int] = None, value: bool = False):
        self.cost = cost
        self.prev = prev
        self.prev2 = prev2
        self.vertex = vertex
        self.value = value


Table = Dict[Key, Entry]


@dataclass
class DPStats:
    bags: int = 0
    max_table: int = 0
    peak_bag: int = 0
    table_sizes: List[Tuple[int, str, int, int]] = field(default_factory=list)


@dataclass
class OptimalResult:
    evaluation: Evaluation
    cost: float
    acyclic: bool
    stats: DPStats


def add_output_gate(c: Circuit) -> Tuple[Circuit, int]:
    """Append an AND gate fed by every output; it becomes the only output."""
    if not c.outputs:
        raise InputError("circuit has no outputs")
    u_out = c.num_vertices
    edges = list(c.edges()) + [(o, u_out) for o in c.outputs]
    circuit = build_circuit(list(c.kinds) + [Kind.AND], edges, [u_out], c.costs, list(c.labels) + ["u_out"])
    return circuit, u_out


def _insert_bit(mask: int, pos: int, bit: int) -> int:
    low = mask & ((1 << pos) - 1)
    return low | (bit << pos) | ((mask >> pos) << (pos + 1))


def _delete_bit(mask: int, pos: int) -> int:
    low = mask & ((1 << pos) - 1)
    return low | ((mask >> (pos + 1)) << pos)


def _close(rows: List[int]) -> Optional[List[int]]:
    """Transitive closure on bit rows; None if it becomes reflexive anywhere."""
    n = len(rows)
    for k in range(n):
        bit = 1 << k
        row_k = rows[k]
        for i in range(n):
            if rows[i] & bit:
                rows[i] |= row_k
    if any(rows[i] >> i & 1 for i in range(n)):
        return None
    return rows


def _offer(table: Table, key: Key, entry: Entry) -> None:
    best = table.get(key)
    if best is None or entry.cost < best.cost:
        table[key] = entry


def handle_leaf() -> Table:
    """The empty summary at cost 0."""
    return {(0, 0, ()): Entry(0.0)}


def handle_insert(
    table: Table,
    bag: Sequence[int],
    u: int,
    c: Circuit,
    enforce_acyclic: bool = True,
    track_justification: bool = True,
) -> Table:
    """Extend every child entry with u = 0 and u = 1. ``bag`` is the new (sorted) bag."""
    pos = bisect_left(bag, u)
    kind = c.kinds[u]
    pred_set, succ_set = set(c.preds[u]), set(c.succs[u])
    self_loop = u in pred_set
    preds = [(j, bag[j]) for j in range(len(bag)) if j != pos and bag[j] in pred_set]
    succs = [(j, bag[j]) for j in range(len(bag)) if j != pos and bag[j] in succ_set]
    in_mask = sum(1 << j for j, _ in preds)
    out_mask = sum(1 << j for j, _ in succs)
    cost_u = c.costs.get(u, 0.0) if kind is Kind.INPUT else 0.0

    result: Table = {}
    for (values, pending, reach), parent in table.items():
        values = _insert_bit(values, pos, 0)
        pending = _insert_bit(pending, pos, 0)
        for b in (0, 1):
            vals = values | (b << pos)
            if self_loop and b == 1 and enforce_acyclic:
                continue

            # universal obligations of u over its bag inputs
            if kind is Kind.AND and b == 1 and (in_mask & ~vals):
                continue
            if kind is Kind.OR and b == 0 and (in_mask & vals):
                continue
            # universal obligations of bag consumers of u
            ok = True
            for j, w in succs:
                wk, wv = c.kinds[w], vals >> j & 1
                if (wk is Kind.AND and wv == 1 and b == 0) or (wk is Kind.OR and wv == 0 and b == 1):
                    ok = False
                    break
            if not ok:
                continue

            pend = pending
            if track_justification:
                if (kind is Kind.OR and b == 1) or (kind is Kind.AND and b == 0):
                    witnesses = in_mask & vals if b == 1 else in_mask & ~vals
                    if not witnesses and not self_loop:
                        pend |= 1 << pos
                for j, w in succs:
                    wk, wv = c.kinds[w], vals >> j & 1
                    if (wk is Kind.OR and wv == 1 and b == 1) or (wk is Kind.AND and wv == 0 and b == 0):
                        pend &= ~(1 << j)

            rows: Tuple[int, ...] = ()
            if enforce_acyclic:
                grown = [_insert_bit(r, pos, 0) for r in reach]
                grown.insert(pos, 0)
                if b == 1:
                    sources = in_mask & vals
                    targets = out_mask & vals
                    for j in range(len(grown)):
                        if grown[j] & sources:
                            sources |= 1 << j
                        if targets >> j & 1:
                            targets |= grown[j]
                    if sources & targets:
                        continue
                    grown[pos] = targets
                    for j in range(len(grown)):
                        if sources >> j & 1:
                            grown[j] |= targets | (1 << pos)
                rows = tuple(grown)

            _offer(result, (vals, pend, rows), Entry(parent.cost + b * cost_u, parent, None, u, bool(b)))
    return result


def handle_forget(table: Table, bag: Sequence[int], u: int) -> Table:
    """Drop entries with u's obligation still open, then project u out. ``bag`` is the child bag."""
    pos = bisect_left(bag, u)
    result: Table = {}
    for (values, pending, reach), entry in table.items():
        if pending >> pos & 1:
            continue
        rows = tuple(_delete_bit(r, pos) for i, r in enumerate(reach) if i != pos)
        _offer(result, (_delete_bit(values, pos), _delete_bit(pending, pos), rows), entry)
    return result


def handle_join(left: Table, right: Table, bag: Sequence[int], c: Circuit, enforce_acyclic: bool = True) -> Table:
    """Merge entries that agree on the bag's values; shared true inputs are counted once."""
    input_costs = [(j, c.costs[v]) for j, v in enumerate(bag) if c.kinds[v] is Kind.INPUT]
    by_values: Dict[int, List[Tuple[Key, Entry]]] = {}
    for key, entry in right.items():
        by_values.setdefault(key[0], []).append((key, entry))

    result: Table = {}
    for (values, pending, reach), entry in left.items():
        matches = by_values.get(values)
        if not matches:
            continue
        shared = sum(cost for j, cost in input_costs if values >> j & 1)
        for (_, pending_r, reach_r), entry_r in matches:
            rows: Tuple[int, ...] = ()
            if enforce_acyclic:
                closed = _close([a | b for a, b in zip(reach, reach_r)])
                if closed is None:
                    continue
                rows = tuple(closed)
            cost = entry.cost + entry_r.cost - shared
            _offer(result, (values, pending & pending_r, rows), Entry(cost, entry, entry_r))
    return result


def _traceback(root: Entry, n: int) -> List[bool]:
    value = [False] * n
    stack = [root]
    while stack:
        entry = stack.pop()
        if entry.vertex is not None:
            value[entry.vertex] = entry.value
        if entry.prev is not None:
            stack.append(entry.prev)
        if entry.prev2 is not None:
            stack.append(entry.prev2)
    return value


def run_dp(
    c: Circuit,
    ntd: NiceTreeDecomposition,
    enforce_acyclic: bool = True,
    deadline: Optional[Deadline] = None,
    track_justification: bool = True,
) -> OptimalResult:
    """
    Bottom-up pass over ``ntd`` (a nice decomposition of ``c`` rooted at {u_out}).

    Raises:
        UnsatisfiableError: no root entry has u_out true.
        PipelineTimeout: ``deadline`` expired between bags.
    """
    root_bag = ntd.bags[ntd.root]
    if len(root_bag.vertices) != 1:
        raise InputError("nice decomposition must be rooted at a single output vertex")
    (u_out,) = root_bag.vertices

    stats = DPStats(bags=len(ntd.bags))
    tables: List[Optional[Table]] = [None] * len(ntd.bags)
    for i, bag in enumerate(ntd.bags):
        if deadline is not None:
            deadline.check("dp")
        if bag.kind is BagKind.LEAF:
            table = handle_leaf()
        elif bag.kind is BagKind.INSERT:
            table = handle_insert(tables[bag.children[0]], bag.vertices, bag.vertex, c, enforce_acyclic, track_justification)
        elif bag.kind is BagKind.FORGET:
            child = ntd.bags[bag.children[0]]
            table = handle_forget(tables[bag.children[0]], child.vertices, bag.vertex)
        else:
            left, right = bag.children
            table = handle_join(tables[left], tables[right], bag.vertices, c, enforce_acyclic)
        for child in bag.children:
            tables[child] = None
        tables[i] = table

        k = len(bag.vertices)
        if config.DEBUG_MODE:
            assert len(table) <= 3**k * 2 ** (k * k), f"table at bag {i} exceeds its summary ceiling"
        stats.max_table = max(stats.max_table, len(table))
        stats.peak_bag = max(stats.peak_bag, k)
        stats.table_sizes.append((i, bag.kind.value, k, len(table)))
        logger.trace(f"bag {i} {bag.kind.value} |X|={k} entries={len(table)}")

    best: Optional[Entry] = None
    for (values, _, _), entry in tables[ntd.root].items():
        if values & 1 and (best is None or entry.cost < best.cost):
            best = entry
    if best is None:
        raise UnsatisfiableError("no acyclic satisfying evaluation exists" if enforce_acyclic else "circuit is unsatisfiable")

    evaluation = Evaluation(tuple(_traceback(best, c.num_vertices)))
    acyclic = enforce_acyclic or is_acyclic_evaluation(c, evaluation)
    if track_justification:
        _check_result(c, evaluation, best.cost, enforce_acyclic)
    logger.debug(f"🧮 DP done: {stats.bags} bags, max table {stats.max_table}, cost {best.cost:g}")
    return OptimalResult(evaluation, best.cost, acyclic, stats)


def _check_result(c: Circuit, evaluation: Evaluation, cost: float, enforce_acyclic: bool) -> None:
    if not is_valid_evaluation(c, evaluation):
        raise ExtractionError("dynamic program reconstructed an invalid evaluation")
    if not is_satisfying(c, evaluation):
        raise ExtractionError("dynamic program reconstructed a non-satisfying evaluation")
    if enforce_acyclic and not is_acyclic_evaluation(c, evaluation):
        raise ExtractionError("dynamic program reconstructed a cyclic evaluation")
    actual = evaluation_cost(c, evaluation)
    if abs(actual - cost) > 1e-9 * max(1.0, abs(cost)):
        raise ExtractionError(f"dynamic program cost {cost} disagrees with its evaluation ({actual})")


def solve(
    c: Circuit,
    heuristic: str = "min-degree",
    enforce_acyclic: bool = True,
    deadline: Optional[Deadline] = None,
) -> OptimalResult:
    """add_output_gate, decompose, make nice and run the DP; the evaluation is over ``c``."""
    extended, u_out = add_output_gate(c)
    td = min_degree_decomposition(underlying_graph(extended), heuristic)
    ntd = to_nice(td, u_out)
    if deadline is not None:
        deadline.check("decompose")
    result = run_dp(extended, ntd, enforce_acyclic, deadline)
    evaluation = Evaluation(result.evaluation.value[: c.num_vertices])
    return OptimalResult(evaluation, result.cost, result.acyclic, result.stats)
