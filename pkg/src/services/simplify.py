"""
Optimum-preserving circuit rewrites, applied to a fixpoint with a replayable log.

The rules run on a mutable working copy whose vertex ids start as the original
dense indices; vertices created by factoring get fresh ids above them. Every
mutation goes through a logging primitive, so each match yields one net-effect
RewriteRecord, and replaying the records on the original reproduces the result.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx
from loguru import logger
from pydantic import ValidationError

from src import config
from src.exceptions import InputError, RecoveryMismatch
from src.schemas import AddedPart, AddedVertex, RemovedPart, RewriteRecordDocument
from src.services.circuit import (
    Circuit,
    Evaluation,
    Kind,
    build_circuit,
    evaluate_from_inputs,
    evaluation_cost,
    is_satisfying,
    prune_free_inputs,
)
from src.utils import Deadline


class RuleId(str, Enum):
    REMOVE_UNREACHABLE = "remove-unreachable"
    CONTRACT_INDEGREE_ONE = "contract-indegree-one"
    CONTRACT_SAME_GATE = "contract-same-gate"
    SAME_GATE_NO_SHORTCUT = "same-gate-no-shortcut"
    FACTORING = "factoring"
    REMOVE_LONE_OR_LOOPS = "remove-lone-or-loops"
    COLLECT_VARIABLES = "collect-variables"


ALL_RULES = tuple(RuleId)


def parse_rules(selection: Iterable[str]) -> Tuple[RuleId, ...]:
    """Accept rule names, ``all`` or ``none`` (comma-separated or as a list)."""
    names = [part.strip() for item in selection for part in item.split(",") if part.strip()]
    if not names or names == ["all"]:
        return ALL_RULES
    if names == ["none"]:
        return ()
    try:
        chosen = {RuleId(name) for name in names}
    except ValueError as e:
        raise InputError(f"unknown rule in {names}; expected one of {[r.value for r in RuleId]}") from e
    return tuple(r for r in RuleId if r in chosen)


@dataclass
class RewriteRecord:
    rule: RuleId
    removed_vertices: List[int] = field(default_factory=list)
    removed_edges: List[Tuple[int, int]] = field(default_factory=list)
    removed_outputs: List[int] = field(default_factory=list)
    added_vertices: List[Tuple[int, Kind, str]] = field(default_factory=list)
    added_edges: List[Tuple[int, int]] = field(default_factory=list)
    added_outputs: List[int] = field(default_factory=list)
    costs: Dict[int, float] = field(default_factory=dict)
    provenance: Dict[int, Optional[int]] = field(default_factory=dict)

    def to_document(self) -> RewriteRecordDocument:
        return RewriteRecordDocument(
            rule=self.rule.value,
            removed=RemovedPart(vertices=self.removed_vertices, edges=self.removed_edges, outputs=self.removed_outputs),
            added=AddedPart(
                vertices=[AddedVertex(id=v, kind=k.value, label=label) for v, k, label in self.added_vertices],
                edges=self.added_edges,
                outputs=self.added_outputs,
                costs={str(v): c for v, c in self.costs.items()},
            ),
            provenance={str(o): (None if t is None else str(t)) for o, t in self.provenance.items()},
        )

    @classmethod
    def from_document(cls, raw: Union[Mapping, RewriteRecordDocument]) -> "RewriteRecord":
        try:
            doc = raw if isinstance(raw, RewriteRecordDocument) else RewriteRecordDocument.model_validate(raw)
            rule = RuleId(doc.rule)
        except (ValidationError, ValueError) as e:
            raise InputError(f"invalid rewrite record: {e}") from e
        return cls(
            rule=rule,
            removed_vertices=list(doc.removed.vertices),
            removed_edges=list(doc.removed.edges),
            removed_outputs=list(doc.removed.outputs),
            added_vertices=[(v.id, Kind(v.kind), v.label or str(v.id)) for v in doc.added.vertices],
            added_edges=list(doc.added.edges),
            added_outputs=list(doc.added.outputs),
            costs={int(v): c for v, c in doc.added.costs.items()},
            provenance={int(o): (None if t is None else int(t)) for o, t in doc.provenance.items()},
        )


@dataclass
class RewriteLog:
    records: List[RewriteRecord]
    surviving: Tuple[int, ...]  # working id of each simplified vertex, in dense order
    provenance: Dict[int, Optional[int]]  # original input -> surviving variable (None: forced 0)
    costs: Dict[int, float]  # surviving variable -> cost
    converged: bool = True

    def to_document(self) -> list:
        return [record.to_document().model_dump(mode="json") for record in self.records]


class _Working:
    """Mutable circuit with stable ids and logging mutation primitives."""

    def __init__(self, c: Circuit):
        self.kinds: Dict[int, Kind] = dict(enumerate(c.kinds))
        self.preds: Dict[int, Set[int]] = {v: set(p) for v, p in enumerate(c.preds)}
        self.succs: Dict[int, Set[int]] = {v: set(s) for v, s in enumerate(c.succs)}
        self.costs: Dict[int, float] = dict(c.costs)
        self.outputs: Set[int] = set(c.outputs)
        self.labels: Dict[int, str] = dict(enumerate(c.labels))
        self.provenance: Dict[int, Optional[int]] = {v: v for v in c.inputs}
        self.members: Dict[int, Set[int]] = {v: {v} for v in c.inputs}
        self.next_id = c.num_vertices
        self.record: Optional[RewriteRecord] = None

    # -- logging primitives -------------------------------------------------

    def begin(self, rule: RuleId) -> None:
        self.record = RewriteRecord(rule)

    def commit(self) -> RewriteRecord:
        record, self.record = self.record, None
        return record

    def add_edge(self, s: int, d: int) -> None:
        if d in self.succs[s]:
            return
        self.succs[s].add(d)
        self.preds[d].add(s)
        rec = self.record
        if (s, d) in rec.removed_edges:
            rec.removed_edges.remove((s, d))
        else:
            rec.added_edges.append((s, d))

    def remove_edge(self, s: int, d: int) -> None:
        if d not in self.succs[s]:
            return
        self.succs[s].discard(d)
        self.preds[d].discard(s)
        rec = self.record
        if (s, d) in rec.added_edges:
            rec.added_edges.remove((s, d))
        else:
            rec.removed_edges.append((s, d))

    def add_vertex(self, kind: Kind, label: str) -> int:
        v = self.next_id
        self.next_id += 1
        self.kinds[v] = kind
        self.preds[v] = set()
        self.succs[v] = set()
        self.labels[v] = label
        self.record.added_vertices.append((v, kind, label))
        return v

    def add_output(self, v: int) -> None:
        if v in self.outputs:
            return
        self.outputs.add(v)
        if v in self.record.removed_outputs:
            self.record.removed_outputs.remove(v)
        else:
            self.record.added_outputs.append(v)

    def remove_output(self, v: int) -> None:
        if v not in self.outputs:
            return
        self.outputs.discard(v)
        if v in self.record.added_outputs:
            self.record.added_outputs.remove(v)
        else:
            self.record.removed_outputs.append(v)

    def set_cost(self, v: int, cost: float) -> None:
        self.costs[v] = cost
        self.record.costs[v] = cost

    def retarget(self, old: int, new: Optional[int]) -> None:
        """Point every original variable merged into ``old`` at ``new``."""
        for original in self.members.pop(old, set()):
            self.provenance[original] = new
            self.record.provenance[original] = new
            if new is not None:
                self.members[new].add(original)

    def remove_vertex(self, v: int) -> None:
        for s in list(self.preds[v]):
            self.remove_edge(s, v)
        for d in list(self.succs[v]):
            self.remove_edge(v, d)
        self.remove_output(v)
        if self.kinds[v] is Kind.INPUT:
            self.retarget(v, None)
            self.costs.pop(v, None)
            self.record.costs.pop(v, None)
        del self.kinds[v], self.preds[v], self.succs[v], self.labels[v]
        added = [entry for entry in self.record.added_vertices if entry[0] == v]
        if added:
            self.record.added_vertices.remove(added[0])
        else:
            self.record.removed_vertices.append(v)

    # -- queries ------------------------------------------------------------

    def ids(self) -> List[int]:
        return sorted(self.kinds)

    def alive(self, v: int) -> bool:
        return v in self.kinds

    def zero_closure(self, start: int) -> Optional[Set[int]]:
        """Vertices forced to 0 once ``start`` is; None if that reaches an output."""
        forced = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self.succs[v]:
                if w in forced:
                    continue
                if self.kinds[w] is Kind.AND or all(p in forced for p in self.preds[w]):
                    forced.add(w)
                    queue.append(w)
        if forced & self.outputs:
            return None
        return forced

    def descendants(self, start: int, depth: int) -> Optional[Set[int]]:
        """Vertices reachable from ``start`` (itself included); None if the cap is hit."""
        seen = {start}
        frontier = [start]
        for _ in range(depth):
            nxt = []
            for v in frontier:
                for w in self.succs[v]:
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            if not nxt:
                return seen
            frontier = nxt
        return None

    def compact(self) -> Tuple[Circuit, Tuple[int, ...]]:
        order = self.ids()
        dense = {v: i for i, v in enumerate(order)}
        edges = [(dense[s], dense[d]) for s in order for d in sorted(self.succs[s])]
        circuit = build_circuit(
            [self.kinds[v] for v in order],
            edges,
            [dense[v] for v in self.outputs],
            {dense[v]: c for v, c in self.costs.items()},
            [self.labels[v] for v in order],
        )
        return circuit, tuple(order)

    # -- replay -------------------------------------------------------------

    def apply(self, record: RewriteRecord) -> None:
        for s, d in record.removed_edges:
            self.succs[s].discard(d)
            self.preds[d].discard(s)
        for v in record.removed_vertices:
            self.outputs.discard(v)
            self.costs.pop(v, None)
            del self.kinds[v], self.preds[v], self.succs[v], self.labels[v]
        for v, kind, label in record.added_vertices:
            self.kinds[v] = kind
            self.preds[v] = set()
            self.succs[v] = set()
            self.labels[v] = label
            self.next_id = max(self.next_id, v + 1)
        for s, d in record.added_edges:
            self.succs[s].add(d)
            self.preds[d].add(s)
        self.outputs.difference_update(record.removed_outputs)
        self.outputs.update(record.added_outputs)
        self.costs.update(record.costs)
        self.provenance.update(record.provenance)


class Simplifier:
    """Runs rule passes over one working circuit; factoring tags persist across passes."""

    def __init__(self, c: Circuit, search_depth: int = config.RULE_SEARCH_DEPTH):
        self.original = c
        self.work = _Working(c)
        self.search_depth = search_depth
        self.factored: Set[int] = set()
        self.records: List[RewriteRecord] = []

    def run_pass(self, rule: RuleId) -> List[RewriteRecord]:
        handler = {
            RuleId.REMOVE_UNREACHABLE: self._remove_unreachable,
            RuleId.CONTRACT_INDEGREE_ONE: self._contract_indegree_one,
            RuleId.CONTRACT_SAME_GATE: self._contract_same_gate,
            RuleId.SAME_GATE_NO_SHORTCUT: self._same_gate_no_shortcut,
            RuleId.FACTORING: self._factoring,
            RuleId.REMOVE_LONE_OR_LOOPS: self._remove_lone_or_loops,
            RuleId.COLLECT_VARIABLES: self._collect_variables,
        }[rule]
        records = handler()
        self.records.extend(records)
        return records

    def result(self, converged: bool = True) -> Tuple[Circuit, RewriteLog]:
        circuit, surviving = self.work.compact()
        costs = {v: self.work.costs[v] for v in surviving if self.work.kinds[v] is Kind.INPUT}
        log = RewriteLog(list(self.records), surviving, dict(self.work.provenance), costs, converged)
        return circuit, log

    # -- rule 1 -------------------------------------------------------------

    def _remove_unreachable(self) -> List[RewriteRecord]:
        w = self.work
        keep = set(w.outputs)
        stack = list(keep)
        while stack:
            v = stack.pop()
            for p in w.preds[v]:
                if p not in keep:
                    keep.add(p)
                    stack.append(p)

        # a true cycle among the dropped vertices would make the recovered evaluation cyclic
        dropped = nx.DiGraph()
        dropped.add_nodes_from(v for v in w.ids() if v not in keep)
        dropped.add_edges_from([(s, d) for s in dropped for d in w.succs[s] if d in dropped])
        for component in nx.strongly_connected_components(dropped):
            v = next(iter(component))
            if len(component) > 1 or dropped.has_edge(v, v):
                for c in component:
                    keep.add(c)
                    keep.update(nx.ancestors(dropped, c))

        doomed = [v for v in w.ids() if v not in keep]
        if not doomed:
            return []
        w.begin(RuleId.REMOVE_UNREACHABLE)
        for v in doomed:
            w.remove_vertex(v)
        return [w.commit()]

    # -- rule 2 -------------------------------------------------------------

    def _contract_indegree_one(self) -> List[RewriteRecord]:
        w = self.work
        touched: Set[int] = set()
        records = []
        for u in w.ids():
            if not w.alive(u) or u in touched or w.kinds[u] is Kind.INPUT or len(w.preds[u]) != 1:
                continue
            (v,) = w.preds[u]
            if v == u or v in touched:
                continue
            w.begin(RuleId.CONTRACT_INDEGREE_ONE)
            for d in sorted(w.succs[u]):
                w.remove_edge(u, d)
                w.add_edge(v, d)
            if u in w.outputs:
                w.add_output(v)
            w.remove_vertex(u)
            touched.update((u, v))
            records.append(w.commit())
        return records

    # -- rule 3 -------------------------------------------------------------

    def _contract_same_gate(self) -> List[RewriteRecord]:
        w = self.work
        touched: Set[int] = set()
        records = []
        for v in w.ids():
            if not w.alive(v) or v in touched or w.kinds[v] is Kind.INPUT or len(w.succs[v]) != 1:
                continue
            (u,) = w.succs[v]
            if u == v or u in touched or w.kinds[u] is not w.kinds[v] or v in w.outputs:
                continue
            w.begin(RuleId.CONTRACT_SAME_GATE)
            for p in sorted(w.preds[v]):
                w.remove_edge(p, v)
                w.add_edge(p, u)
            w.remove_vertex(v)
            touched.update((u, v))
            records.append(w.commit())
        return records

    # -- rule 4 -------------------------------------------------------------

    def _has_same_gate_detour(self, v: int, u: int) -> bool:
        w = self.work
        kind = w.kinds[v]
        seen = {v, u}
        frontier = [x for x in w.succs[v] if x not in seen and w.kinds[x] is kind]
        seen.update(frontier)
        for _ in range(self.search_depth):
            if not frontier:
                return False
            nxt = []
            for x in frontier:
                if u in w.succs[x]:
                    return True
                for y in w.succs[x]:
                    if y not in seen and w.kinds[y] is kind:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return False

    def _same_gate_no_shortcut(self) -> List[RewriteRecord]:
        w = self.work
        touched: Set[int] = set()
        records = []
        for v in w.ids():
            if v in touched or w.kinds[v] is Kind.INPUT:
                continue
            for u in sorted(w.succs[v]):
                if u == v or u in touched or w.kinds[u] is not w.kinds[v]:
                    continue
                if self._has_same_gate_detour(v, u):
                    w.begin(RuleId.SAME_GATE_NO_SHORTCUT)
                    w.remove_edge(v, u)
                    touched.update((u, v))
                    records.append(w.commit())
                    break
        return records

    # -- rule 5 -------------------------------------------------------------

    def _factoring(self) -> List[RewriteRecord]:
        w = self.work
        touched: Set[int] = set()
        records = []
        for u in w.ids():
            if not w.alive(u) or u in touched or u in self.factored or w.kinds[u] is Kind.INPUT:
                continue
            inner = Kind.OR if w.kinds[u] is Kind.AND else Kind.AND
            candidates = [
                v
                for v in sorted(w.preds[u])
                if v != u
                and v not in touched
                and w.kinds[v] is inner
                and w.succs[v] == {u}
                and len(w.preds[v]) >= 2
                and v not in w.outputs
            ]
            if len(candidates) < 2:
                continue
            downstream = w.descendants(u, self.search_depth)
            if downstream is None:
                continue
            shared = sorted(set().union(*(w.preds[v] for v in candidates)))
            for common in shared:
                if common == u or common in touched or common in candidates:
                    continue
                group = [
                    v for v in candidates if common in w.preds[v] and not (w.preds[v] - {common}) & downstream
                ]
                if len(group) < 2:
                    continue
                w.begin(RuleId.FACTORING)
                a = w.add_vertex(w.kinds[u], f"factor-{w.kinds[u].value}:{w.next_id}")
                b = w.add_vertex(inner, f"factor-{inner.value}:{w.next_id}")
                for v in group:
                    w.remove_edge(common, v)
                    w.remove_edge(v, u)
                    w.add_edge(v, a)
                w.add_edge(a, b)
                w.add_edge(common, b)
                w.add_edge(b, u)
                self.factored.add(u)
                touched.update((u, common, a, b, *group))
                records.append(w.commit())
                break
        return records

    # -- rule 6 -------------------------------------------------------------

    def _closing_and_gate(self, u: int) -> Optional[int]:
        """Last AND gate of a shortest all-AND path u -> v1 -> ... -> vn -> u."""
        w = self.work
        seen = {u}
        frontier = [u]
        for _ in range(self.search_depth):
            nxt = []
            for x in frontier:
                for y in sorted(w.succs[x]):
                    if y in seen or w.kinds[y] is not Kind.AND:
                        continue
                    if u in w.succs[y]:
                        return y
                    seen.add(y)
                    nxt.append(y)
            if not nxt:
                return None
            frontier = nxt
        return None

    def _has_private_input(self, victim: int, forced: Set[int]) -> bool:
        """An input of ``victim`` whose consumers all die with it, so recovery leaves it at 0."""
        w = self.work
        return any(
            w.kinds[y] is Kind.INPUT and y not in w.outputs and w.succs[y] <= forced for y in w.preds[victim]
        )

    def _remove_lone_or_loops(self) -> List[RewriteRecord]:
        w = self.work
        touched: Set[int] = set()
        records = []
        for u in w.ids():
            if not w.alive(u) or u in touched or w.kinds[u] is Kind.INPUT:
                continue
            if u in w.succs[u]:
                # an AND gate feeding itself never fires
                victim = u if w.kinds[u] is Kind.AND else None
            elif w.kinds[u] is Kind.OR:
                victim = self._closing_and_gate(u)
            else:
                victim = None
            if victim is None or victim in touched:
                continue
            forced = w.zero_closure(victim)
            if forced is None or forced & touched:
                continue
            if victim != u and not self._has_private_input(victim, forced):
                continue
            w.begin(RuleId.REMOVE_LONE_OR_LOOPS)
            for v in sorted(forced):
                w.remove_vertex(v)
            touched.update(forced)
            touched.add(u)
            records.append(w.commit())
        return records

    # -- rule 7 -------------------------------------------------------------

    def _collect_variables(self) -> List[RewriteRecord]:
        w = self.work
        groups: Dict[frozenset, List[int]] = {}
        for v in w.ids():
            if w.kinds[v] is not Kind.INPUT or v in w.outputs or not w.succs[v]:
                continue
            if all(w.kinds[d] is Kind.AND for d in w.succs[v]):
                groups.setdefault(frozenset(w.succs[v]), []).append(v)
        records = []
        for members in groups.values():
            if len(members) < 2:
                continue
            keep, rest = members[0], members[1:]
            w.begin(RuleId.COLLECT_VARIABLES)
            w.set_cost(keep, w.costs[keep] + sum(w.costs[v] for v in rest))
            for v in rest:
                w.retarget(v, keep)
                w.remove_vertex(v)
            records.append(w.commit())
        return records


def apply_rule(c: Circuit, rule: RuleId) -> Tuple[Circuit, List[RewriteRecord]]:
    """One pass of ``rule`` over all non-overlapping matches."""
    simplifier = Simplifier(c)
    records = simplifier.run_pass(rule)
    if not records:
        return c, []
    circuit, _ = simplifier.result()
    return circuit, records


def simplify_fixpoint(
    c: Circuit,
    enabled: Iterable[RuleId] = ALL_RULES,
    max_passes: int = config.SIMPLIFY_MAX_PASSES,
    deadline: Optional[Deadline] = None,
) -> Tuple[Circuit, RewriteLog]:
    """Cycle through the enabled rules in declaration order until a full cycle changes nothing."""
    enabled = [r for r in RuleId if r in set(enabled)]
    simplifier = Simplifier(c)
    passes = 0
    converged = True
    changed = bool(enabled)
    while changed:
        changed = False
        for rule in enabled:
            if passes >= max_passes:
                converged = False
                break
            if deadline is not None:
                deadline.check("simplify")
            if simplifier.run_pass(rule):
                changed = True
            passes += 1
        if not converged:
            logger.warning(f"⚠️ Simplifier stopped after {passes} passes without reaching a fixpoint")
            break

    circuit, log = simplifier.result(converged)
    logger.info(
        f"✂️ Simplified circuit |V| {c.num_vertices} -> {circuit.num_vertices}, "
        f"|E| {c.num_edges} -> {circuit.num_edges} ({len(log.records)} rewrites, {passes} passes)"
    )
    return circuit, log


def replay_log(original: Circuit, records: Iterable[RewriteRecord]) -> Tuple[Circuit, RewriteLog]:
    """Re-apply logged rewrites to the original circuit."""
    work = _Working(original)
    records = list(records)
    for record in records:
        work.apply(record)
    circuit, surviving = work.compact()
    costs = {v: work.costs[v] for v in surviving if work.kinds[v] is Kind.INPUT}
    return circuit, RewriteLog(records, surviving, dict(work.provenance), costs)


def recover_evaluation(original: Circuit, log: RewriteLog, simplified_eval: Evaluation) -> Evaluation:
    """Map a simplified optimum back to the original circuit via variable provenance."""
    true_vars = {log.surviving[i] for i, b in enumerate(simplified_eval.value) if b and log.surviving[i] in log.costs}
    expected = sum(log.costs[v] for v in true_vars)
    inputs = {v: log.provenance.get(v) in true_vars for v in original.inputs}

    result = evaluate_from_inputs(original, inputs)
    if not (result.acyclic and is_satisfying(original, result.evaluation)):
        result = prune_free_inputs(original, inputs)

    evaluation = result.evaluation
    cost = evaluation_cost(original, evaluation)
    if not is_satisfying(original, evaluation):
        raise RecoveryMismatch("recovered evaluation does not satisfy the original circuit")
    if not result.acyclic:
        raise RecoveryMismatch("recovered evaluation is cyclic")
    if abs(cost - expected) > 1e-9 * max(1.0, abs(expected)):
        raise RecoveryMismatch(f"recovered cost {cost} differs from simplified cost {expected}")
    return evaluation

