"""
Brute-force reference solvers for small instances.

Each one enumerates the solution space straight from the definitions; the tests
and the `check` command compare the dynamic program and the simplifier against them.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

from loguru import logger

from src import config
from src.exceptions import InstanceTooLarge
from src.services.circuit import (
    Circuit,
    Evaluation,
    evaluate_from_inputs,
    evaluation_cost,
    is_acyclic_evaluation,
    is_satisfying,
    is_valid_evaluation,
)
from src.services.egraph import EGraph, Extraction, extraction_cost, validate_extraction

_EPS = 1e-9


@dataclass
class OracleResult:
    optimum: Optional[float]  # None: unsatisfiable
    witnesses: List = field(default_factory=list)
    count_satisfying: int = 0

    @property
    def satisfiable(self) -> bool:
        return self.optimum is not None


def _keep_best(result: OracleResult, cost: float, witness) -> None:
    result.count_satisfying += 1
    if result.optimum is None or cost < result.optimum - _EPS:
        result.optimum = cost
        result.witnesses = [witness]
    elif abs(cost - result.optimum) <= _EPS:
        result.witnesses.append(witness)


def candidate_count(g: EGraph) -> int:
    """Number of functions assigning every class "unused" or one of its members."""
    return math.prod(len(members) + 1 for members in g.classes.values())


def enumerate_minimal_extractions(g: EGraph) -> Iterator[Extraction]:
    """
    Every closed, satisfying extraction whose domain is exactly what the roots need.

    Choices are made depth-first on the lowest-index required class without a
    choice, so each minimal extraction is produced exactly once. Cyclic ones are
    included.
    """
    order = g.class_index

    def expand(choice: dict, required: frozenset) -> Iterator[Extraction]:
        open_classes = [c for c in required if c not in choice]
        if not open_classes:
            yield Extraction(dict(choice))
            return
        target = min(open_classes, key=order.__getitem__)
        for node_id in g.classes[target]:
            choice[target] = node_id
            yield from expand(choice, required | frozenset(g.deps[node_id]))
            del choice[target]

    yield from expand({}, frozenset(g.roots))


def brute_force_extract(g: EGraph, require_acyclic: bool = True) -> OracleResult:
    """Minimum-cost (acyclic) satisfying extraction by exhaustive enumeration."""
    candidates = candidate_count(g)
    if candidates > config.ORACLE_MAX_CANDIDATES:
        raise InstanceTooLarge(f"{candidates} candidate extractions exceed the oracle limit")

    result = OracleResult(optimum=None)
    for x in enumerate_minimal_extractions(g):
        report = validate_extraction(g, x)
        if require_acyclic and not report.is_acyclic:
            continue
        _keep_best(result, extraction_cost(g, x), x)
    logger.debug(f"🔍 Extraction oracle: {result.count_satisfying} candidates, optimum {result.optimum}")
    return result


def brute_force_circuit(c: Circuit, require_acyclic: bool = True) -> OracleResult:
    """Minimum input cost over all input assignments, each extended by least fixpoint."""
    inputs = c.inputs
    if len(inputs) > config.ORACLE_MAX_INPUTS:
        raise InstanceTooLarge(f"{len(inputs)} inputs exceed the circuit oracle limit")

    result = OracleResult(optimum=None)
    for bits in itertools.product((False, True), repeat=len(inputs)):
        fixpoint = evaluate_from_inputs(c, dict(zip(inputs, bits)))
        if not is_satisfying(c, fixpoint.evaluation):
            continue
        if require_acyclic and not fixpoint.acyclic:
            continue
        _keep_best(result, evaluation_cost(c, fixpoint.evaluation), fixpoint.evaluation)
    return result


def brute_force_evaluations(c: Circuit, require_acyclic: bool = True) -> OracleResult:
    """Minimum cost over all 2^|V| valid satisfying evaluations, cyclic ones included."""
    if c.num_vertices > config.ORACLE_MAX_VERTICES:
        raise InstanceTooLarge(f"{c.num_vertices} vertices exceed the exhaustive oracle limit")

    result = OracleResult(optimum=None)
    for bits in itertools.product((False, True), repeat=c.num_vertices):
        evaluation = Evaluation(bits)
        if not (is_valid_evaluation(c, evaluation) and is_satisfying(c, evaluation)):
            continue
        if require_acyclic and not is_acyclic_evaluation(c, evaluation):
            continue
        _keep_best(result, evaluation_cost(c, evaluation), evaluation)
    return result
