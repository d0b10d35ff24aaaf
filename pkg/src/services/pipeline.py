"""
End-to-end extraction: e-graph -> circuit -> simplified circuit -> nice tree
decomposition -> dynamic program -> recovered evaluation -> extraction.

Shared by the CLI and the HTTP API. The deadline is checked between stages and
after every DP bag.
"""

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from loguru import logger

from src.exceptions import ExtractionError
from src.services.circuit import (
    Circuit,
    Evaluation,
    NodeMap,
    drop_free_inputs,
    egraph_to_circuit,
    evaluation_to_extraction,
    prune_free_inputs,
)
from src.services.dp import DPStats, add_output_gate, run_dp
from src.services.egraph import (
    EGraph,
    Extraction,
    ValidityReport,
    extraction_cost,
    reachable_classes,
    restrict,
    validate_extraction,
)
from src.services.simplify import ALL_RULES, RewriteLog, RuleId, recover_evaluation, simplify_fixpoint
from src.services.treewidth import NiceTreeDecomposition, TreeDecomposition, min_degree_decomposition, to_nice, underlying_graph
from src.utils import Deadline


@dataclass
class StageTimes:
    convert: float = 0.0
    simplify: float = 0.0
    decompose: float = 0.0
    dp: float = 0.0


@dataclass
class ExtractionOutcome:
    extraction: Extraction
    cost: float
    acyclic: bool
    report: ValidityReport
    original: Circuit
    simplified: Circuit
    log: Optional[RewriteLog]
    decomposition: TreeDecomposition
    nice: NiceTreeDecomposition
    dp_stats: DPStats
    times: StageTimes = field(default_factory=StageTimes)


def run_extraction(
    g: EGraph,
    rules: Iterable[RuleId] = ALL_RULES,
    heuristic: str = "min-degree",
    enforce_acyclic: bool = True,
    timeout: Optional[float] = None,
) -> ExtractionOutcome:
    """
    Optimal extraction of ``g``.

    Without acyclicity enforcement simplification is skipped: the rewrites preserve
    the optimal acyclic evaluation only.

    Raises:
        UnsatisfiableError: no (acyclic) satisfying extraction exists.
        PipelineTimeout: the time budget expired between stages.
    """
    deadline = Deadline(timeout)
    times = StageTimes()

    start = time.perf_counter()
    circuit, mapping = egraph_to_circuit(g)
    times.convert = time.perf_counter() - start
    deadline.check("convert")

    start = time.perf_counter()
    rules = list(rules)
    log: Optional[RewriteLog] = None
    simplified = circuit
    if enforce_acyclic and rules:
        simplified, log = simplify_fixpoint(circuit, rules, deadline=deadline)
    times.simplify = time.perf_counter() - start
    deadline.check("simplify")

    start = time.perf_counter()
    extended, u_out = add_output_gate(simplified)
    td = min_degree_decomposition(underlying_graph(extended), heuristic)
    nice = to_nice(td, u_out)
    times.decompose = time.perf_counter() - start
    deadline.check("decompose")
    logger.info(f"🌳 Decomposed |V|={extended.num_vertices}: width {td.width}, {len(nice.bags)} nice bags")

    start = time.perf_counter()
    result = run_dp(extended, nice, enforce_acyclic, deadline)
    times.dp = time.perf_counter() - start

    evaluation = Evaluation(result.evaluation.value[: simplified.num_vertices])
    evaluation = _back_to_original(circuit, log, evaluation, enforce_acyclic)
    extraction = _to_extraction(g, circuit, mapping, evaluation)

    report = validate_extraction(g, extraction)
    if not (report.is_extraction and report.is_satisfying and report.is_minimal):
        raise ExtractionError(f"pipeline produced an invalid extraction: {report.violations}")
    if enforce_acyclic and not report.is_acyclic:
        raise ExtractionError("pipeline produced a cyclic extraction")

    cost = extraction_cost(g, extraction)
    logger.info(
        f"✅ Extracted cost {cost:g} (acyclic={report.is_acyclic}) in "
        f"{times.convert + times.simplify + times.decompose + times.dp:.3f}s"
    )
    return ExtractionOutcome(
        extraction=extraction,
        cost=cost,
        acyclic=report.is_acyclic,
        report=report,
        original=circuit,
        simplified=simplified,
        log=log,
        decomposition=td,
        nice=nice,
        dp_stats=result.stats,
        times=times,
    )


def _back_to_original(circuit: Circuit, log: Optional[RewriteLog], evaluation: Evaluation, enforce_acyclic: bool) -> Evaluation:
    if log is not None:
        evaluation = recover_evaluation(circuit, log, evaluation)
    if not enforce_acyclic:
        return drop_free_inputs(circuit, evaluation)
    inputs = {v: evaluation.value[v] for v in circuit.inputs}
    return prune_free_inputs(circuit, inputs).evaluation


def _to_extraction(g: EGraph, circuit: Circuit, mapping: NodeMap, evaluation: Evaluation) -> Extraction:
    extraction = evaluation_to_extraction(circuit, mapping, evaluation)
    return restrict(extraction, reachable_classes(g, extraction))
