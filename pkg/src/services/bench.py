"""
Stats / bench harness: per-instance BenchRecord rows, CSV output and per-source
aggregates of the effect of simplification.
"""

import csv
import time
from pathlib import Path
from statistics import mean
from typing import Dict, Iterable, List, Optional, Tuple

from loguru import logger

from src.exceptions import ExtractionError, InputError, PipelineTimeout, UnsatisfiableError
from src.schemas import BenchRecord, RunConfig
from src.services.circuit import Circuit, egraph_to_circuit
from src.services.egraph import parse_egraph
from src.services.pipeline import run_extraction
from src.services.simplify import parse_rules, simplify_fixpoint
from src.services.treewidth import min_degree_decomposition, underlying_graph
from src.utils import Deadline, read_json

CSV_COLUMNS = list(BenchRecord.model_fields)
TABLE_COLUMNS = ["bag", "kind", "bag_size", "entries"]


def collect_inputs(paths: Iterable[str]) -> List[Path]:
    """Expand directories to their ``*.json`` files (sorted); keep files as given."""
    found: List[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            found.extend(sorted(p for p in path.rglob("*.json") if p.is_file()))
        else:
            found.append(path)
    return found


def source_of(path: Path) -> str:
    return path.parent.name or "."


def circuit_metrics(c: Circuit, heuristic: str = "min-degree") -> Dict[str, float]:
    """|V|, |E|, heuristic width and undirected average degree."""
    graph = underlying_graph(c)
    width = min_degree_decomposition(graph, heuristic).width if c.num_vertices else 0
    degree = 2 * graph.number_of_edges() / c.num_vertices if c.num_vertices else 0.0
    return {"vertices": c.num_vertices, "edges": c.num_edges, "width": width, "degree": degree}


def _delta(before: float, after: float) -> Optional[float]:
    return (after - before) / before if before else None


def measure_instance(path: Path, cfg: RunConfig, extract: bool = True) -> BenchRecord:
    """Before/after metrics for one e-graph file; failures are recorded, not raised."""
    record = BenchRecord(source=source_of(path), instance=path.stem)
    rules = parse_rules(cfg.rules)
    deadline = Deadline(cfg.timeout)
    try:
        g = parse_egraph(read_json(path))

        start = time.perf_counter()
        circuit, _ = egraph_to_circuit(g)
        record.time_convert = time.perf_counter() - start
        before = circuit_metrics(circuit, cfg.heuristic)
        record.vertices_before = before["vertices"]
        record.edges_before = before["edges"]
        record.width_before = before["width"]
        record.avg_degree_undirected = before["degree"]
        deadline.check("decompose")

        start = time.perf_counter()
        simplified = simplify_fixpoint(circuit, rules, deadline=deadline)[0] if rules else circuit
        record.time_simplify = time.perf_counter() - start
        after = circuit_metrics(simplified, cfg.heuristic)
        record.vertices_after = after["vertices"]
        record.edges_after = after["edges"]
        record.width_after = after["width"]
        record.delta_vertices = _delta(before["vertices"], after["vertices"])
        record.delta_edges = _delta(before["edges"], after["edges"])
        record.delta_width = _delta(before["width"], after["width"])
        deadline.check("simplify")

        if extract:
            remaining = cfg.timeout - deadline.elapsed()
            if remaining <= 0:
                raise PipelineTimeout("extract", cfg.timeout)
            outcome = run_extraction(g, rules, cfg.heuristic, cfg.enforce_acyclic, remaining)
            record.extract_cost = outcome.cost
            record.time_decompose = outcome.times.decompose
            record.time_dp = outcome.times.dp
    except PipelineTimeout:
        record.timeout = True
        logger.warning(f"⏱️ {path} timed out")
    except UnsatisfiableError:
        record.error = "unsatisfiable"
    except InputError as e:
        record.error = str(e)
        logger.error(f"❌ {path}: {e}")
    except ExtractionError as e:
        record.error = str(e)
        logger.exception(f"❌ {path}: extraction failed")
    except Exception as e:
        record.error = f"{type(e).__name__}: {e}"
        logger.exception(f"❌ {path}: unexpected failure")
    return record


def write_csv(records: Iterable[BenchRecord], path: str) -> None:
    """One row per record, columns in BenchRecord field order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for record in records:
            writer.writerow(record.model_dump())
    logger.info(f"💾 Wrote {path}")


def write_table_sizes(sizes: Iterable[Tuple[int, str, int, int]], path: str) -> None:
    """Per-bag DP table sizes as CSV: bag index, kind, bag size, entries."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in sizes:
            writer.writerow(dict(zip(TABLE_COLUMNS, row)))
    logger.info(f"💾 Wrote {path}")


def aggregate(records: List[BenchRecord]) -> List[Dict[str, object]]:
    """Per-source averages: Δ width / Δ|V| / Δ|E| in percent, timeout share, size and degree."""
    by_source: Dict[str, List[BenchRecord]] = {}
    for record in records:
        by_source.setdefault(record.source, []).append(record)

    def avg(values) -> Optional[float]:
        values = [v for v in values if v is not None]
        return mean(values) if values else None

    rows = []
    for source in sorted(by_source):
        group = by_source[source]
        rows.append(
            {
                "source": source,
                "egraphs": len(group),
                "avg_vertices": avg(r.vertices_before for r in group),
                "avg_degree_undirected": avg(r.avg_degree_undirected for r in group),
                "avg_delta_width_pct": avg(None if r.delta_width is None else 100 * r.delta_width for r in group),
                "avg_delta_vertices_pct": avg(None if r.delta_vertices is None else 100 * r.delta_vertices for r in group),
                "avg_delta_edges_pct": avg(None if r.delta_edges is None else 100 * r.delta_edges for r in group),
                "timeout_pct": 100 * sum(r.timeout for r in group) / len(group),
            }
        )
    return rows


def format_aggregates(rows: List[Dict[str, object]]) -> str:
    def fmt(value) -> str:
        if value is None:
            return "-"
        return f"{value:.1f}" if isinstance(value, float) else str(value)

    header = ["source", "egraphs", "avg |V|", "avg deg", "avg Δwidth %", "avg Δ|V| %", "avg Δ|E| %", "% timeout"]
    keys = [
        "source",
        "egraphs",
        "avg_vertices",
        "avg_degree_undirected",
        "avg_delta_width_pct",
        "avg_delta_vertices_pct",
        "avg_delta_edges_pct",
        "timeout_pct",
    ]
    table = [header] + [[fmt(row[k]) for k in keys] for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(line, widths)) for line in table)
