"""
Command-line driver.

    python -m src.cli convert  EGRAPH.json  [-o CIRCUIT.json]
    python -m src.cli simplify CIRCUIT.json [-o OUT.json] [--rules LIST] [--emit-log LOG.json]
    python -m src.cli stats    INPUT...     [--csv OUT.csv] [--emit-td PATH]
    python -m src.cli extract  EGRAPH.json  [-o OUT.json] [--timeout S] [--no-acyclic] ...
    python -m src.cli bench    INPUT...     [--csv OUT.csv]
    python -m src.cli check    [EGRAPH.json] [--random N --seed S]

Exit codes: 0 success, 2 unsatisfiable, 3 timeout, 4 input error, 1 anything else.
"""

import argparse
import json
import random
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from src import config
from src.exceptions import (
    EXIT_FAILURE,
    EXIT_OK,
    ExtractionError,
    InputError,
    InstanceTooLarge,
    UnsatisfiableError,
)
from src.schemas import HEURISTICS, RunConfig
from src.services.bench import (
    aggregate,
    collect_inputs,
    format_aggregates,
    measure_instance,
    write_csv,
    write_table_sizes,
)
from src.services.circuit import circuit_from_document, circuit_to_document, egraph_to_circuit
from src.services.egraph import EGraph, extraction_document, parse_egraph, render_term
from src.services.generators import random_egraph
from src.services.oracle import brute_force_extract
from src.services.pipeline import run_extraction
from src.services.simplify import parse_rules, replay_log, simplify_fixpoint
from src.services.treewidth import min_degree_decomposition, underlying_graph
from src.utils import configure_logging, read_json, to_jsonable, write_json


def _emit(payload, output: Optional[str]) -> None:
    if output:
        write_json(output, payload)
    else:
        print(json.dumps(to_jsonable(payload), indent=2))


def _run_config(args: argparse.Namespace, inputs: List[str]) -> RunConfig:
    try:
        return RunConfig(
            inputs=inputs,
            timeout=getattr(args, "timeout", config.EXTRACT_TIMEOUT),
            rules=getattr(args, "rules", None) or ["all"],
            heuristic=getattr(args, "heuristic", "min-degree"),
            enforce_acyclic=not getattr(args, "no_acyclic", False),
            output=getattr(args, "output", None),
            emit_td=getattr(args, "emit_td", None),
            emit_log=getattr(args, "emit_log", None),
            emit_tables=getattr(args, "emit_tables", None),
            csv=getattr(args, "csv", None),
        )
    except ValidationError as e:
        raise InputError(f"invalid options: {e}") from e


def _load_egraph(path: str) -> EGraph:
    return parse_egraph(read_json(path))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_convert(args: argparse.Namespace) -> int:
    circuit, _ = egraph_to_circuit(_load_egraph(args.input))
    _emit(circuit_to_document(circuit), args.output)
    return EXIT_OK


def cmd_simplify(args: argparse.Namespace) -> int:
    cfg = _run_config(args, [args.input])
    original = circuit_from_document(read_json(args.input))
    simplified, log = simplify_fixpoint(original, parse_rules(cfg.rules))
    if cfg.emit_log:
        replayed, _ = replay_log(original, log.records)
        if replayed != simplified:
            raise ExtractionError("rewrite log does not replay to the simplified circuit")
        write_json(cfg.emit_log, log.to_document())
    _emit(circuit_to_document(simplified), cfg.output)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    return _measure(args, extract=False)


def cmd_bench(args: argparse.Namespace) -> int:
    return _measure(args, extract=True)


def _measure(args: argparse.Namespace, extract: bool) -> int:
    cfg = _run_config(args, args.inputs)
    files = collect_inputs(cfg.inputs)
    if not files:
        raise InputError("no input files found")

    records = []
    for path in files:
        records.append(measure_instance(path, cfg, extract=extract))
        if cfg.emit_td:
            _emit_td(path, cfg, many=len(files) > 1)

    if cfg.csv:
        write_csv(records, cfg.csv)
    print(format_aggregates(aggregate(records)))
    logger.info(f"📊 Measured {len(records)} instance(s), {sum(r.timeout for r in records)} timed out")
    return EXIT_OK


def _emit_td(path: Path, cfg: RunConfig, many: bool) -> None:
    try:
        circuit, _ = egraph_to_circuit(_load_egraph(str(path)))
    except InputError:
        return
    td = min_degree_decomposition(underlying_graph(circuit), cfg.heuristic)
    target = Path(cfg.emit_td) / f"{path.stem}.td.json" if many else Path(cfg.emit_td)
    write_json(target, td.to_document())


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _run_config(args, [args.input])
    g = _load_egraph(args.input)
    outcome = run_extraction(g, parse_rules(cfg.rules), cfg.heuristic, cfg.enforce_acyclic, cfg.timeout)

    if cfg.emit_td:
        write_json(cfg.emit_td, outcome.decomposition.to_document())
    if cfg.emit_log and outcome.log is not None:
        write_json(cfg.emit_log, outcome.log.to_document())
    if cfg.emit_tables:
        write_table_sizes(outcome.dp_stats.table_sizes, cfg.emit_tables)

    for root in g.roots:
        logger.debug(f"🌲 {root}: {render_term(g, outcome.extraction, root)}")
    _emit(extraction_document(g, outcome.extraction, outcome.acyclic), cfg.output)
    return EXIT_OK


def check_instance(g: EGraph, cfg: RunConfig) -> str:
    """Compare the pipeline against the extraction oracle; returns the verdict line."""
    try:
        expected = brute_force_extract(g, require_acyclic=cfg.enforce_acyclic)
    except InstanceTooLarge:
        logger.warning("⚠️ Oracle skipped: instance too large")
        return "oracle skipped: too large"

    try:
        outcome = run_extraction(g, parse_rules(cfg.rules), cfg.heuristic, cfg.enforce_acyclic, cfg.timeout)
    except UnsatisfiableError:
        if expected.satisfiable:
            return f"MISMATCH pipeline=unsatisfiable oracle={expected.optimum:g}"
        return "MATCH unsatisfiable"

    if not expected.satisfiable:
        return f"MISMATCH pipeline={outcome.cost:g} oracle=unsatisfiable"
    if abs(outcome.cost - expected.optimum) > 1e-9 * max(1.0, abs(expected.optimum)):
        return f"MISMATCH pipeline={outcome.cost:g} oracle={expected.optimum:g}"
    return f"MATCH cost={outcome.cost:g}"


def cmd_check(args: argparse.Namespace) -> int:
    if args.input:
        cfg = _run_config(args, [args.input])
        verdict = check_instance(_load_egraph(args.input), cfg)
        print(verdict)
        return EXIT_FAILURE if verdict.startswith("MISMATCH") else EXIT_OK

    cfg = _run_config(args, ["<random>"])
    rng = random.Random(args.seed)
    matches = 0
    for i in range(args.random):
        verdict = check_instance(random_egraph(rng), cfg)
        if verdict.startswith("MATCH"):
            matches += 1
        else:
            print(f"instance {i}: {verdict}")
    print(f"{matches}/{args.random} MATCH")
    return EXIT_OK if matches == args.random else EXIT_FAILURE


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--timeout", type=float, default=config.EXTRACT_TIMEOUT, help="per-instance budget in seconds")
    p.add_argument("--rules", action="append", help="comma-separated rule names, 'all' or 'none'")
    p.add_argument("--heuristic", choices=HEURISTICS, default="min-degree")
    p.add_argument("--no-acyclic", action="store_true", help="allow cyclic extractions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egraph-extract", description="Optimal e-graph extraction via treewidth")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="e-graph JSON -> circuit JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("simplify", help="circuit JSON -> simplified circuit JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--rules", action="append")
    p.add_argument("--emit-log")
    p.set_defaults(func=cmd_simplify)

    for name, func, text in (
        ("stats", cmd_stats, "before/after simplification metrics"),
        ("bench", cmd_bench, "metrics plus full extraction per instance"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("inputs", nargs="+")
        p.add_argument("--csv")
        p.add_argument("--emit-td")
        _add_pipeline_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("extract", help="optimal extraction of an e-graph")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--emit-td")
    p.add_argument("--emit-log")
    p.add_argument("--emit-tables")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("check", help="compare the pipeline with the brute-force oracle")
    p.add_argument("input", nargs="?")
    p.add_argument("--random", type=int, default=50, help="size of the seeded random batch")
    p.add_argument("--seed", type=int, default=0)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging("extract")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsatisfiableError as e:
        print(f"unsatisfiable: {e}", file=sys.stderr)
        return e.exit_code
    except ExtractionError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception:
        logger.exception("❌ Unexpected failure")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
