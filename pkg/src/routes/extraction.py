from typing import List, Optional

from fastapi import APIRouter, HTTPException, Query
from fastapi.concurrency import run_in_threadpool
from loguru import logger

from src import config
from src.exceptions import ExtractionError, InputError, PipelineTimeout, UnsatisfiableError
from src.schemas import HEURISTICS, CircuitDocument, EGraphDocument, ExtractionDocument
from src.services.circuit import circuit_from_document, circuit_to_document, egraph_to_circuit
from src.services.egraph import extraction_document, parse_egraph
from src.services.pipeline import run_extraction
from src.services.simplify import parse_rules, simplify_fixpoint

router = APIRouter()


def to_http_error(e: ExtractionError) -> HTTPException:
    """Map pipeline errors onto status codes."""
    if isinstance(e, InputError):
        return HTTPException(status_code=422, detail=str(e))
    if isinstance(e, UnsatisfiableError):
        return HTTPException(status_code=409, detail=f"unsatisfiable: {e}")
    if isinstance(e, PipelineTimeout):
        return HTTPException(status_code=504, detail=str(e))
    logger.error(f"❌ Extraction failed: {e}")
    return HTTPException(status_code=500, detail=str(e))


@router.post("/convert", tags=["Extraction"], response_model=CircuitDocument, response_model_exclude_none=True)
async def convert(document: EGraphDocument):
    """Convert an e-graph to its weighted monotone circuit."""
    try:
        circuit, _ = egraph_to_circuit(parse_egraph(document.model_dump()))
    except ExtractionError as e:
        raise to_http_error(e)
    return circuit_to_document(circuit)


@router.post("/simplify", tags=["Extraction"])
async def simplify(document: CircuitDocument, rules: Optional[List[str]] = Query(default=None)):
    """Simplify a circuit; returns the simplified circuit and the rewrite log."""
    try:
        circuit = circuit_from_document(document)
        simplified, log = await run_in_threadpool(simplify_fixpoint, circuit, parse_rules(rules or ["all"]))
    except ExtractionError as e:
        raise to_http_error(e)
    return {"circuit": circuit_to_document(simplified), "log": log.to_document(), "converged": log.converged}


@router.post("/extract", tags=["Extraction"], response_model=ExtractionDocument)
async def extract(
    document: EGraphDocument,
    timeout: float = Query(default=config.EXTRACT_TIMEOUT, gt=0),
    rules: Optional[List[str]] = Query(default=None),
    heuristic: str = Query(default="min-degree"),
    acyclic: bool = Query(default=True),
):
    """
    Optimal extraction of an e-graph.

    Returns:
        The extraction JSON document: chosen e-node per e-class, total cost, acyclicity.
    """
    if heuristic not in HEURISTICS:
        raise HTTPException(status_code=422, detail=f"heuristic must be one of {HEURISTICS}")
    try:
        g = parse_egraph(document.model_dump())
        outcome = await run_in_threadpool(
            run_extraction, g, parse_rules(rules or ["all"]), heuristic, acyclic, timeout
        )
    except ExtractionError as e:
        raise to_http_error(e)
    logger.info(f"📦 Extracted {len(outcome.extraction.choice)} classes at cost {outcome.cost:g}")
    return extraction_document(g, outcome.extraction, outcome.acyclic)
