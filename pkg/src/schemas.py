"""Pydantic wire models for every document the CLI and the HTTP API exchange."""

from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator

from src import config

VertexId = Union[int, str]

HEURISTICS = ("min-degree", "min-fill")


class ENodeEntry(BaseModel):
    op: str = ""
    children: List[str] = Field(default_factory=list)
    eclass: str
    cost: float = 1.0


class ClassDataEntry(BaseModel):
    nodes: Optional[List[str]] = None


class EGraphDocument(BaseModel):
    """extraction-gym style e-graph: node id -> entry, plus the root e-classes."""

    nodes: Dict[str, ENodeEntry]
    root_eclasses: List[str]
    class_data: Dict[str, ClassDataEntry] = Field(default_factory=dict)


class ExtractionDocument(BaseModel):
    choices: Dict[str, str]
    cost: float
    acyclic: bool = True


class CircuitVertex(BaseModel):
    id: VertexId
    kind: Literal["and", "or", "input"]
    cost: Optional[float] = None


class CircuitDocument(BaseModel):
    vertices: List[CircuitVertex]
    edges: List[Tuple[VertexId, VertexId]] = Field(default_factory=list)
    outputs: List[VertexId] = Field(default_factory=list)


class RemovedPart(BaseModel):
    vertices: List[int] = Field(default_factory=list)
    edges: List[Tuple[int, int]] = Field(default_factory=list)
    outputs: List[int] = Field(default_factory=list)


class AddedVertex(BaseModel):
    id: int
    kind: Literal["and", "or", "input"]
    label: Optional[str] = None


class AddedPart(BaseModel):
    vertices: List[AddedVertex] = Field(default_factory=list)
    edges: List[Tuple[int, int]] = Field(default_factory=list)
    outputs: List[int] = Field(default_factory=list)
    costs: Dict[str, float] = Field(default_factory=dict)


class RewriteRecordDocument(BaseModel):
    """One rewrite: what it removed and added, and where merged or dropped variables went."""

    rule: str
    removed: RemovedPart = Field(default_factory=RemovedPart)
    added: AddedPart = Field(default_factory=AddedPart)
    provenance: Dict[str, Optional[str]] = Field(default_factory=dict)


class DecompositionDocument(BaseModel):
    bags: List[List[int]]
    edges: List[Tuple[int, int]]
    width: int


class RunConfig(BaseModel):
    """Per-run settings: CLI flags layered over environment defaults."""

    inputs: List[str] = Field(min_length=1)
    timeout: float = Field(default=config.EXTRACT_TIMEOUT, gt=0)
    rules: List[str] = Field(default_factory=lambda: ["all"])
    heuristic: Literal["min-degree", "min-fill"] = "min-degree"
    enforce_acyclic: bool = True
    output: Optional[str] = None
    emit_td: Optional[str] = None
    emit_log: Optional[str] = None
    emit_tables: Optional[str] = None
    csv: Optional[str] = None

    @field_validator("inputs")
    @classmethod
    def _non_blank(cls, value: List[str]) -> List[str]:
        if any(not v.strip() for v in value):
            raise ValueError("input paths must be non-empty")
        return value


class BenchRecord(BaseModel):
    """One CSV row of the stats / bench harness. Field order is the column order."""

    source: str
    instance: str
    vertices_before: Optional[int] = None
    edges_before: Optional[int] = None
    width_before: Optional[int] = None
    avg_degree_undirected: Optional[float] = None
    vertices_after: Optional[int] = None
    edges_after: Optional[int] = None
    width_after: Optional[int] = None
    delta_vertices: Optional[float] = None
    delta_edges: Optional[float] = None
    delta_width: Optional[float] = None
    extract_cost: Optional[float] = None
    time_convert: Optional[float] = None
    time_simplify: Optional[float] = None
    time_decompose: Optional[float] = None
    time_dp: Optional[float] = None
    timeout: bool = False
    error: Optional[str] = None
