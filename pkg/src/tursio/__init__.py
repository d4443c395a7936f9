"""Tursio: context-graph inference and natural-language query planning
over on-prem relational sources."""

__version__ = "0.1.0"

from .build import BuildResult, build_graph
from .model import (
    Annotation,
    ColumnMeta,
    ColumnRef,
    ContextGraph,
    GraphRef,
    JoinEdge,
    TableNode,
    TableRef,
    apply_annotation,
    deserialize_graph,
    serialize_graph,
    validate_graph,
)
from .planner import plan_query

__all__ = [
    "Annotation",
    "BuildResult",
    "ColumnMeta",
    "ColumnRef",
    "ContextGraph",
    "GraphRef",
    "JoinEdge",
    "TableNode",
    "TableRef",
    "apply_annotation",
    "build_graph",
    "deserialize_graph",
    "plan_query",
    "serialize_graph",
    "validate_graph",
    "__version__",
]
