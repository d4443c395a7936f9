"""Staged natural-language query planner."""

from .grounding import Grounding, GroundingSet, MeasureRef, ground
from .index import TableSelection, build_keyword_index, identify_tables
from .pipeline import AuditRecord, PlanResult, plan_query
from .rules import apply_rules
from .sketch import FilterTerm, QuerySketch, TimeWindow, parse_question
from .tree import PlanTree, compose_tree
from .emit import emit_sql

__all__ = [
    "AuditRecord",
    "FilterTerm",
    "Grounding",
    "GroundingSet",
    "MeasureRef",
    "PlanResult",
    "PlanTree",
    "QuerySketch",
    "TableSelection",
    "TimeWindow",
    "apply_rules",
    "build_keyword_index",
    "compose_tree",
    "emit_sql",
    "ground",
    "identify_tables",
    "parse_question",
    "plan_query",
]
