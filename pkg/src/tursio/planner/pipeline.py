"""Staged planning: question text in, SQL plus a full audit record out.

Stage order: parse -> identify tables -> ground -> compose -> rules ->
emit -> optional provider rewrite.  Every stage result lands in the audit
record, so a dry run can show exactly how the question was interpreted and
a failing stage can name itself in the error payload.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, List, Optional

from ..adapters import ensure_read_only
from ..adjudicator import Adjudicator, DeterministicAdjudicator
from ..errors import ReadOnlyViolation
from ..model import ContextGraph
from .emit import emit_sql
from .grounding import Grounding, GroundingSet, ground
from .index import (
    TableSelection,
    build_keyword_index,
    extend_selection,
    identify_tables,
)
from .rules import apply_rules
from .samples import _normalize, sample_lookup
from .sketch import QuerySketch, parse_question, sketch_from_doc
from .tree import PlanTree, compose_tree


def _target_table(grounding: Grounding):
    target = grounding.target
    return getattr(target, "table", None)

REWRITE_REJECTED = "RewriteRejected"


@dataclass
class AuditRecord:
    question: str
    graph_id: str
    graph_version: int
    clock: str
    sketch: dict = field(default_factory=dict)
    tables: List[str] = field(default_factory=list)
    weights: Dict[str, float] = field(default_factory=dict)
    groundings: dict = field(default_factory=dict)
    rules_applied: List[str] = field(default_factory=list)
    sql: str = ""
    rewritten: bool = False
    rewrite_note: str = ""
    timings_ms: Dict[str, float] = field(default_factory=dict)
    transcript: List[dict] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "question": self.question,
            "graph_id": self.graph_id,
            "graph_version": self.graph_version,
            "clock": self.clock,
            "sketch": self.sketch,
            "tables": self.tables,
            "weights": {t: round(w, 4) for t, w in sorted(self.weights.items())},
            "groundings": self.groundings,
            "rules_applied": self.rules_applied,
            "sql": self.sql,
            "rewritten": self.rewritten,
            "rewrite_note": self.rewrite_note,
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
            "transcript": self.transcript,
        }


@dataclass
class PlanResult:
    sql: str
    tree: PlanTree
    sketch: QuerySketch
    selection: TableSelection
    grounded: GroundingSet
    audit: AuditRecord

    def interpretation(self) -> List[str]:
        """Human-readable reading of the plan, for dry-run display."""
        lines = []
        lines.append("Tables: " + ", ".join(self.selection.tables))
        for table, edge in self.selection.join_steps():
            if edge is not None:
                left = ", ".join(f"{edge.left_table}.{c}"
                                 for c in edge.left_columns)
                right = ", ".join(f"{edge.right_table}.{c}"
                                  for c in edge.right_columns)
                lines.append(f"Join: {left} = {right}")
        for g in self.grounded.select:
            lines.append(f"Output: {g.phrase!r} -> {g.target} "
                         f"({g.basis}, {g.score:.2f})")
        for g in self.grounded.group:
            lines.append(f"Group by: {g.phrase!r} -> {g.target}")
        for term, g in self.grounded.filters:
            lines.append(f"Filter: {g.target} {term.comparator} {term.literal!r}")
        if self.grounded.time_anchor is not None:
            window = self.sketch.time_window
            period = window.period or f"{window.start}..{window.end}"
            lines.append(f"Time filter: {self.grounded.time_anchor.target} "
                         f"within {period}")
        if self.audit.rules_applied:
            lines.append("Rules: " + ", ".join(self.audit.rules_applied))
        lines.append("SQL: " + self.sql)
        return lines


def _graph_summary(graph: ContextGraph) -> str:
    parts = []
    for t in graph.tables:
        cols = ", ".join(c.name for c in t.columns if not c.pii)
        parts.append(f"{t.table_id}({cols})")
    return "; ".join(parts)


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _rewrite_is_safe(sql: str, graph: ContextGraph) -> bool:
    """A provider rewrite must stay read-only, on-graph, and PII-free."""
    try:
        ensure_read_only(sql)
    except ReadOnlyViolation:
        return False
    tokens = {t.lower() for t in _IDENT_RE.findall(sql)}
    pii_names = {ref.column.lower() for ref in graph.pii_columns()}
    if tokens & pii_names:
        return False
    known = set()
    for t in graph.tables:
        known.add(t.table_id.lower())
        known.add(t.physical_name.lower())
    mentioned = {t for t in tokens if t in known}
    return bool(mentioned)


def plan_query(question: str, graph: ContextGraph, clock: date,
               adjudicator: Optional[Adjudicator] = None,
               index: Optional[dict] = None,
               allow_rewrite: bool = True) -> PlanResult:
    adjudicator = adjudicator or DeterministicAdjudicator()
    audit = AuditRecord(question=question, graph_id=graph.graph_id,
                        graph_version=graph.version, clock=clock.isoformat())
    timings = audit.timings_ms
    summary = _graph_summary(graph)

    t0 = time.perf_counter()
    sketch_doc = adjudicator.parse_intent(question, summary)
    if sketch_doc is None:
        sketch_doc = sample_lookup(graph).get(_normalize(question))
    sketch = sketch_from_doc(sketch_doc) if sketch_doc \
        else parse_question(question)
    audit.sketch = sketch.to_doc()
    timings["parse"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    if index is None:
        index = build_keyword_index(graph)
    selection = identify_tables(question, graph, index)
    audit.tables = list(selection.tables)
    audit.weights = dict(selection.weights)
    timings["identify_tables"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    grounded = ground(sketch, selection.tables, graph, question)
    extra = sorted({_target_table(g) for g in grounded.all()}
                   - set(selection.tables) - {None})
    if extra:
        # a prioritization rule grounded onto a table outside the keyword
        # selection; widen the join set to reach it
        selection = extend_selection(graph, selection, extra)
        audit.tables = list(selection.tables)
    audit.groundings = grounded.to_doc()
    timings["ground"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    tree = compose_tree(sketch, selection, grounded, graph, clock)
    audit.rules_applied = apply_rules(tree, graph)
    timings["compose"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    sql = emit_sql(tree, graph)
    timings["emit"] = (time.perf_counter() - t0) * 1000

    if allow_rewrite:
        t0 = time.perf_counter()
        proposed = adjudicator.rewrite_sql(sql, question, summary)
        if proposed != sql:
            if _rewrite_is_safe(proposed, graph):
                sql = proposed
                audit.rewritten = True
            else:
                audit.rewrite_note = REWRITE_REJECTED
        timings["rewrite"] = (time.perf_counter() - t0) * 1000

    audit.sql = sql
    audit.transcript = list(adjudicator.transcript)
    return PlanResult(sql=sql, tree=tree, sketch=sketch, selection=selection,
                      grounded=grounded, audit=audit)
