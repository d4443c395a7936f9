"""Keyword index over the graph and table identification for a question.

Tokens from table names and aliases carry full weight; column tokens carry
slightly less, so a lone column mention does not pull in its table unless a
second token corroborates it.  Selected tables that are disconnected in the
join graph get connected along the shortest path (fewest edges, then
highest minimum confidence, then lexicographic), adding intermediates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..errors import DisconnectedModels, NoTableMatch
from ..model import ContextGraph, JoinEdge, SYNONYM, TableRef
from .text import stem, stem_set, stems

TABLE_TOKEN_WEIGHT = 1.0
COLUMN_TOKEN_WEIGHT = 0.8
SAMPLE_VALUE_WEIGHT = 0.7
DESCRIPTION_TOKEN_WEIGHT = 0.5
SELECT_THRESHOLD = 1.0
SAMPLE_VALUES_PER_COLUMN = 50

# generated descriptions mention data types and examples; those words say
# nothing about which table a question means
_DESCRIPTION_NOISE = {"typ", "integer", "decimal", "text", "date", "timestamp",
                      "boolean", "tabl", "row", "e", "g"}


def build_keyword_index(graph: ContextGraph) -> Dict[str, Dict[str, float]]:
    """stemmed token -> {table_id -> weight}; max weight wins per pair."""
    index: Dict[str, Dict[str, float]] = {}

    def add(token: str, table_id: str, weight: float) -> None:
        if not token or token.isdigit():
            return
        slot = index.setdefault(token, {})
        slot[table_id] = max(slot.get(table_id, 0.0), weight)

    for table in graph.tables:
        for source in (table.table_id, table.physical_name, table.alias,
                       table.display_name):
            for token in stems(source, drop_stopwords=True):
                add(token, table.table_id, TABLE_TOKEN_WEIGHT)
        for token in stems(table.description, drop_stopwords=True):
            if token not in _DESCRIPTION_NOISE:
                add(token, table.table_id, DESCRIPTION_TOKEN_WEIGHT)
        for col in table.columns:
            if col.pii:
                continue
            for source in (col.name, col.display_name, *col.aliases):
                for token in stems(source, drop_stopwords=True):
                    add(token, table.table_id, COLUMN_TOKEN_WEIGHT)
            for token in stems(col.description, drop_stopwords=True):
                if token not in _DESCRIPTION_NOISE:
                    add(token, table.table_id, DESCRIPTION_TOKEN_WEIGHT)
            if col.role == "dimension":
                for value in col.sample_values[:SAMPLE_VALUES_PER_COLUMN]:
                    for token in stems(str(value), drop_stopwords=True):
                        add(token, table.table_id, SAMPLE_VALUE_WEIGHT)

    for ann in graph.annotations:
        if ann.kind == SYNONYM and isinstance(ann.target, TableRef):
            for token in stems(ann.payload.get("term", ""), drop_stopwords=True):
                add(token, ann.target.table, TABLE_TOKEN_WEIGHT)
    return index


@dataclass
class TableSelection:
    tables: List[str]                 # weight order; intermediates appended
    edges: List[JoinEdge]             # spanning edges over ``tables``
    weights: Dict[str, float]

    def join_steps(self) -> List[Tuple[str, Optional[JoinEdge]]]:
        """(table, attaching edge) pairs, reordered so every step connects."""
        remaining_tables = list(self.tables)
        remaining_edges = list(self.edges)
        first = remaining_tables.pop(0)
        steps: List[Tuple[str, Optional[JoinEdge]]] = [(first, None)]
        placed = {first}
        while remaining_tables:
            chosen: Optional[Tuple[str, Optional[JoinEdge]]] = None
            for t in remaining_tables:
                edge = next((e for e in remaining_edges
                             if t in e.tables()
                             and (set(e.tables()) - {t}) <= placed), None)
                if edge is not None:
                    chosen = (t, edge)
                    break
            if chosen is None:
                chosen = (remaining_tables[0], None)
            steps.append(chosen)
            placed.add(chosen[0])
            remaining_tables.remove(chosen[0])
            if chosen[1] is not None:
                remaining_edges.remove(chosen[1])
        return steps


def _name_coverage(graph: ContextGraph, question_tokens: set
                   ) -> Dict[str, float]:
    """Per table: best fraction of one of its name variants the question hits.

    A table mentioned by its full name (or alias, or a synonym) covers 1.0;
    "members" alone covers MEMBER_ACCOUNT only half, which keeps a partial
    name token from dragging in the wrong table.
    """
    coverage: Dict[str, float] = {}
    variants: Dict[str, List[set]] = {}
    for table in graph.tables:
        variants[table.table_id] = [
            s for s in (stem_set(table.table_id), stem_set(table.physical_name),
                        stem_set(table.alias), stem_set(table.display_name))
            if s
        ]
    for ann in graph.annotations:
        if ann.kind == SYNONYM and isinstance(ann.target, TableRef):
            s = stem_set(ann.payload.get("term", ""))
            if s:
                variants.setdefault(ann.target.table, []).append(s)
    for table_id, sets in variants.items():
        coverage[table_id] = max(
            (len(question_tokens & s) / len(s) for s in sets), default=0.0)
    return coverage


def identify_tables(question: str, graph: ContextGraph,
                    index: Optional[Dict[str, Dict[str, float]]] = None,
                    adjudicator=None) -> TableSelection:
    if index is None:
        index = build_keyword_index(graph)
    tokens = sorted(stem_set(question, drop_stopwords=True))
    coverage = _name_coverage(graph, set(tokens))
    weights: Dict[str, float] = {}
    for token in tokens:
        slot = index.get(token, {})
        claimers = {t for t, w in slot.items() if w >= TABLE_TOKEN_WEIGHT}
        for table_id, w in slot.items():
            if claimers:
                # a table-name token speaks only for the tables it names
                if table_id not in claimers:
                    continue
                w = TABLE_TOKEN_WEIGHT * coverage.get(table_id, 1.0)
            weights[table_id] = weights.get(table_id, 0.0) + w
    if not weights:
        raise NoTableMatch(f"no schema vocabulary matches: {question!r}",
                           question=question)

    selected = sorted((t for t, w in weights.items() if w >= SELECT_THRESHOLD),
                      key=lambda t: (-weights[t], t))
    if not selected:
        best = min(weights, key=lambda t: (-weights[t], t))
        selected = [best]

    tables, edges = _connect(graph, selected)
    return TableSelection(tables=tables, edges=edges, weights=weights)


def extend_selection(graph: ContextGraph, selection: TableSelection,
                     extra_tables: List[str]) -> TableSelection:
    """Widen a selection with tables grounding pulled in after the fact."""
    needed = [t for t in extra_tables if t not in selection.tables]
    if not needed:
        return selection
    tables, edges = _connect(graph, selection.tables + sorted(needed))
    return TableSelection(tables=tables, edges=edges,
                          weights=selection.weights)


def _adjacency(graph: ContextGraph) -> Dict[str, List[JoinEdge]]:
    adj: Dict[str, List[JoinEdge]] = {}
    for edge in graph.joins:
        adj.setdefault(edge.left_table, []).append(edge)
        adj.setdefault(edge.right_table, []).append(edge)
    return adj


def _shortest_path(graph: ContextGraph, sources: set, targets: set
                   ) -> Optional[List[JoinEdge]]:
    """BFS minimizing edge count; ties by max-min confidence, then lexicographic."""
    adj = _adjacency(graph)
    best: Optional[Tuple[int, float, tuple, List[JoinEdge]]] = None
    for start in sorted(sources):
        queue = deque([(start, [], 1.0, (start,))])
        seen = {start: 0}
        while queue:
            table, path, min_conf, trail = queue.popleft()
            if table in targets and path:
                key = (len(path), -min_conf, trail)
                if best is None or key < (best[0], -best[1], best[2]):
                    best = (len(path), min_conf, trail, path)
                continue
            for edge in sorted(adj.get(table, []),
                               key=lambda e: (e.left_table, e.right_table)):
                other = edge.right_table if edge.left_table == table else edge.left_table
                depth = len(path) + 1
                if seen.get(other, 1 << 30) < depth:
                    continue
                seen[other] = depth
                queue.append((other, path + [edge],
                              min(min_conf, edge.confidence), trail + (other,)))
    return best[3] if best else None


def _connect(graph: ContextGraph, selected: List[str]
             ) -> Tuple[List[str], List[JoinEdge]]:
    tables = list(selected)
    edges: List[JoinEdge] = []
    connected = {tables[0]}
    pending = [t for t in tables[1:]]
    while pending:
        target = pending[0]
        if target in connected:
            pending.pop(0)
            continue
        path = _shortest_path(graph, connected, {target})
        if path is None:
            raise DisconnectedModels(
                f"no join path reaches {target}", tables=sorted(connected | {target}))
        for edge in path:
            for t in edge.tables():
                if t not in connected:
                    connected.add(t)
                    if t not in tables:
                        tables.append(t)
            edges.append(edge)
        pending.pop(0)
    return tables, edges
