"""Context graph model: tables, join edges, per-column annotations.

Graph values are immutable snapshots. Every mutation (annotation edit,
rebuild) returns a new graph with ``version + 1``; annotations are kept as
an ordered event list and folded into the table metadata, so a serialized
document always carries both the folded state and the audit trail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from .errors import (
    InvalidPayload,
    MalformedDocument,
    UnresolvedTarget,
    UnsupportedSchemaVersion,
)

SCHEMA_VERSION = 1

DATA_TYPES = ("integer", "decimal", "text", "date", "timestamp", "boolean")
NUMERIC_TYPES = ("integer", "decimal")

DIMENSION = "dimension"
MEASURE = "measure"

ONE_TO_ONE = "one_to_one"
ONE_TO_MANY = "one_to_many"
MANY_TO_ONE = "many_to_one"
MANY_TO_MANY = "many_to_many"

INFERRED = "inferred"
USER_DECLARED = "user_declared"

ALIAS_MAX_LEN = 24

_FLIP_CARDINALITY = {
    ONE_TO_MANY: MANY_TO_ONE,
    MANY_TO_ONE: ONE_TO_MANY,
    ONE_TO_ONE: ONE_TO_ONE,
    MANY_TO_MANY: MANY_TO_MANY,
}


@dataclass(frozen=True)
class ColumnRef:
    table: str
    column: str

    def __str__(self) -> str:
        return f"{self.table}.{self.column}"


@dataclass(frozen=True)
class TableRef:
    table: str


@dataclass(frozen=True)
class GraphRef:
    pass


AnnotationTarget = Union[ColumnRef, TableRef, GraphRef]


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    data_type: str
    role: str = DIMENSION
    display_name: str = ""
    description: str = ""
    aliases: tuple = ()
    pii: bool = False
    sample_values: tuple = ()
    stats_ref: Optional[str] = None


@dataclass(frozen=True)
class TableNode:
    table_id: str
    physical_name: str
    display_name: str = ""
    alias: str = ""
    description: str = ""
    columns: tuple = ()
    primary_key: tuple = ()
    row_count_estimate: int = 0

    def column(self, name: str) -> Optional[ColumnMeta]:
        for col in self.columns:
            if col.name == name:
                return col
        return None

    def column_names(self) -> list:
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class JoinEdge:
    left_table: str
    left_columns: tuple
    right_table: str
    right_columns: tuple
    confidence: float = 1.0
    cardinality: str = MANY_TO_MANY
    origin: str = INFERRED
    condition_kind: str = "equi"

    def canonical(self) -> "JoinEdge":
        """One orientation per logical edge: smaller table_id on the left."""
        if self.left_table <= self.right_table:
            return self
        return JoinEdge(
            left_table=self.right_table,
            left_columns=self.right_columns,
            right_table=self.left_table,
            right_columns=self.left_columns,
            confidence=self.confidence,
            cardinality=_FLIP_CARDINALITY[self.cardinality],
            origin=self.origin,
            condition_kind=self.condition_kind,
        )

    def tables(self) -> tuple:
        return (self.left_table, self.right_table)

    def columns_for(self, table_id: str) -> tuple:
        if table_id == self.left_table:
            return self.left_columns
        if table_id == self.right_table:
            return self.right_columns
        raise KeyError(table_id)


PRIORITIZATION = "prioritization"
SYNONYM = "synonym"
DESCRIPTION = "description"
CUSTOM_MEASURE = "custom_measure"
ENFORCER_RULE = "enforcer_rule"

ANNOTATION_KINDS = (PRIORITIZATION, SYNONYM, DESCRIPTION, CUSTOM_MEASURE, ENFORCER_RULE)


@dataclass(frozen=True)
class Annotation:
    kind: str
    target: AnnotationTarget
    payload: dict
    author: str = "system"
    created_at: str = ""


@dataclass(frozen=True)
class Violation:
    rule: str
    element: str
    message: str = ""

    def __str__(self) -> str:
        return f"{self.rule}({self.element})" + (f": {self.message}" if self.message else "")


@dataclass(frozen=True)
class ContextGraph:
    graph_id: str
    tables: tuple = ()
    joins: tuple = ()
    annotations: tuple = ()
    version: int = 1
    built_at: str = ""

    # -- lookups -------------------------------------------------------------

    def table(self, table_id: str) -> Optional[TableNode]:
        for t in self.tables:
            if t.table_id == table_id:
                return t
        return None

    def require_table(self, table_id: str) -> TableNode:
        t = self.table(table_id)
        if t is None:
            raise KeyError(f"unknown table: {table_id}")
        return t

    def column(self, ref: ColumnRef) -> Optional[ColumnMeta]:
        t = self.table(ref.table)
        return t.column(ref.column) if t else None

    def table_ids(self) -> list:
        return [t.table_id for t in self.tables]

    def edges_touching(self, table_id: str) -> list:
        return [e for e in self.joins if table_id in e.tables()]

    def prioritizations(self) -> dict:
        """term -> ordered candidate ColumnRefs; later annotations win."""
        rules = {}
        for ann in self.annotations:
            if ann.kind == PRIORITIZATION:
                term = ann.payload["term"].lower()
                rules[term] = [ColumnRef(**c) if isinstance(c, dict) else c
                               for c in ann.payload["candidates"]]
        return rules

    def enforcer_rules(self, table_id: str) -> list:
        preds = []
        for ann in self.annotations:
            if ann.kind == ENFORCER_RULE and isinstance(ann.target, TableRef) \
                    and ann.target.table == table_id:
                preds.append(ann.payload["predicate"])
        return preds

    def custom_measures(self) -> list:
        """(name, expression, table) triples, user-declared last-write-wins."""
        seen = {}
        for ann in self.annotations:
            if ann.kind == CUSTOM_MEASURE:
                p = ann.payload
                seen[p["name"].lower()] = (p["name"], p["expression"], p["table"])
        return list(seen.values())

    def pii_columns(self) -> set:
        return {ColumnRef(t.table_id, c.name)
                for t in self.tables for c in t.columns if c.pii}

    # -- mutation ------------------------------------------------------------

    def bump(self, **changes) -> "ContextGraph":
        changes.setdefault("version", self.version + 1)
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_graph(graph: ContextGraph) -> list:
    violations = []
    seen_ids = set()
    seen_aliases = {}
    for t in graph.tables:
        if t.table_id in seen_ids:
            violations.append(Violation("DuplicateTableId", t.table_id))
        seen_ids.add(t.table_id)
        if not t.alias or len(t.alias) > ALIAS_MAX_LEN:
            violations.append(Violation("BadAlias", t.table_id,
                                        f"alias {t.alias!r} empty or too long"))
        elif t.alias in seen_aliases:
            violations.append(Violation("DuplicateAlias", t.alias,
                                        f"on {seen_aliases[t.alias]} and {t.table_id}"))
        else:
            seen_aliases[t.alias] = t.table_id
        if t.row_count_estimate < 0:
            violations.append(Violation("NegativeRowCount", t.table_id))
        col_names = set()
        for c in t.columns:
            if c.name in col_names:
                violations.append(Violation("DuplicateColumn", f"{t.table_id}.{c.name}"))
            col_names.add(c.name)
            if c.data_type not in DATA_TYPES:
                violations.append(Violation("UnknownDataType", f"{t.table_id}.{c.name}",
                                            c.data_type))
            if c.role == MEASURE and c.data_type not in NUMERIC_TYPES:
                violations.append(Violation("NonNumericMeasure", f"{t.table_id}.{c.name}"))
            if c.pii and c.sample_values:
                violations.append(Violation("PiiSampleLeak", f"{t.table_id}.{c.name}"))
            if len(c.sample_values) > 20:
                violations.append(Violation("OversizedSample", f"{t.table_id}.{c.name}"))
        for pk in t.primary_key:
            if pk not in col_names:
                violations.append(Violation("MissingPkColumn", f"{t.table_id}.{pk}"))

    for e in graph.joins:
        for side_table, side_cols in ((e.left_table, e.left_columns),
                                      (e.right_table, e.right_columns)):
            t = graph.table(side_table)
            if t is None:
                violations.append(Violation("DanglingJoin", side_table))
                continue
            for c in side_cols:
                if t.column(c) is None:
                    violations.append(Violation("DanglingJoinColumn", f"{side_table}.{c}"))
        if e.left_table == e.right_table:
            violations.append(Violation("SelfJoin", e.left_table))
        if len(e.left_columns) != len(e.right_columns) or not e.left_columns:
            violations.append(Violation("BadJoinColumns",
                                        f"{e.left_table}~{e.right_table}"))
        if not (0.0 <= e.confidence <= 1.0):
            violations.append(Violation("BadConfidence", f"{e.left_table}~{e.right_table}"))
        if e.origin == USER_DECLARED and e.confidence != 1.0:
            violations.append(Violation("DeclaredEdgeConfidence",
                                        f"{e.left_table}~{e.right_table}"))
        if e.left_table > e.right_table:
            violations.append(Violation("NonCanonicalEdge",
                                        f"{e.left_table}~{e.right_table}"))
    return violations


# ---------------------------------------------------------------------------
# annotations
# ---------------------------------------------------------------------------

def _resolve_target(graph: ContextGraph, target: AnnotationTarget) -> None:
    if isinstance(target, GraphRef):
        return
    if isinstance(target, TableRef):
        if graph.table(target.table) is None:
            raise UnresolvedTarget(f"unknown table: {target.table}")
        return
    if isinstance(target, ColumnRef):
        if graph.column(target) is None:
            raise UnresolvedTarget(f"unknown column: {target}")
        return
    raise UnresolvedTarget(f"unsupported target: {target!r}")


def _check_payload(graph: ContextGraph, ann: Annotation) -> None:
    p = ann.payload
    if ann.kind == PRIORITIZATION:
        term = p.get("term", "")
        candidates = [ColumnRef(**c) if isinstance(c, dict) else c
                      for c in p.get("candidates", [])]
        if not term or len(candidates) < 2:
            raise InvalidPayload("prioritization needs a term and >= 2 candidates")
        from .planner.text import stem_set  # runtime import avoids a cycle

        term_tokens = stem_set(term)
        for ref in candidates:
            col = graph.column(ref)
            if col is None:
                raise InvalidPayload(f"prioritization candidate missing: {ref}")
            carried = stem_set(col.name) | stem_set(col.display_name)
            for alias in col.aliases:
                carried |= stem_set(alias)
            if not term_tokens <= carried:
                raise InvalidPayload(
                    f"candidate {ref} does not carry the ambiguous term {term!r}")
    elif ann.kind == SYNONYM:
        if not p.get("term"):
            raise InvalidPayload("synonym needs a term")
        if not isinstance(ann.target, (ColumnRef, TableRef)):
            raise InvalidPayload("synonym target must be a column or table")
    elif ann.kind == DESCRIPTION:
        if "text" not in p:
            raise InvalidPayload("description needs text")
    elif ann.kind == CUSTOM_MEASURE:
        for key in ("name", "expression", "table"):
            if not p.get(key):
                raise InvalidPayload(f"custom measure needs {key}")
        table = graph.table(p["table"])
        if table is None:
            raise UnresolvedTarget(f"unknown table: {p['table']}")
        _check_measure_expression(table, p["expression"])
    elif ann.kind == ENFORCER_RULE:
        if not p.get("predicate"):
            raise InvalidPayload("enforcer rule needs a predicate")
        if not isinstance(ann.target, TableRef):
            raise InvalidPayload("enforcer rule target must be a table")
        p.setdefault("table", ann.target.table)
    else:
        raise InvalidPayload(f"unknown annotation kind: {ann.kind}")


_SQL_WORDS = {
    "select", "case", "when", "then", "else", "end", "and", "or", "not",
    "null", "is", "in", "between", "like", "as", "cast", "integer", "decimal",
    "text", "date", "real", "sum", "avg", "count", "min", "max", "abs",
    "round", "coalesce", "nullif", "julianday", "length", "lower", "upper",
    "true", "false", "distinct",
}


def _check_measure_expression(table: TableNode, expression: str) -> None:
    """Every bare identifier in the expression must be a column of ``table``."""
    import re

    cols = {c.lower() for c in table.column_names()}
    for word in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", expression):
        w = word.lower()
        if w in _SQL_WORDS or w in cols:
            continue
        raise InvalidPayload(
            f"custom measure references {word!r}, not a column of {table.table_id}")


def _fold(graph: ContextGraph, ann: Annotation) -> ContextGraph:
    """Fold a validated annotation into the table metadata."""
    if ann.kind == SYNONYM and isinstance(ann.target, ColumnRef):
        term = ann.payload["term"]

        def update(col: ColumnMeta) -> ColumnMeta:
            if term in col.aliases:
                return col
            return replace(col, aliases=col.aliases + (term,))

        return _rewrite_column(graph, ann.target, update)
    # table-level synonyms stay as events; the keyword index reads them
    if ann.kind == DESCRIPTION:
        text = ann.payload["text"]
        if isinstance(ann.target, ColumnRef):
            return _rewrite_column(graph, ann.target,
                                   lambda c: replace(c, description=text))
        if isinstance(ann.target, TableRef):
            tables = tuple(replace(t, description=text)
                           if t.table_id == ann.target.table else t
                           for t in graph.tables)
            return replace(graph, tables=tables)
    return graph


def _rewrite_column(graph: ContextGraph, ref: ColumnRef, fn) -> ContextGraph:
    tables = []
    for t in graph.tables:
        if t.table_id == ref.table:
            cols = tuple(fn(c) if c.name == ref.column else c for c in t.columns)
            t = replace(t, columns=cols)
        tables.append(t)
    return replace(graph, tables=tuple(tables))


def apply_annotation(graph: ContextGraph, ann: Annotation) -> ContextGraph:
    """Pure: returns a new graph with version + 1; the input is unchanged."""
    _resolve_target(graph, ann.target)
    _check_payload(graph, ann)
    folded = _fold(graph, ann)
    return folded.bump(annotations=graph.annotations + (ann,))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _target_to_doc(target: AnnotationTarget) -> dict:
    if isinstance(target, ColumnRef):
        return {"kind": "column", "table": target.table, "column": target.column}
    if isinstance(target, TableRef):
        return {"kind": "table", "table": target.table}
    return {"kind": "graph"}


def _target_from_doc(doc: dict) -> AnnotationTarget:
    kind = doc.get("kind")
    if kind == "column":
        return ColumnRef(doc["table"], doc["column"])
    if kind == "table":
        return TableRef(doc["table"])
    if kind == "graph":
        return GraphRef()
    raise MalformedDocument(f"bad annotation target: {doc!r}")


def graph_to_doc(graph: ContextGraph) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "graph_id": graph.graph_id,
        "version": graph.version,
        "built_at": graph.built_at,
        "tables": [
            {
                "table_id": t.table_id,
                "physical_name": t.physical_name,
                "display_name": t.display_name,
                "alias": t.alias,
                "description": t.description,
                "primary_key": list(t.primary_key),
                "row_count_estimate": t.row_count_estimate,
                "columns": [
                    {
                        "name": c.name,
                        "data_type": c.data_type,
                        "role": c.role,
                        "display_name": c.display_name,
                        "description": c.description,
                        "aliases": list(c.aliases),
                        "pii": c.pii,
                        "sample_values": list(c.sample_values),
                        "stats_ref": c.stats_ref,
                    }
                    for c in t.columns
                ],
            }
            for t in graph.tables
        ],
        "joins": [
            {
                "left_table": e.left_table,
                "left_columns": list(e.left_columns),
                "right_table": e.right_table,
                "right_columns": list(e.right_columns),
                "condition_kind": e.condition_kind,
                "confidence": e.confidence,
                "cardinality": e.cardinality,
                "origin": e.origin,
            }
            for e in graph.joins
        ],
        "annotations": [
            {
                "kind": a.kind,
                "target": _target_to_doc(a.target),
                "payload": a.payload,
                "author": a.author,
                "created_at": a.created_at,
            }
            for a in graph.annotations
        ],
    }


def serialize_graph(graph: ContextGraph) -> bytes:
    doc = graph_to_doc(graph)
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def graph_from_doc(doc: dict) -> ContextGraph:
    if not isinstance(doc, dict):
        raise MalformedDocument("graph document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise UnsupportedSchemaVersion(version)
    try:
        tables = tuple(
            TableNode(
                table_id=t["table_id"],
                physical_name=t["physical_name"],
                display_name=t.get("display_name", ""),
                alias=t.get("alias", ""),
                description=t.get("description", ""),
                primary_key=tuple(t.get("primary_key", [])),
                row_count_estimate=t.get("row_count_estimate", 0),
                columns=tuple(
                    ColumnMeta(
                        name=c["name"],
                        data_type=c["data_type"],
                        role=c.get("role", DIMENSION),
                        display_name=c.get("display_name", ""),
                        description=c.get("description", ""),
                        aliases=tuple(c.get("aliases", [])),
                        pii=c.get("pii", False),
                        sample_values=tuple(c.get("sample_values", [])),
                        stats_ref=c.get("stats_ref"),
                    )
                    for c in t.get("columns", [])
                ),
            )
            for t in doc.get("tables", [])
        )
        joins = tuple(
            JoinEdge(
                left_table=e["left_table"],
                left_columns=tuple(e["left_columns"]),
                right_table=e["right_table"],
                right_columns=tuple(e["right_columns"]),
                condition_kind=e.get("condition_kind", "equi"),
                confidence=e.get("confidence", 1.0),
                cardinality=e.get("cardinality", MANY_TO_MANY),
                origin=e.get("origin", INFERRED),
            )
            for e in doc.get("joins", [])
        )
        annotations = tuple(
            Annotation(
                kind=a["kind"],
                target=_target_from_doc(a.get("target", {"kind": "graph"})),
                payload=a.get("payload", {}),
                author=a.get("author", "system"),
                created_at=a.get("created_at", ""),
            )
            for a in doc.get("annotations", [])
        )
        return ContextGraph(
            graph_id=doc["graph_id"],
            tables=tables,
            joins=joins,
            annotations=annotations,
            version=doc.get("version", 1),
            built_at=doc.get("built_at", ""),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedDocument(str(exc)) from exc


def deserialize_graph(data: bytes) -> ContextGraph:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(str(exc)) from exc
    return graph_from_doc(doc)
