"""Deterministic SQL text from a plan tree.

Emission makes no choices: aliases come from the graph, join order from the
tree, predicate and output order from composition.  The same tree always
yields byte-identical SQL.
"""

from __future__ import annotations

import re
from typing import Dict, List

from ..errors import UnsupportedConstruct
from ..model import ContextGraph, _SQL_WORDS
from .sketch import NUMBER
from .tree import (
    AggExpr,
    ColumnExpr,
    DerivedScan,
    PlanTree,
    Predicate,
    RawExpr,
    RawPredicate,
    Scan,
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# physical names that collide with SQL keywords need quoting
_RESERVED = {
    "transaction", "order", "group", "table", "select", "from", "where",
    "join", "index", "limit", "values", "default", "check", "primary",
    "references", "case", "when", "then", "end", "union", "all",
}


def _physical(graph: ContextGraph, table: str) -> str:
    name = graph.require_table(table).physical_name.lower()
    return f'"{name}"' if name in _RESERVED else name


def _alias_map(tree: PlanTree, graph: ContextGraph) -> Dict[str, str]:
    return {s.table: graph.require_table(s.table).alias for s in tree.steps}


def _literal(value, literal_type: str) -> str:
    if literal_type == NUMBER and not isinstance(value, str):
        return str(value)
    text = str(value).replace("'", "''")
    return f"'{text}'"


_QUALIFY_RE = re.compile(r"'(?:[^']|'')*'|[A-Za-z_][A-Za-z0-9_]*")


def _qualify(sql: str, alias: str) -> str:
    """Prefix bare identifiers with ``alias``; SQL words and quoted string
    literals pass through untouched."""

    def sub(m: re.Match) -> str:
        word = m.group(0)
        if word.startswith("'") or word.lower() in _SQL_WORDS:
            return word
        return f"{alias}.{word}"

    return _QUALIFY_RE.sub(sub, sql)


def _render_expr(expr, aliases: Dict[str, str]) -> str:
    if isinstance(expr, ColumnExpr):
        return f"{aliases[expr.table]}.{expr.column}"
    if isinstance(expr, AggExpr):
        if expr.arg is None:
            return "COUNT(*)"
        return f"{expr.fn.upper()}({_render_expr(expr.arg, aliases)})"
    if isinstance(expr, RawExpr):
        return _qualify(expr.sql, aliases[expr.table])
    raise UnsupportedConstruct(f"cannot render {expr!r}")


def _render_predicate(pred, aliases: Dict[str, str]) -> str:
    if isinstance(pred, Predicate):
        left = _render_expr(pred.column, aliases)
        return f"{left} {pred.comparator} {_literal(pred.literal, pred.literal_type)}"
    return _qualify(pred.sql, aliases[pred.table])


def _render_inner_predicate(pred) -> str:
    """Predicate inside a derived subquery: bare column names."""
    if isinstance(pred, Predicate):
        return (f"{pred.column.column} {pred.comparator} "
                f"{_literal(pred.literal, pred.literal_type)}")
    return pred.sql


def _render_derived(scan: DerivedScan, graph: ContextGraph) -> str:
    physical = _physical(graph, scan.table)
    where = ""
    if scan.predicates:
        conjuncts = " AND ".join(_render_inner_predicate(p)
                                 for p in scan.predicates)
        where = f" WHERE {conjuncts}"
    keys = ", ".join(scan.key_columns)
    if scan.distinct_only:
        return f"(SELECT DISTINCT {keys} FROM {physical}{where})"
    aggs = ", ".join(f"{sql} AS {label}" for label, sql in scan.aggregates)
    return (f"(SELECT {keys}, {aggs} FROM {physical}{where} "
            f"GROUP BY {keys})")


def emit_sql(tree: PlanTree, graph: ContextGraph) -> str:
    aliases = _alias_map(tree, graph)

    select_parts: List[str] = []
    for out in tree.outputs:
        rendered = _render_expr(out.expr, aliases)
        if out.label and not isinstance(out.expr, ColumnExpr):
            rendered = f"{rendered} AS {out.label}"
        select_parts.append(rendered)
    head = "SELECT DISTINCT " if tree.distinct else "SELECT "
    sql = head + ", ".join(select_parts)

    for i, step in enumerate(tree.steps):
        alias = aliases[step.table]
        if isinstance(step.relation, Scan):
            rel = _physical(graph, step.table)
        else:
            rel = _render_derived(step.relation, graph)
        if i == 0:
            sql += f" FROM {rel} AS {alias}"
            continue
        edge = step.edge
        if edge is None:
            raise UnsupportedConstruct(
                f"table {step.table} has no join edge", table=step.table)
        other = edge.right_table if edge.left_table == step.table \
            else edge.left_table
        conds = [
            f"{aliases[other]}.{oc} = {alias}.{sc}"
            for oc, sc in zip(edge.columns_for(other),
                              edge.columns_for(step.table))
        ]
        # pre-aggregated branches join LEFT so empty branches contribute
        # nothing instead of dropping the row
        keyword = "LEFT JOIN" if isinstance(step.relation, DerivedScan) \
            and not step.relation.distinct_only else "JOIN"
        sql += f" {keyword} {rel} AS {alias} ON " + " AND ".join(conds)

    if tree.predicates:
        sql += " WHERE " + " AND ".join(
            _render_predicate(p, aliases) for p in tree.predicates)
    if tree.group_by:
        sql += " GROUP BY " + ", ".join(
            _render_expr(g, aliases) for g in tree.group_by)
    if tree.order_by is not None:
        expr, direction = tree.order_by
        sql += f" ORDER BY {_render_expr(expr, aliases)} {direction.upper()}"
    if tree.limit is not None:
        sql += f" LIMIT {tree.limit}"
    return sql
