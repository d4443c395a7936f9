"""Logical plan tree composed from a grounded sketch.

The tree is relational but deliberately flat: an ordered list of join steps
over base or derived relations, a conjunction of predicates, outputs, and
the usual group/order/limit trimmings.  Rewrite rules operate on this
structure; SQL emission walks it without further decisions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from typing import List, Optional, Tuple, Union

from ..errors import TypeMismatch, UnsupportedConstruct
from ..model import (
    ContextGraph,
    ColumnRef,
    JoinEdge,
    MANY_TO_MANY,
    MANY_TO_ONE,
    NUMERIC_TYPES,
    ONE_TO_MANY,
    TableRef,
)
from .grounding import GroundingSet, MeasureRef
from .index import TableSelection
from .sketch import DATE, NUMBER, STRING, QuerySketch

DEFAULT_LIMIT = 1000


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class ColumnExpr:
    table: str
    column: str


@dataclass(frozen=True)
class AggExpr:
    fn: str                              # sum | avg | count | min | max
    arg: Optional[ColumnExpr] = None     # None means COUNT(*)


@dataclass(frozen=True)
class RawExpr:
    """A custom-measure expression; column names resolve against ``table``."""
    table: str
    sql: str


Expr = Union[ColumnExpr, AggExpr, RawExpr]


@dataclass(frozen=True)
class Output:
    expr: Expr
    label: str = ""


@dataclass(frozen=True)
class Predicate:
    column: ColumnExpr
    comparator: str
    literal: object
    literal_type: str = NUMBER


@dataclass(frozen=True)
class RawPredicate:
    """Enforcer-rule text scoped to one table."""
    table: str
    sql: str


AnyPredicate = Union[Predicate, RawPredicate]


# -- relations ---------------------------------------------------------------

@dataclass(frozen=True)
class Scan:
    table: str


@dataclass(frozen=True)
class DerivedScan:
    """Pre-aggregated replacement for a fanned-out many-side table.

    Exposes ``key_columns`` plus one labeled aggregate per entry in
    ``aggregates``; ``distinct_only`` relations expose just the keys.
    """
    table: str
    key_columns: Tuple[str, ...]
    aggregates: Tuple[Tuple[str, str], ...] = ()   # (label, aggregate sql)
    predicates: Tuple[AnyPredicate, ...] = ()
    distinct_only: bool = False


Relation = Union[Scan, DerivedScan]


@dataclass(frozen=True)
class JoinStep:
    relation: Relation
    edge: Optional[JoinEdge] = None      # None for the root step

    @property
    def table(self) -> str:
        return self.relation.table


@dataclass
class PlanTree:
    steps: List[JoinStep]
    outputs: List[Output]
    predicates: List[AnyPredicate] = field(default_factory=list)
    group_by: List[ColumnExpr] = field(default_factory=list)
    order_by: Optional[Tuple[Expr, str]] = None
    limit: Optional[int] = None
    distinct: bool = False
    aggregate: bool = False

    def tables(self) -> List[str]:
        return [s.table for s in self.steps]

    def replace_relation(self, table: str, relation: Relation) -> None:
        for i, step in enumerate(self.steps):
            if step.table == table:
                self.steps[i] = JoinStep(relation=relation, edge=step.edge)
                return
        raise KeyError(table)


def many_side(edge: JoinEdge, table: str) -> bool:
    """True when ``table`` is on the many side of the edge."""
    if table == edge.left_table:
        return edge.cardinality in (MANY_TO_ONE, MANY_TO_MANY)
    if table == edge.right_table:
        return edge.cardinality in (ONE_TO_MANY, MANY_TO_MANY)
    raise KeyError(table)


# -- composition -------------------------------------------------------------

_ALREADY_AGGREGATED = ("sum(", "avg(", "count(", "min(", "max(")


def _is_aggregated_sql(sql: str) -> bool:
    return sql.strip().lower().startswith(_ALREADY_AGGREGATED)


def _check_filter_type(graph: ContextGraph, ref: ColumnRef,
                       literal_type: str) -> None:
    col = graph.column(ref)
    if col is None:
        return
    if literal_type == NUMBER and col.data_type not in NUMERIC_TYPES:
        raise TypeMismatch(
            f"numeric comparison against non-numeric column {ref}",
            column=str(ref), column_type=col.data_type)
    if literal_type == DATE and col.data_type not in ("date", "timestamp"):
        raise TypeMismatch(
            f"date comparison against non-date column {ref}",
            column=str(ref), column_type=col.data_type)


def compose_tree(sketch: QuerySketch, selection: TableSelection,
                 grounded: GroundingSet, graph: ContextGraph,
                 clock: date) -> PlanTree:
    steps = [JoinStep(relation=Scan(table), edge=edge)
             for table, edge in selection.join_steps()]
    aggregate = sketch.wants_aggregate
    fn = sketch.aggregate_fn or "sum"

    anchor_ref: Optional[ColumnRef] = None
    if grounded.time_anchor is not None:
        anchor_ref = grounded.time_anchor.target  # always a ColumnRef

    # a phrase that matched a stored value ("gold status") is a row filter,
    # not a projection
    select_groundings, value_predicates = [], []
    for g in grounded.select:
        if g.matched_value is not None and isinstance(g.target, ColumnRef):
            value_predicates.append(Predicate(
                ColumnExpr(g.target.table, g.target.column), "=",
                str(g.matched_value), STRING))
        else:
            select_groundings.append(g)

    group_by: List[ColumnExpr] = []
    for g in grounded.group:
        if isinstance(g.target, ColumnRef):
            group_by.append(ColumnExpr(g.target.table, g.target.column))
        else:
            raise UnsupportedConstruct(
                f"cannot group by {g.phrase!r}", phrase=g.phrase)

    outputs: List[Output] = []
    outputs.extend(Output(expr=c, label=c.column) for c in group_by)

    if aggregate:
        measure_cols: List[ColumnExpr] = []
        measure_refs: List[MeasureRef] = []
        for g in select_groundings:
            if isinstance(g.target, MeasureRef):
                measure_refs.append(g.target)
            elif isinstance(g.target, ColumnRef):
                if anchor_ref is not None and g.target == anchor_ref:
                    continue
                col = graph.column(g.target)
                expr = ColumnExpr(g.target.table, g.target.column)
                if col is not None and col.role == "measure":
                    measure_cols.append(expr)
                elif expr not in group_by:
                    # a selected dimension becomes a grouping key
                    group_by.append(expr)
                    outputs.append(Output(expr=expr, label=expr.column))
            # table hits only steer table choice here
        for m in measure_refs:
            if _is_aggregated_sql(m.expression):
                outputs.append(Output(expr=RawExpr(m.table, m.expression),
                                      label=m.name))
            else:
                outputs.append(Output(
                    expr=RawExpr(m.table, f"{fn}({m.expression})"),
                    label=m.name))
        for c in measure_cols:
            outputs.append(Output(expr=AggExpr(fn if fn != "count" else "sum", c),
                                  label=f"{fn}_{c.column}"))
        if not measure_refs and not measure_cols:
            if fn in ("sum", "avg", "min", "max"):
                raise UnsupportedConstruct(
                    f"{fn} needs a measure column", aggregate=fn)
            outputs.append(Output(expr=AggExpr("count"), label="count"))
    else:
        for g in select_groundings:
            if isinstance(g.target, ColumnRef):
                ref = g.target
                if anchor_ref is not None and ref == anchor_ref:
                    continue  # the time filter consumed this phrase
                expr = ColumnExpr(ref.table, ref.column)
                if not any(o.expr == expr for o in outputs):
                    outputs.append(Output(expr=expr, label=ref.column))
            elif isinstance(g.target, TableRef):
                table = graph.require_table(g.target.table)
                for pk in table.primary_key:
                    expr = ColumnExpr(table.table_id, pk)
                    if not any(o.expr == expr for o in outputs):
                        outputs.append(Output(expr=expr, label=pk))
            else:
                outputs.append(Output(expr=RawExpr(g.target.table,
                                                   g.target.expression),
                                      label=g.target.name))
        if not outputs:
            # nothing projectable: fall back to the lead table's key
            lead = graph.require_table(steps[0].table)
            cols = lead.primary_key or (lead.columns[0].name,)
            outputs = [Output(expr=ColumnExpr(lead.table_id, c), label=c)
                       for c in cols]

    predicates: List[AnyPredicate] = list(value_predicates)
    for term, g in grounded.filters:
        ref = g.target
        if not isinstance(ref, ColumnRef):
            raise UnsupportedConstruct(
                f"filter must resolve to a column: {term.phrase!r}",
                phrase=term.phrase)
        _check_filter_type(graph, ref, term.literal_type)
        predicates.append(Predicate(ColumnExpr(ref.table, ref.column),
                                    term.comparator, term.literal,
                                    term.literal_type))

    if sketch.time_window is not None and anchor_ref is not None:
        start, end = sketch.time_window.resolve(clock)
        anchor = ColumnExpr(anchor_ref.table, anchor_ref.column)
        predicates.append(Predicate(anchor, ">=", start, DATE))
        predicates.append(Predicate(anchor, "<=", end, DATE))

    order_by = None
    if grounded.order is not None and sketch.order_term is not None:
        target = grounded.order.target
        if isinstance(target, ColumnRef):
            order_by = (ColumnExpr(target.table, target.column),
                        sketch.order_term[1])
        elif isinstance(target, MeasureRef):
            order_by = (RawExpr(target.table, target.expression),
                        sketch.order_term[1])
    elif sketch.limit is not None and aggregate and group_by:
        # "top N" over an aggregate orders by the first aggregate output
        aggs = [o for o in outputs if isinstance(o.expr, (AggExpr, RawExpr))]
        if aggs:
            order_by = (aggs[0].expr, "desc")

    return PlanTree(
        steps=steps,
        outputs=outputs,
        predicates=predicates,
        group_by=group_by,
        order_by=order_by,
        limit=sketch.limit,
        distinct=not aggregate and len(steps) > 1,
        aggregate=aggregate,
    )
