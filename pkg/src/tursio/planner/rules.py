"""Deterministic rewrite rules applied to the plan tree, in order.

R1 scrubs protected columns out of the projection and refuses queries that
only make sense over them.  R2 appends mandatory row filters declared on
the graph.  R3 repairs the fan-out that inflates aggregates when two
many-side branches meet, by pre-aggregating each branch per join key.  R4
caps unbounded result sets.
"""

from __future__ import annotations

import re
from typing import List, Optional, Set, Tuple

from ..errors import PiiOnlyQuery
from ..model import ColumnRef, ContextGraph
from .tree import (
    AggExpr,
    AnyPredicate,
    ColumnExpr,
    DEFAULT_LIMIT,
    DerivedScan,
    JoinStep,
    Output,
    PlanTree,
    Predicate,
    RawExpr,
    RawPredicate,
    many_side,
)

R1 = "R1:pii_scrub"
R2 = "R2:enforcer"
R3 = "R3:symmetric_aggregate"
R4 = "R4:default_limit"


def apply_rules(tree: PlanTree, graph: ContextGraph) -> List[str]:
    """Mutates the tree in place; returns the names of the rules that fired."""
    applied = []
    if _apply_pii_scrub(tree, graph):
        applied.append(R1)
    if _apply_enforcers(tree, graph):
        applied.append(R2)
    if _apply_symmetric_aggregate(tree, graph):
        applied.append(R3)
    if _apply_default_limit(tree):
        applied.append(R4)
    return applied


# -- R1 ----------------------------------------------------------------------

def _is_pii(expr, pii: Set[ColumnRef]) -> bool:
    if isinstance(expr, ColumnExpr):
        return ColumnRef(expr.table, expr.column) in pii
    if isinstance(expr, AggExpr) and expr.arg is not None:
        return ColumnRef(expr.arg.table, expr.arg.column) in pii
    return False


def _apply_pii_scrub(tree: PlanTree, graph: ContextGraph) -> bool:
    pii = graph.pii_columns()
    if not pii:
        return False
    fired = False

    kept = [o for o in tree.outputs if not _is_pii(o.expr, pii)]
    if len(kept) != len(tree.outputs):
        fired = True
        if not kept:
            raise PiiOnlyQuery(
                "every requested output is a protected column",
                columns=sorted(str(ColumnRef(o.expr.table, o.expr.column))
                               for o in tree.outputs
                               if isinstance(o.expr, ColumnExpr)))
        tree.outputs = kept

    kept_groups = [g for g in tree.group_by if not _is_pii(g, pii)]
    if len(kept_groups) != len(tree.group_by):
        fired = True
        tree.group_by = kept_groups

    for p in tree.predicates:
        if isinstance(p, Predicate) and _is_pii(p.column, pii):
            raise PiiOnlyQuery(
                f"filter targets a protected column "
                f"{p.column.table}.{p.column.column}",
                columns=[f"{p.column.table}.{p.column.column}"])

    if tree.order_by is not None and _is_pii(tree.order_by[0], pii):
        tree.order_by = None
        fired = True
    return fired


# -- R2 ----------------------------------------------------------------------

def _apply_enforcers(tree: PlanTree, graph: ContextGraph) -> bool:
    fired = False
    present = {(p.table, p.sql) for p in tree.predicates
               if isinstance(p, RawPredicate)}
    for table in tree.tables():
        for predicate in graph.enforcer_rules(table):
            if (table, predicate) in present:
                continue
            tree.predicates.append(RawPredicate(table, predicate))
            present.add((table, predicate))
            fired = True
    return fired


# -- R3 ----------------------------------------------------------------------

_AGG_RE = re.compile(r"^\s*(sum|avg|count|min|max)\s*\((.*)\)\s*$",
                     re.IGNORECASE | re.DOTALL)


def _split_agg(expr) -> Optional[Tuple[str, str]]:
    """(fn, inner sql) when the expression is a single top-level aggregate."""
    if isinstance(expr, AggExpr):
        inner = expr.arg.column if expr.arg is not None else "*"
        return expr.fn, inner
    if isinstance(expr, RawExpr):
        m = _AGG_RE.match(expr.sql)
        if m:
            return m.group(1).lower(), m.group(2).strip()
    return None


def _expr_table(expr, root: str) -> Optional[str]:
    if isinstance(expr, ColumnExpr):
        return expr.table
    if isinstance(expr, AggExpr):
        return expr.arg.table if expr.arg is not None else root
    if isinstance(expr, RawExpr):
        return expr.table
    return None


def _apply_symmetric_aggregate(tree: PlanTree, graph: ContextGraph) -> bool:
    if not tree.aggregate or len(tree.steps) < 2:
        return False
    root = tree.steps[0].table
    agg_tables = {
        _expr_table(o.expr, root)
        for o in tree.outputs
        if _split_agg(o.expr) is not None
    }
    if not agg_tables:
        return False

    _reroot(tree)
    fired = False
    for step in tree.steps[1:]:
        table = step.table
        if step.edge is None or isinstance(step.relation, DerivedScan):
            continue
        if not many_side(step.edge, table):
            continue
        if any(s is not step and s.edge is not None
               and table in s.edge.tables() for s in tree.steps):
            continue  # other joins pass through this table; keep it whole
        if any(g.table == table for g in tree.group_by):
            continue
        if any(isinstance(o.expr, ColumnExpr) and o.expr.table == table
               for o in tree.outputs):
            continue
        has_agg = table in agg_tables
        others = agg_tables - {table}
        if not others:
            continue  # a single aggregated branch groups correctly as-is
        if has_agg:
            _collapse_with_aggregates(tree, step)
        else:
            _collapse_distinct(tree, step)
        fired = True
    return fired


def _reroot(tree: PlanTree) -> None:
    """Move a grouping-key (or one-side) table to the root of the join order.

    Collapsing only works on non-root steps, so a fan-out table that landed
    first by keyword weight has to give up the root before R3 can fix it.
    """
    tables = tree.tables()
    edges = [s.edge for s in tree.steps if s.edge is not None]
    if not edges:
        return
    group_tables = {g.table for g in tree.group_by}

    def fan_out(table: str) -> int:
        return sum(1 for e in edges
                   if table in e.tables() and many_side(e, table))

    root = min(tables, key=lambda t: (t not in group_tables, fan_out(t),
                                      tables.index(t)))
    if root == tables[0]:
        return
    relations = {s.table: s.relation for s in tree.steps}
    steps = [JoinStep(relation=relations[root], edge=None)]
    placed = {root}
    remaining = [t for t in tables if t != root]
    pool = list(edges)
    while remaining:
        chosen = None
        for t in remaining:
            edge = next((e for e in pool if t in e.tables()
                         and (set(e.tables()) - {t}) <= placed), None)
            if edge is not None:
                chosen = (t, edge)
                break
        if chosen is None:
            chosen = (remaining[0], None)
        steps.append(JoinStep(relation=relations[chosen[0]], edge=chosen[1]))
        placed.add(chosen[0])
        remaining.remove(chosen[0])
        if chosen[1] is not None:
            pool.remove(chosen[1])
    tree.steps = steps


def _take_local_predicates(tree: PlanTree, table: str
                           ) -> Tuple[AnyPredicate, ...]:
    local, rest = [], []
    for p in tree.predicates:
        owner = p.column.table if isinstance(p, Predicate) else p.table
        (local if owner == table else rest).append(p)
    tree.predicates = rest
    return tuple(local)


def _collapse_distinct(tree: PlanTree, step: JoinStep) -> None:
    table = step.table
    keys = step.edge.columns_for(table)
    tree.replace_relation(table, DerivedScan(
        table=table, key_columns=tuple(keys),
        predicates=_take_local_predicates(tree, table),
        distinct_only=True))


def _collapse_with_aggregates(tree: PlanTree, step: JoinStep) -> None:
    table = step.table
    keys = step.edge.columns_for(table)
    inner: List[Tuple[str, str]] = []
    outputs: List[Output] = []
    used = set()

    def fresh(label: str) -> str:
        base, n = label, 1
        while label in used:
            n += 1
            label = f"{base}_{n}"
        used.add(label)
        return label

    for out in tree.outputs:
        split = _split_agg(out.expr)
        if split is None or _expr_table(out.expr, tree.steps[0].table) != table:
            outputs.append(out)
            continue
        fn, arg = split
        label = fresh(out.label or f"{fn}_val")
        if fn == "avg":
            # avg does not compose; carry sum and count and divide outside
            s, c = fresh(f"{label}_s"), fresh(f"{label}_c")
            inner.append((s, f"sum({arg})"))
            inner.append((c, f"count({arg})"))
            combined = RawExpr(table, f"sum({s}) * 1.0 / sum({c})")
        else:
            inner.append((label, f"{fn}({arg})"))
            outer_fn = "sum" if fn in ("sum", "count") else fn
            combined = RawExpr(table, f"{outer_fn}({label})")
        outputs.append(Output(expr=combined, label=out.label))

    tree.outputs = outputs
    tree.replace_relation(table, DerivedScan(
        table=table, key_columns=tuple(keys), aggregates=tuple(inner),
        predicates=_take_local_predicates(tree, table)))


# -- R4 ----------------------------------------------------------------------

def _apply_default_limit(tree: PlanTree) -> bool:
    if tree.limit is not None:
        return False
    if tree.aggregate and not tree.group_by:
        return False  # a scalar aggregate already returns one row
    tree.limit = DEFAULT_LIMIT
    return True
