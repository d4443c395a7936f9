"""Recursive-descent parser for the emitted SQL subset.

Covers exactly what the planner can produce plus the hand-written
reference queries in the evaluation corpus: SELECT [DISTINCT], FROM with
INNER/LEFT equi-joins, one level of derived tables, WHERE conjunctions,
GROUP BY, ORDER BY, LIMIT.  Anything else raises ParseFailure.

The result is a structural summary (tables, join pairs, projected columns,
filter atoms, group keys, aggregates) with aliases resolved to physical
table names, which is what both the eval scorer and the PII re-parse
check need.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .errors import ParseFailure

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<string>'(?:[^']|'')*')"
    r"|(?P<number>\d+\.\d+|\d+)"
    r"|(?P<ident>\"[A-Za-z_][A-Za-z0-9_]*\"|[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><>|!=|>=|<=|=|>|<|\(|\)|,|\.|\*|/)"
    r")")

AGG_FNS = {"sum", "avg", "count", "min", "max"}

NUMBER = "number"
STRING = "string"
DATE = "date"

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def _tokenize(sql: str) -> List[str]:
    out, pos = [], 0
    while pos < len(sql):
        m = _TOKEN_RE.match(sql, pos)
        if m is None:
            if sql[pos:].strip() == "":
                break
            raise ParseFailure(f"cannot tokenize near: {sql[pos:pos+20]!r}")
        out.append(m.group(0).strip())
        pos = m.end()
    return out


@dataclass
class Aggregate:
    fn: str
    column: Optional[str]        # "table.column" or None for COUNT(*)

    def key(self) -> Tuple[str, Optional[str]]:
        return (self.fn, self.column)


@dataclass
class FilterAtom:
    column: str                  # "table.column"
    comparator: str
    literal_class: str
    literal: object

    def key(self) -> tuple:
        return (self.column, self.comparator, self.literal_class,
                str(self.literal).lower())


@dataclass
class ParsedQuery:
    tables: Set[str] = field(default_factory=set)
    joins: Set[frozenset] = field(default_factory=set)
    columns: Set[str] = field(default_factory=set)
    filters: Set[tuple] = field(default_factory=set)
    group_by: Set[str] = field(default_factory=set)
    aggregates: Set[tuple] = field(default_factory=set)
    all_column_refs: Set[str] = field(default_factory=set)


@dataclass
class _Relation:
    table: str                            # physical name, lowercased
    # label -> (fn, "table.column") for derived pre-aggregates
    derived_aggs: Dict[str, Tuple[str, Optional[str]]] = field(
        default_factory=dict)
    derived: bool = False


class _Parser:
    def __init__(self, tokens: List[str]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self, offset: int = 0) -> Optional[str]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def peek_kw(self, offset: int = 0) -> Optional[str]:
        t = self.peek(offset)
        return t.lower() if t is not None else None

    def take(self) -> str:
        if self.pos >= len(self.tokens):
            raise ParseFailure("unexpected end of input")
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, keyword: str) -> None:
        t = self.take()
        if t.lower() != keyword.lower():
            raise ParseFailure(f"expected {keyword!r}, found {t!r}")

    def accept(self, keyword: str) -> bool:
        if self.peek_kw() == keyword.lower():
            self.pos += 1
            return True
        return False

    # -- grammar -------------------------------------------------------------

    def parse(self) -> ParsedQuery:
        q = self._select()
        if self.pos != len(self.tokens):
            raise ParseFailure(f"trailing tokens: {self.tokens[self.pos:]!r}")
        return q

    def _select(self) -> ParsedQuery:
        q = ParsedQuery()
        self.expect("select")
        self.accept("distinct")
        items = [self._select_item() for _ in [0]]
        while self.accept(","):
            items.append(self._select_item())

        self.expect("from")
        aliases: Dict[str, _Relation] = {}
        self._relation(q, aliases)
        while self.peek_kw() in ("join", "left", "inner"):
            if self.accept("left"):
                self.accept("outer")
                self.expect("join")
            elif self.accept("inner"):
                self.expect("join")
            else:
                self.expect("join")
            right = self._relation(q, aliases)
            self.expect("on")
            self._join_condition(q, aliases)
            while self.accept("and"):
                self._join_condition(q, aliases)
            del right

        if self.accept("where"):
            self._predicate(q, aliases)
            while self.accept("and"):
                self._predicate(q, aliases)

        if self.peek_kw() == "group":
            self.take()
            self.expect("by")
            q.group_by.add(self._column(q, aliases))
            while self.accept(","):
                q.group_by.add(self._column(q, aliases))

        if self.peek_kw() == "order":
            self.take()
            self.expect("by")
            self._order_item(q, aliases)
            while self.accept(","):
                self._order_item(q, aliases)

        if self.accept("limit"):
            self.take()

        self._resolve_items(q, items, aliases)
        return q

    # a select item is parsed lazily (token slice) because alias resolution
    # needs the FROM clause first
    def _select_item(self) -> List[str]:
        depth = 0
        start = self.pos
        while self.pos < len(self.tokens):
            t = self.peek()
            low = t.lower()
            if depth == 0 and (low == "," or low == "from"):
                break
            if t == "(":
                depth += 1
            elif t == ")":
                depth -= 1
            self.pos += 1
        if self.pos == start:
            raise ParseFailure("empty select item")
        return self.tokens[start:self.pos]

    def _relation(self, q: ParsedQuery, aliases: Dict[str, _Relation]
                  ) -> _Relation:
        if self.peek() == "(":
            self.take()
            inner = self._select()
            self.expect(")")
            self.accept("as")
            alias = self._ident()
            q.tables |= inner.tables
            q.joins |= inner.joins
            q.filters |= inner.filters
            q.aggregates |= inner.aggregates
            q.all_column_refs |= inner.all_column_refs
            if len(inner.tables) != 1:
                raise ParseFailure("derived table must scan a single table")
            table = next(iter(inner.tables))
            rel = _Relation(table=table, derived=True,
                            derived_aggs=dict(getattr(inner, "_labels", {})))
            aliases[alias] = rel
            return rel
        table = self._ident().lower()
        alias = table
        if self.accept("as"):
            alias = self._ident()
        elif self.peek_kw() not in (None, "join", "left", "inner", "on",
                                    "where", "group", "order", "limit",
                                    ")", ",", "and") and self.peek() != ")":
            alias = self._ident()
        rel = _Relation(table=table)
        aliases[alias.lower()] = rel
        aliases.setdefault(table, rel)
        q.tables.add(table)
        return rel

    def _ident(self) -> str:
        t = self.take()
        if not re.fullmatch(r"\"?[A-Za-z_][A-Za-z0-9_]*\"?", t):
            raise ParseFailure(f"expected identifier, found {t!r}")
        return t.strip('"')

    def _column(self, q: ParsedQuery, aliases: Dict[str, _Relation]) -> str:
        first = self._ident()
        if self.accept("."):
            col = self._ident().lower()
            rel = aliases.get(first.lower())
            if rel is None:
                raise ParseFailure(f"unknown alias: {first!r}")
            ref = f"{rel.table}.{col}"
        else:
            col = first.lower()
            if len({r.table for r in aliases.values()}) == 1:
                rel = next(iter(aliases.values()))
                ref = f"{rel.table}.{col}"
            else:
                raise ParseFailure(f"ambiguous bare column: {first!r}")
        q.all_column_refs.add(ref)
        return ref

    def _join_condition(self, q: ParsedQuery,
                        aliases: Dict[str, _Relation]) -> None:
        left = self._column(q, aliases)
        self.expect("=")
        right = self._column(q, aliases)
        q.joins.add(frozenset((left, right)))

    def _literal(self) -> Tuple[str, object]:
        t = self.take()
        if t.startswith("'"):
            text = t[1:-1].replace("''", "'")
            if _DATE_RE.match(text):
                return DATE, text
            return STRING, text
        if re.fullmatch(r"\d+\.\d+", t):
            return NUMBER, float(t)
        if re.fullmatch(r"\d+", t):
            return NUMBER, float(t)
        raise ParseFailure(f"expected literal, found {t!r}")

    def _predicate(self, q: ParsedQuery,
                   aliases: Dict[str, _Relation]) -> None:
        column = self._column(q, aliases)
        op = self.take()
        if op not in (">", "<", ">=", "<=", "=", "<>", "!="):
            raise ParseFailure(f"unsupported comparator: {op!r}")
        if op == "!=":
            op = "<>"
        cls, value = self._literal()
        q.filters.add(FilterAtom(column, op, cls, value).key())

    def _order_item(self, q: ParsedQuery,
                    aliases: Dict[str, _Relation]) -> None:
        if self.peek_kw() in AGG_FNS and self.peek(1) == "(":
            self._aggregate_call(q, aliases)
        else:
            self._column(q, aliases)
        if self.peek_kw() in ("asc", "desc"):
            self.take()

    def _aggregate_call(self, q: ParsedQuery, aliases: Dict[str, _Relation]
                        ) -> Aggregate:
        fn = self.take().lower()
        self.expect("(")
        if self.accept("*"):
            agg = Aggregate(fn, None)
        else:
            ref = self._column(q, aliases)
            # collapse over a derived pre-aggregate: SUM(x.sum_amount)
            # counts as the inner aggregate over the base column
            table, col = ref.split(".", 1)
            for rel in aliases.values():
                if rel.table == table and col in rel.derived_aggs:
                    inner_fn, inner_col = rel.derived_aggs[col]
                    agg = Aggregate(inner_fn, inner_col)
                    break
            else:
                agg = Aggregate(fn, ref)
        self.expect(")")
        return agg

    def _resolve_items(self, q: ParsedQuery, items: List[List[str]],
                       aliases: Dict[str, _Relation]) -> None:
        labels: Dict[str, Tuple[str, Optional[str]]] = {}
        for tokens in items:
            sub = _Parser(tokens)
            label = None
            if len(tokens) >= 2 and tokens[-2].lower() == "as":
                label = tokens[-1].lower()
                sub = _Parser(tokens[:-2])
            try:
                if sub.peek_kw() in AGG_FNS and sub.peek(1) == "(":
                    agg = sub._aggregate_call(q, aliases)
                    if sub.pos == len(sub.tokens):
                        q.aggregates.add(agg.key())
                        if label:
                            labels[label] = agg.key()
                        continue
                    # composite arithmetic over aggregates: record each call
                    q.aggregates.add(agg.key())
                    while sub.pos < len(sub.tokens):
                        if sub.peek_kw() in AGG_FNS and sub.peek(1) == "(":
                            q.aggregates.add(
                                sub._aggregate_call(q, aliases).key())
                        else:
                            sub.take()
                    continue
                ref = sub._column(q, aliases)
                if sub.pos != len(sub.tokens):
                    raise ParseFailure("unsupported select expression")
                q.columns.add(ref)
            except ParseFailure:
                raise
        q._labels = labels  # type: ignore[attr-defined]


def parse_sql(sql: str) -> ParsedQuery:
    """Structural summary of a SELECT statement; raises ParseFailure."""
    tokens = _tokenize(sql)
    if not tokens:
        raise ParseFailure("empty statement")
    return _Parser(tokens).parse()


def referenced_columns(sql: str) -> Set[str]:
    """Every ``table.column`` mentioned anywhere in the statement."""
    return set(parse_sql(sql).all_column_refs)
