"""Deterministic intent grammar: question text -> QuerySketch.

Grammar shape: [aggregate-word] SELECT-phrases [by GROUP-phrases]
[with|where FILTER-phrases] [time-phrase] [top N].  The function is total:
anything the grammar cannot decompose falls back to one select phrase over
the whole question (table identification still gets a chance downstream).

Relative time phrases are recorded symbolically and resolved later against
a caller-injected clock, never the wall clock.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import List, Optional, Tuple

from .text import STOPWORDS, stem

NUMBER = "number"
STRING = "string"
DATE = "date"


@dataclass(frozen=True)
class FilterTerm:
    phrase: str
    comparator: str
    literal: object
    literal_type: str = NUMBER


@dataclass(frozen=True)
class TimeWindow:
    period: str = ""          # e.g. "last_quarter"; empty for explicit ranges
    start: str = ""           # ISO dates when explicit
    end: str = ""

    def resolve(self, clock: date) -> Tuple[str, str]:
        if self.start and self.end:
            return self.start, self.end
        return resolve_period(self.period, clock)


@dataclass
class QuerySketch:
    select_terms: List[str] = field(default_factory=list)
    group_terms: List[str] = field(default_factory=list)
    filter_terms: List[FilterTerm] = field(default_factory=list)
    time_window: Optional[TimeWindow] = None
    time_anchor: Optional[str] = None
    order_term: Optional[Tuple[str, str]] = None   # (phrase, "asc"|"desc")
    limit: Optional[int] = None
    wants_aggregate: bool = False
    aggregate_fn: Optional[str] = None
    fallback: bool = False

    def to_doc(self) -> dict:
        return {
            "select_terms": self.select_terms,
            "group_terms": self.group_terms,
            "filter_terms": [
                {"phrase": f.phrase, "comparator": f.comparator,
                 "literal": f.literal, "literal_type": f.literal_type}
                for f in self.filter_terms
            ],
            "time_window": (
                {"period": self.time_window.period,
                 "start": self.time_window.start,
                 "end": self.time_window.end}
                if self.time_window else None),
            "time_anchor": self.time_anchor,
            "order_term": list(self.order_term) if self.order_term else None,
            "limit": self.limit,
            "wants_aggregate": self.wants_aggregate,
            "aggregate_fn": self.aggregate_fn,
            "fallback": self.fallback,
        }


def sketch_from_doc(doc: dict) -> QuerySketch:
    tw = doc.get("time_window")
    order = doc.get("order_term")
    return QuerySketch(
        select_terms=list(doc.get("select_terms", [])),
        group_terms=list(doc.get("group_terms", [])),
        filter_terms=[FilterTerm(f["phrase"], f["comparator"], f["literal"],
                                 f.get("literal_type", NUMBER))
                      for f in doc.get("filter_terms", [])],
        time_window=TimeWindow(tw.get("period", ""), tw.get("start", ""),
                               tw.get("end", "")) if tw else None,
        time_anchor=doc.get("time_anchor"),
        order_term=(order[0], order[1]) if order else None,
        limit=doc.get("limit"),
        wants_aggregate=doc.get("wants_aggregate", False),
        aggregate_fn=doc.get("aggregate_fn"),
        fallback=doc.get("fallback", False),
    )


# ---------------------------------------------------------------------------
# time resolution
# ---------------------------------------------------------------------------

def resolve_period(period: str, clock: date) -> Tuple[str, str]:
    year, month = clock.year, clock.month
    quarter = (month - 1) // 3
    if period == "last_quarter":
        year, quarter = (year - 1, 3) if quarter == 0 else (year, quarter - 1)
        start = date(year, quarter * 3 + 1, 1)
        end = _month_end(year, quarter * 3 + 3)
    elif period == "this_quarter":
        start = date(year, quarter * 3 + 1, 1)
        end = _month_end(year, quarter * 3 + 3)
    elif period == "last_year":
        start, end = date(year - 1, 1, 1), date(year - 1, 12, 31)
    elif period == "this_year":
        start, end = date(year, 1, 1), date(year, 12, 31)
    elif period == "last_month":
        year, month = (year - 1, 12) if month == 1 else (year, month - 1)
        start, end = date(year, month, 1), _month_end(year, month)
    elif period == "this_month":
        start, end = date(year, month, 1), _month_end(year, month)
    elif period == "year_to_date":
        start, end = date(year, 1, 1), clock
    else:
        raise ValueError(f"unknown period: {period}")
    return start.isoformat(), end.isoformat()


def _month_end(year: int, month: int) -> date:
    if month == 12:
        return date(year, 12, 31)
    return date(year, month + 1, 1) - timedelta(days=1)


# ---------------------------------------------------------------------------
# grammar
# ---------------------------------------------------------------------------

_TIME_RE = re.compile(
    r"\b(?:in |during |within )?(?:the )?(last|this|previous|current) "
    r"(quarter|year|month)\b")
_RANGE_RE = re.compile(r"\bbetween (\d{4}-\d{2}-\d{2}) and (\d{4}-\d{2}-\d{2})\b")
_YEAR_RE = re.compile(r"\b(?:in|during) (\d{4})\b")
_TOP_RE = re.compile(r"\b(?:top|first|limit) (\d+)\b")
_ORDER_RE = re.compile(
    r"\b(?:sorted|ordered|order|sort) by ([a-z_ ]+?)"
    r"( ascending| descending| asc| desc)?\s*$")

_AGGREGATE_WORDS = {
    "total": "sum", "sum": "sum", "overall": "sum",
    "average": "avg", "avg": "avg", "mean": "avg",
    "count": "count",
    "maximum": "max", "max": "max", "highest": "max", "largest": "max",
    "minimum": "min", "min": "min", "lowest": "min", "smallest": "min",
}

_ANCHOR_WORDS = {"closed", "close", "opened", "open", "joined", "issued",
                 "created", "posted"}

# longest patterns first so "greater than or equal to" wins over "greater than"
_COMPARATORS = [
    ("greater than or equal to", ">="),
    ("less than or equal to", "<="),
    ("at least", ">="),
    ("at most", "<="),
    ("no more than", "<="),
    ("greater than", ">"),
    ("more than", ">"),
    ("fewer than", "<"),
    ("less than", "<"),
    ("exceeding", ">"),
    ("exceeds", ">"),
    ("above", ">"),
    ("over", ">"),
    ("under", "<"),
    ("below", "<"),
    ("equal to", "="),
    ("equals", "="),
    (">=", ">="), ("<=", "<="), (">", ">"), ("<", "<"), ("=", "="),
]

_FILTER_SPLIT_RE = re.compile(r"\b(?:with|where|having)\b")
_PHRASE_SPLIT_RE = re.compile(r"\b(?:have|having|who|that|which|whose)\b|,")
_UNIT_WORDS = {"dollars", "dollar", "usd"}


def _parse_literal(token: str):
    token = token.strip("'\"")
    if re.fullmatch(r"\d{4}-\d{2}-\d{2}", token):
        return token, DATE
    cleaned = token.lstrip("$").replace(",", "")
    if re.fullmatch(r"[+-]?\d+", cleaned):
        return int(cleaned), NUMBER
    if re.fullmatch(r"[+-]?\d*\.\d+", cleaned):
        return float(cleaned), NUMBER
    return token, STRING


def _content_words(fragment: str) -> str:
    kept = [w for w in re.findall(r"[a-z0-9_$',.-]+", fragment)
            if w.strip("$',.-") and w not in STOPWORDS]
    return " ".join(kept)


def _has_comparator(clause: str) -> bool:
    for pattern, _ in _COMPARATORS:
        if pattern[0].isalpha():
            if re.search(rf"\b{re.escape(pattern)}\b", clause):
                return True
        elif pattern in clause:
            return True
    return False


def _parse_filter_clause(clause: str) -> Optional[FilterTerm]:
    for pattern, op in _COMPARATORS:
        idx = clause.find(pattern) if not pattern[0].isalpha() else None
        if idx is None:
            m = re.search(rf"\b{re.escape(pattern)}\b", clause)
            idx = m.start() if m else -1
        if idx is None or idx < 0:
            continue
        before = clause[:idx]
        after = clause[idx + len(pattern):].strip()
        tokens = after.split()
        if not tokens:
            return None
        literal, literal_type = _parse_literal(tokens[0])
        trailing = [w for w in tokens[1:]
                    if w not in STOPWORDS and w not in _UNIT_WORDS]
        phrase = _content_words(before + " " + " ".join(trailing))
        if not phrase:
            return None
        return FilterTerm(phrase, op, literal, literal_type)
    phrase = _content_words(clause)
    if phrase:
        # comparator-less clause: value-match filter, literal resolved during
        # grounding from column sample values
        return FilterTerm(phrase, "=", None, STRING)
    return None


def parse_question(question: str) -> QuerySketch:
    sketch = QuerySketch()
    text = question.lower().strip()
    text = re.sub(r"[?!.]+$", "", text).strip()
    if not text:
        sketch.select_terms = [""]
        sketch.fallback = True
        return sketch

    m = _RANGE_RE.search(text)
    if m:
        sketch.time_window = TimeWindow(start=m.group(1), end=m.group(2))
        text = text[:m.start()] + " " + text[m.end():]
    m = _YEAR_RE.search(text)
    if m and sketch.time_window is None:
        year = m.group(1)
        sketch.time_window = TimeWindow(start=f"{year}-01-01",
                                        end=f"{year}-12-31")
        text = text[:m.start()] + " " + text[m.end():]
    m = _TIME_RE.search(text)
    if m and sketch.time_window is None:
        rel = "last" if m.group(1) in ("last", "previous") else "this"
        sketch.time_window = TimeWindow(period=f"{rel}_{m.group(2)}")
        text = text[:m.start()] + " " + text[m.end():]

    m = _TOP_RE.search(text)
    if m:
        sketch.limit = int(m.group(1))
        text = text[:m.start()] + " " + text[m.end():]

    m = _ORDER_RE.search(text)
    if m:
        direction = "desc" if (m.group(2) or "").strip() in ("descending", "desc") \
            else "asc"
        sketch.order_term = (_content_words(m.group(1)), direction)
        text = text[:m.start()]

    if sketch.time_window is not None:
        for word in text.split():
            if word in _ANCHOR_WORDS:
                sketch.time_anchor = word
                text = re.sub(rf"\b{word}\b", " ", text, count=1)
                break

    if re.match(r"^\s*how many\b", text):
        sketch.wants_aggregate = True
        sketch.aggregate_fn = "count"
        text = re.sub(r"^\s*how many\b", " ", text)
    else:
        head = text.split()
        skip = 0
        while skip < len(head) and head[skip] in STOPWORDS:
            skip += 1
        if skip < len(head) and head[skip] in _AGGREGATE_WORDS:
            sketch.wants_aggregate = True
            sketch.aggregate_fn = _AGGREGATE_WORDS[head[skip]]
            text = " ".join(head[:skip] + head[skip + 1:])
        elif skip < len(head) and head[skip] == "number" and \
                skip + 1 < len(head) and head[skip + 1] == "of":
            sketch.wants_aggregate = True
            sketch.aggregate_fn = "count"
            text = " ".join(head[:skip] + head[skip + 2:])

    parts = _FILTER_SPLIT_RE.split(text, maxsplit=1)
    head = parts[0]
    if len(parts) > 1:
        for clause in re.split(r"\band\b", parts[1]):
            term = _parse_filter_clause(clause.strip())
            if term is not None:
                sketch.filter_terms.append(term)

    if " by " in head:
        head, group_text = head.split(" by ", 1)
        for fragment in re.split(r"\band\b|,", group_text):
            phrase = _content_words(fragment)
            if not phrase:
                continue
            if phrase in _AGGREGATE_WORDS:
                # "top 5 cities by count" orders an aggregate, no group key
                sketch.wants_aggregate = True
                sketch.aggregate_fn = _AGGREGATE_WORDS[phrase]
                continue
            sketch.group_terms.append(phrase)

    for fragment in _PHRASE_SPLIT_RE.split(head):
        for piece in re.split(r"\bfor\b|\bof\b|\band\b", fragment):
            if _has_comparator(piece):
                # "loans have delinquent days greater than 90": the clause
                # after the phrase split is a filter, not an output
                term = _parse_filter_clause(piece.strip())
                if term is not None:
                    sketch.filter_terms.append(term)
                    continue
            phrase_words = _content_words(piece).split()
            if phrase_words and phrase_words[0] in _AGGREGATE_WORDS:
                sketch.wants_aggregate = True
                if sketch.aggregate_fn is None:
                    sketch.aggregate_fn = _AGGREGATE_WORDS[phrase_words[0]]
                phrase_words = phrase_words[1:]
            phrase = " ".join(phrase_words)
            if phrase:
                sketch.select_terms.append(phrase)

    if not sketch.select_terms:
        if sketch.group_terms or sketch.filter_terms or sketch.wants_aggregate:
            # aggregate-only questions like "how many by category" still plan
            sketch.select_terms = []
        else:
            sketch.select_terms = [_content_words(question.lower()) or question]
            sketch.fallback = True
    return sketch
