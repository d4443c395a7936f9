"""Semantic enrichment: column roles, display names, aliases, PII flags.

Everything here is a pure function over immutable inputs.  The abbreviation
and PII lexicons are plain-text data files shipped with the package and can
be extended by pointing at user-supplied files of the same format.
"""

from __future__ import annotations

import os
import re
from typing import Dict, Iterable, List, Optional, Sequence, Set

from .joins import name_tokens
from .model import (
    Annotation,
    ColumnMeta,
    ContextGraph,
    CUSTOM_MEASURE,
    DIMENSION,
    MEASURE,
    NUMERIC_TYPES,
    TableRef,
)
from .profiling import ColumnStats

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

MEASURE_LEXICON = {"amount", "balance", "total", "count", "rate", "fee",
                   "price", "qty", "score", "limit", "days"}
_KEYISH_TOKENS = {"id", "code", "key"}
_DATEISH_TOKENS = {"date", "dt", "time", "timestamp", "year", "month", "day"}

MEASURE_CARDINALITY_RATIO = 0.5
PII_VALUE_RATE = 0.8


def load_abbreviations(path: Optional[str] = None) -> Dict[str, str]:
    path = path or os.path.join(_DATA_DIR, "abbreviations.txt")
    table: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            abbrev, expansion = line.split("=", 1)
            table[abbrev.strip().lower()] = expansion.strip()
    return table


def load_pii_terms(path: Optional[str] = None) -> List[str]:
    path = path or os.path.join(_DATA_DIR, "pii_terms.txt")
    with open(path, encoding="utf-8") as fh:
        return [line.strip().lower() for line in fh
                if line.strip() and not line.startswith("#")]


_ABBREVIATIONS = load_abbreviations()
_PII_TERMS = load_pii_terms()


# ---------------------------------------------------------------------------
# naming
# ---------------------------------------------------------------------------

def expand_name(physical_name: str,
                abbreviations: Optional[Dict[str, str]] = None) -> str:
    """acct_close_dt -> "Account Close Date"."""
    table = abbreviations if abbreviations is not None else _ABBREVIATIONS
    parts = []
    for token in name_tokens(physical_name):
        parts.append(table.get(token, token.capitalize()))
    return " ".join(parts) if parts else physical_name


def generate_alias(physical_name: str, existing_aliases: Iterable[str]) -> str:
    """Initials for multi-token names, else a 4-char prefix; deduplicated."""
    tokens = name_tokens(physical_name)
    if len(tokens) >= 2:
        base = "".join(t[0] for t in tokens)
    else:
        base = physical_name.lower()[:4]
    base = base[:24] or "x"
    taken = set(existing_aliases)
    if base not in taken:
        return base
    n = 2
    while f"{base}{n}"[:24] in taken:
        n += 1
    return f"{base}{n}"[:24]


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def classify_column(name: str, data_type: str, stats: ColumnStats,
                    is_key: bool = False) -> str:
    """Measure only for numeric, non-key, non-id/code/date-named columns with
    high cardinality or a measure-lexicon name; everything else is a dimension.
    """
    if data_type not in NUMERIC_TYPES or is_key:
        return DIMENSION
    tokens = set(name_tokens(name))
    if tokens & (_KEYISH_TOKENS | _DATEISH_TOKENS):
        return DIMENSION
    if tokens & MEASURE_LEXICON:
        return MEASURE
    if stats.sampled_rows and stats.distinct_count / stats.sampled_rows > MEASURE_CARDINALITY_RATIO:
        return MEASURE
    return DIMENSION


_SSN_RE = re.compile(r"^\d{3}-\d{2}-\d{4}$")
_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
_E164_RE = re.compile(r"^\+\d{8,15}$")


def _value_is_pii(value) -> bool:
    s = str(value)
    return bool(_SSN_RE.match(s) or _EMAIL_RE.match(s) or _E164_RE.match(s))


def detect_pii(name: str, stats: ColumnStats,
               terms: Optional[Sequence[str]] = None) -> bool:
    terms = terms if terms is not None else _PII_TERMS
    tokens = set(name_tokens(name))
    lowered = name.lower()
    for term in terms:
        if "_" in term:
            if term in lowered:
                return True
        elif term in tokens:
            return True
    sample = [v for v in stats.value_sample if v is not None]
    if sample:
        rate = sum(1 for v in sample if _value_is_pii(v)) / len(sample)
        if rate >= PII_VALUE_RATE:
            return True
    return False


# ---------------------------------------------------------------------------
# descriptions and custom measures
# ---------------------------------------------------------------------------

def describe_column(col: ColumnMeta, table_display: str) -> str:
    text = f"{col.display_name} of {table_display}; type {col.data_type}"
    if col.sample_values and not col.pii:
        text += f"; e.g. {col.sample_values[0]}"
    return text


def derive_custom_measures(graph: ContextGraph) -> List[Annotation]:
    """Sum/Avg for every measure column, plus a row count per table."""
    annotations = []
    for table in graph.tables:
        for col in table.columns:
            if col.role != MEASURE:
                continue
            for fn in ("sum", "avg"):
                annotations.append(Annotation(
                    kind=CUSTOM_MEASURE,
                    target=TableRef(table.table_id),
                    payload={"name": f"{fn}_{col.name}",
                             "expression": f"{fn.upper()}({col.name})",
                             "table": table.table_id},
                    author="system"))
        annotations.append(Annotation(
            kind=CUSTOM_MEASURE,
            target=TableRef(table.table_id),
            payload={"name": f"{table.table_id.lower()}_count",
                     "expression": "COUNT(*)",
                     "table": table.table_id},
            author="system"))
    return annotations
