"""Table profiling: fixed-size row samples and per-column statistics.

Sampling is reservoir based and seeded from (seed_key, table name), so a
deterministic adapter always yields byte-identical stats — the whole
inference pipeline depends on that for reproducible builds.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Dict, List, Optional, Sequence, Tuple

from .adapters import DataSourceAdapter, map_declared_type
from .errors import AdapterFailure, TableNotFound

DEFAULT_SAMPLE_SIZE = 10_000
VALUE_SAMPLE_CAP = 100


@dataclass(frozen=True)
class ColumnStats:
    table: str
    column: str
    sampled_rows: int
    distinct_count: int
    null_fraction: float
    min_value: Optional[object] = None
    max_value: Optional[object] = None
    avg_length: Optional[float] = None
    value_sample: tuple = ()
    inferred_type: str = "text"


# ---------------------------------------------------------------------------
# type inference
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"^[+-]?\d+$")
_DEC_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def _is_int(v: str) -> bool:
    return bool(_INT_RE.match(v))


def _is_decimal(v: str) -> bool:
    return bool(_DEC_RE.match(v))


def _is_date(v: str) -> bool:
    if not _DATE_RE.match(v):
        return False
    try:
        date.fromisoformat(v)
        return True
    except ValueError:
        return False


def _is_timestamp(v: str) -> bool:
    if "T" not in v and " " not in v:
        return False
    try:
        datetime.fromisoformat(v.replace("Z", "+00:00"))
        return True
    except ValueError:
        return False


def _is_bool(v: str) -> bool:
    return v.lower() in ("true", "false")


_CHECKS = (
    ("integer", _is_int),
    ("decimal", _is_decimal),
    ("date", _is_date),
    ("timestamp", _is_timestamp),
    ("boolean", _is_bool),
)


def infer_type(values: Sequence) -> str:
    """Narrowest type that parses every non-null value; empty -> text."""
    strings = [str(v) for v in values if v is not None]
    if not strings:
        return "text"
    for name, check in _CHECKS:
        if all(check(s) for s in strings):
            return name
    return "text"


def parse_value(value, data_type: str):
    if value is None:
        return None
    s = str(value)
    try:
        if data_type == "integer":
            return int(s)
        if data_type == "decimal":
            return float(s)
        if data_type == "boolean":
            return s.lower() == "true"
    except ValueError:
        pass
    return s


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _seeded_rng(*parts: str) -> random.Random:
    digest = hashlib.sha256(":".join(parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def reservoir_sample(items, capacity: int, rng: random.Random) -> list:
    """Algorithm R; order of survivors follows reservoir slots."""
    sample: list = []
    for i, item in enumerate(items):
        if i < capacity:
            sample.append(item)
        else:
            j = rng.randint(0, i)
            if j < capacity:
                sample[j] = item
    return sample


# ---------------------------------------------------------------------------
# profiling
# ---------------------------------------------------------------------------

def profile_table(adapter: DataSourceAdapter, table_name: str,
                  sample_size: int = DEFAULT_SAMPLE_SIZE,
                  seed_key: str = "") -> List[ColumnStats]:
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    try:
        schema = adapter.read_schema(table_name)
    except TableNotFound:
        raise
    except Exception as exc:  # pragma: no cover - adapter specific
        raise AdapterFailure(str(exc)) from exc

    rng = _seeded_rng(seed_key, table_name)
    rows = reservoir_sample(adapter.scan(table_name), sample_size, rng)
    sampled = len(rows)

    stats = []
    for name, declared in schema:
        values = [row.get(name) for row in rows]
        non_null = [v for v in values if v is not None]
        null_count = sampled - len(non_null)
        dtype = map_declared_type(declared) if declared else infer_type(non_null)
        parsed = [parse_value(v, dtype) for v in non_null]
        distinct = len(set(parsed))

        min_value = max_value = None
        if parsed:
            try:
                min_value, max_value = min(parsed), max(parsed)
            except TypeError:
                as_text = [str(p) for p in parsed]
                min_value, max_value = min(as_text), max(as_text)

        avg_length = None
        if dtype == "text" and parsed:
            avg_length = sum(len(str(p)) for p in parsed) / len(parsed)

        value_rng = _seeded_rng(seed_key, table_name, name)
        sample = reservoir_sample(parsed, VALUE_SAMPLE_CAP, value_rng)

        stats.append(ColumnStats(
            table=table_name,
            column=name,
            sampled_rows=sampled,
            distinct_count=distinct,
            null_fraction=(null_count / sampled) if sampled else 0.0,
            min_value=min_value,
            max_value=max_value,
            avg_length=avg_length,
            value_sample=tuple(sample),
            inferred_type=dtype,
        ))
    return stats


StatsMap = Dict[Tuple[str, str], ColumnStats]


def profile_source(adapter: DataSourceAdapter,
                   tables: Optional[Sequence[str]] = None,
                   sample_size: int = DEFAULT_SAMPLE_SIZE,
                   seed_key: str = "") -> StatsMap:
    """Profile every (or the selected) tables into a (table, column) map."""
    stats: StatsMap = {}
    for table in (tables if tables is not None else adapter.list_tables()):
        for cs in profile_table(adapter, table, sample_size, seed_key):
            stats[(table, cs.column)] = cs
    return stats
