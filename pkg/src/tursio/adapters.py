"""Data-source adapters.

Two implementations of the same behavioral contract:

* ``CsvDirectoryAdapter`` — one CSV file per table (file name = table name,
  first row = header, RFC-4180 quoting, empty field = null).  ``execute``
  loads the files into an in-memory SQLite database so SQL produced by the
  planner can actually run against the fixture.
* ``SqliteAdapter`` — a SQLite database file; declared types are trusted.

Both are read-only: ``execute`` rejects anything that is not a SELECT.
"""

from __future__ import annotations

import csv
import os
import re
import sqlite3
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import AdapterFailure, ReadOnlyViolation, TableNotFound

_SELECT_RE = re.compile(r"^\s*\(*\s*(select|with)\b", re.IGNORECASE)


def ensure_read_only(sql: str) -> None:
    if not _SELECT_RE.match(sql):
        raise ReadOnlyViolation(f"only SELECT statements are allowed: {sql[:60]!r}")
    # a second statement smuggled behind a semicolon is also rejected
    body = sql.strip().rstrip(";")
    if ";" in body:
        raise ReadOnlyViolation("multi-statement input rejected")


class DataSourceAdapter:
    """Behavioral contract; see module docstring."""

    def list_tables(self) -> List[str]:
        raise NotImplementedError

    def read_schema(self, table: str) -> List[Tuple[str, Optional[str]]]:
        """(column name, declared type) pairs; declared type may be None."""
        raise NotImplementedError

    def scan(self, table: str, limit: Optional[int] = None) -> Iterator[dict]:
        """Stream rows as dicts of raw scalars; None marks null."""
        raise NotImplementedError

    def execute(self, sql: str) -> Tuple[List[str], List[tuple]]:
        raise NotImplementedError

    def distinct_values(self, table: str, column: str) -> set:
        """Distinct non-null values of one column; default via full scan."""
        values = set()
        for row in self.scan(table):
            v = row.get(column)
            if v is not None:
                values.add(v)
        return values

    def containment_count(self, fk_table: str, fk_column: str,
                          pk_table: str, pk_column: str) -> Tuple[int, int]:
        """(contained, total) distinct non-null fk values vs the pk domain."""
        fk_vals = self.distinct_values(fk_table, fk_column)
        pk_vals = self.distinct_values(pk_table, pk_column)
        return len(fk_vals & pk_vals), len(fk_vals)


class CsvDirectoryAdapter(DataSourceAdapter):
    def __init__(self, directory: str):
        self.directory = directory
        if not os.path.isdir(directory):
            raise AdapterFailure(f"not a directory: {directory}")
        self._db: Optional[sqlite3.Connection] = None

    # -- contract ------------------------------------------------------------

    def list_tables(self) -> List[str]:
        names = [f[:-4] for f in os.listdir(self.directory) if f.endswith(".csv")]
        return sorted(names)

    def _path(self, table: str) -> str:
        path = os.path.join(self.directory, table + ".csv")
        if not os.path.isfile(path):
            raise TableNotFound(table)
        return path

    def read_schema(self, table: str) -> List[Tuple[str, Optional[str]]]:
        path = self._path(table)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                return []
        return [(name, None) for name in header]

    def scan(self, table: str, limit: Optional[int] = None) -> Iterator[dict]:
        path = self._path(table)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                return
            count = 0
            for row in reader:
                if limit is not None and count >= limit:
                    return
                yield {name: (value if value != "" else None)
                       for name, value in zip(header, row)}
                count += 1

    def execute(self, sql: str) -> Tuple[List[str], List[tuple]]:
        ensure_read_only(sql)
        db = self._database()
        try:
            cur = db.execute(sql)
        except sqlite3.Error as exc:
            raise AdapterFailure(f"{exc} while executing: {sql}") from exc
        columns = [d[0] for d in cur.description] if cur.description else []
        return columns, cur.fetchall()

    # -- sqlite materialization ----------------------------------------------

    def _database(self) -> sqlite3.Connection:
        if self._db is None:
            db = sqlite3.connect(":memory:")
            for table in self.list_tables():
                self._load_table(db, table)
            self._db = db
        return self._db

    def _load_table(self, db: sqlite3.Connection, table: str) -> None:
        schema = self.read_schema(table)
        if not schema:
            return
        cols = ", ".join(f'"{name}" NUMERIC' for name, _ in schema)
        db.execute(f'CREATE TABLE "{table.lower()}" ({cols})')
        placeholders = ", ".join("?" for _ in schema)
        names = [name for name, _ in schema]
        rows = ([row.get(n) for n in names] for row in self.scan(table))
        db.executemany(f'INSERT INTO "{table.lower()}" VALUES ({placeholders})', rows)
        db.commit()


_SQLITE_TYPE_MAP = (
    ("INT", "integer"),
    ("CHAR", "text"),
    ("CLOB", "text"),
    ("TEXT", "text"),
    ("REAL", "decimal"),
    ("FLOA", "decimal"),
    ("DOUB", "decimal"),
    ("DEC", "decimal"),
    ("NUM", "decimal"),
    ("BOOL", "boolean"),
    ("DATETIME", "timestamp"),
    ("TIMESTAMP", "timestamp"),
    ("DATE", "date"),
)


def map_declared_type(declared: str) -> str:
    upper = (declared or "").upper()
    for needle, mapped in _SQLITE_TYPE_MAP:
        if needle in upper:
            return mapped
    return "text"


class SqliteAdapter(DataSourceAdapter):
    def __init__(self, path: str):
        try:
            self._db = sqlite3.connect(path)
        except sqlite3.Error as exc:
            raise AdapterFailure(str(exc)) from exc

    def list_tables(self) -> List[str]:
        cur = self._db.execute(
            "SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name")
        return [r[0] for r in cur.fetchall()]

    def read_schema(self, table: str) -> List[Tuple[str, Optional[str]]]:
        if table not in self.list_tables():
            raise TableNotFound(table)
        cur = self._db.execute(f'PRAGMA table_info("{table}")')
        return [(r[1], r[2]) for r in cur.fetchall()]

    def scan(self, table: str, limit: Optional[int] = None) -> Iterator[dict]:
        names = [n for n, _ in self.read_schema(table)]
        sql = f'SELECT * FROM "{table}"'
        if limit is not None:
            sql += f" LIMIT {int(limit)}"
        for row in self._db.execute(sql):
            yield dict(zip(names, row))

    def execute(self, sql: str) -> Tuple[List[str], List[tuple]]:
        ensure_read_only(sql)
        try:
            cur = self._db.execute(sql)
        except sqlite3.Error as exc:
            raise AdapterFailure(f"{exc} while executing: {sql}") from exc
        columns = [d[0] for d in cur.description] if cur.description else []
        return columns, cur.fetchall()
