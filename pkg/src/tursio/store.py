"""File-backed persistence for history, bookmarks, and feedback.

One append-only JSON-lines file per (graph, record kind) under a data
directory (TURSIO_DATA_DIR).  Appends are flushed and fsynced; the reader
tolerates a torn trailing line, so a crash mid-write loses at most the
record being written and never corrupts earlier records.
"""

from __future__ import annotations

import json
import os
import statistics
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from .errors import NotFound, NotNegative, StorageFailure

POSITIVE = "positive"
NEGATIVE = "negative"

OPEN = "open"
REVIEWED = "reviewed"
RESOLVED = "resolved"

_KINDS = ("history", "bookmarks", "feedback")


def data_dir() -> str:
    return os.environ.get("TURSIO_DATA_DIR", os.path.join(".", "tursio-data"))


@dataclass
class FeedbackEntry:
    entry_id: str
    audit_ref: str
    sentiment: str                       # POSITIVE | NEGATIVE
    user_correction: Optional[str] = None
    status: str = OPEN
    annotation_ref: Optional[dict] = None
    created_at: str = ""

    def to_doc(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "audit_ref": self.audit_ref,
            "sentiment": self.sentiment,
            "user_correction": self.user_correction,
            "status": self.status,
            "annotation_ref": self.annotation_ref,
            "created_at": self.created_at,
        }

    @staticmethod
    def from_doc(doc: dict) -> "FeedbackEntry":
        return FeedbackEntry(
            entry_id=doc["entry_id"],
            audit_ref=doc["audit_ref"],
            sentiment=doc["sentiment"],
            user_correction=doc.get("user_correction"),
            status=doc.get("status", OPEN),
            annotation_ref=doc.get("annotation_ref"),
            created_at=doc.get("created_at", ""),
        )


@dataclass
class Bookmark:
    owner: str
    audit_ref: str
    label: str
    created_at: str

    def to_doc(self) -> dict:
        return {"owner": self.owner, "audit_ref": self.audit_ref,
                "label": self.label, "created_at": self.created_at}

    @staticmethod
    def from_doc(doc: dict) -> "Bookmark":
        return Bookmark(owner=doc["owner"], audit_ref=doc["audit_ref"],
                        label=doc["label"],
                        created_at=doc.get("created_at", ""))


def _grounded_columns(groundings: dict) -> Iterable[str]:
    entries = list(groundings.get("select", []))
    entries += list(groundings.get("group", []))
    entries += [f.get("grounding", {}) for f in groundings.get("filters", [])]
    if groundings.get("time_anchor"):
        entries.append(groundings["time_anchor"])
    for entry in entries:
        target = entry.get("target") or {}
        if target.get("kind") == "column":
            yield f"{target['table']}.{target['column']}"


@dataclass
class Store:
    """Append-only record store for one data directory.

    Writes are serialized per file behind a lock; readers always see a
    consistent prefix of each file.
    """

    root: str = ""
    _locks: Dict[str, threading.Lock] = field(default_factory=dict)
    _guard: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        if not self.root:
            self.root = data_dir()
        os.makedirs(self.root, exist_ok=True)

    # -- low-level JSONL plumbing -------------------------------------------

    def _path(self, graph_id: str, kind: str) -> str:
        if kind not in _KINDS:
            raise StorageFailure(f"unknown record kind: {kind}")
        safe = "".join(c if c.isalnum() or c in "-_" else "_"
                       for c in graph_id)
        return os.path.join(self.root, f"{safe}.{kind}.jsonl")

    def _lock_for(self, path: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(path, threading.Lock())

    def _append(self, graph_id: str, kind: str, doc: dict) -> None:
        path = self._path(graph_id, kind)
        line = json.dumps(doc, sort_keys=True)
        try:
            with self._lock_for(path):
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot append to {path}: {exc}") from exc

    def _read(self, graph_id: str, kind: str) -> List[dict]:
        path = self._path(graph_id, kind)
        if not os.path.exists(path):
            return []
        docs: List[dict] = []
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        docs.append(json.loads(line))
                    except json.JSONDecodeError:
                        # torn trailing line from an interrupted write;
                        # every earlier record is intact
                        break
        except OSError as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc
        return docs

    # -- history -------------------------------------------------------------

    def append_history(self, graph_id: str, record_doc: dict) -> None:
        self._append(graph_id, "history", record_doc)

    def list_history(self, graph_id: str, principal_id: Optional[str] = None,
                     limit: Optional[int] = None, offset: int = 0
                     ) -> List[dict]:
        docs = self._read(graph_id, "history")
        if principal_id is not None:
            docs = [d for d in docs if d.get("principal") == principal_id]
        docs = docs[offset:]
        if limit is not None:
            docs = docs[:limit]
        return docs

    # -- bookmarks -----------------------------------------------------------

    def add_bookmark(self, graph_id: str, bookmark: Bookmark) -> None:
        self._append(graph_id, "bookmarks", bookmark.to_doc())

    def list_bookmarks(self, graph_id: str) -> List[Bookmark]:
        return [Bookmark.from_doc(d) for d in self._read(graph_id, "bookmarks")]

    # -- feedback ------------------------------------------------------------

    def submit_feedback(self, graph_id: str, entry: FeedbackEntry) -> None:
        if entry.sentiment not in (POSITIVE, NEGATIVE):
            raise StorageFailure(f"bad sentiment: {entry.sentiment!r}")
        entry.status = OPEN if entry.sentiment == NEGATIVE else REVIEWED
        self._append(graph_id, "feedback", entry.to_doc())

    def list_feedback(self, graph_id: str) -> List[FeedbackEntry]:
        """Latest state per entry id; later lines supersede earlier ones."""
        latest: Dict[str, FeedbackEntry] = {}
        for doc in self._read(graph_id, "feedback"):
            entry = FeedbackEntry.from_doc(doc)
            latest[entry.entry_id] = entry
        return list(latest.values())

    def get_feedback(self, graph_id: str, entry_id: str) -> FeedbackEntry:
        for entry in self.list_feedback(graph_id):
            if entry.entry_id == entry_id:
                return entry
        raise NotFound(f"no feedback entry {entry_id!r}")

    def resolve_feedback(self, graph_id: str, entry_id: str,
                         annotation_ref: dict) -> FeedbackEntry:
        entry = self.get_feedback(graph_id, entry_id)
        if entry.sentiment != NEGATIVE:
            raise NotNegative(f"feedback {entry_id!r} is not negative")
        entry.status = RESOLVED
        entry.annotation_ref = dict(annotation_ref)
        self._append(graph_id, "feedback", entry.to_doc())
        return entry

    # -- insights ------------------------------------------------------------

    def insights(self, graph_id: str) -> dict:
        history = self._read(graph_id, "history")
        feedback = self.list_feedback(graph_id)
        total = len(history)
        errors_by_stage: Dict[str, int] = {}
        latencies: List[float] = []
        column_counts: Dict[str, int] = {}
        for doc in history:
            err = doc.get("error")
            if err:
                stage = err.get("stage", "unknown") if isinstance(err, dict) \
                    else "unknown"
                errors_by_stage[stage] = errors_by_stage.get(stage, 0) + 1
            timings = doc.get("timings_ms") or {}
            if timings:
                latencies.append(sum(float(v) for v in timings.values()))
            for ref in _grounded_columns(doc.get("groundings") or {}):
                column_counts[ref] = column_counts.get(ref, 0) + 1
        error_count = sum(errors_by_stage.values())
        top_columns = sorted(column_counts.items(),
                             key=lambda kv: (-kv[1], kv[0]))[:10]
        return {
            "query_count": total,
            "error_rate": (error_count / total) if total else 0.0,
            "errors_by_stage": dict(sorted(errors_by_stage.items())),
            "median_latency_ms": (statistics.median(latencies)
                                  if latencies else 0.0),
            "top_grounded_columns": [
                {"column": c, "count": n} for c, n in top_columns],
            "feedback": {
                "positive": sum(1 for f in feedback
                                if f.sentiment == POSITIVE),
                "negative": sum(1 for f in feedback
                                if f.sentiment == NEGATIVE),
                "open": sum(1 for f in feedback if f.status == OPEN),
                "resolved": sum(1 for f in feedback if f.status == RESOLVED),
            },
        }
