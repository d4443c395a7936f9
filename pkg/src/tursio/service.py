"""HTTP facade over the full loop: connect, build, query, annotate, feedback.

FastAPI app with bearer-token auth against a static principals file.  All
state lives in the store and in immutable graph snapshots; requests never
share mutable planner state.  Builds run in a background thread, one per
graph at a time.
"""

from __future__ import annotations

import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Dict, List, Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from pydantic import BaseModel

from . import access
from .access import Principal, PrincipalTable, authorize, shape_result
from .adapters import CsvDirectoryAdapter, DataSourceAdapter, SqliteAdapter
from .build import build_graph
from .errors import (
    AdapterFailure,
    NotFound,
    NotNegative,
    PlannerError,
    TursioError,
    UnresolvedTarget,
    InvalidPayload,
)
from .model import (
    Annotation,
    ContextGraph,
    _target_from_doc,
    apply_annotation,
    graph_to_doc,
    validate_graph,
)
from .planner.pipeline import plan_query
from .store import Bookmark, FeedbackEntry, Store

DEFAULT_ADDR = "127.0.0.1:8080"

BUILDING = "Building"
READY = "Ready"
FAILED = "Failed"


def listen_addr() -> str:
    return os.environ.get("TURSIO_ADDR", DEFAULT_ADDR)


def _make_adapter(config: dict) -> DataSourceAdapter:
    kind = config.get("type")
    path = config.get("path")
    if not path or kind not in ("csv", "sqlite"):
        raise ValueError("datasource config needs type (csv|sqlite) and path")
    if kind == "csv":
        return CsvDirectoryAdapter(path)
    return SqliteAdapter(path)


@dataclass
class GraphEntry:
    graph_id: str
    datasource_id: str
    status: str = BUILDING
    reason: str = ""
    graph: Optional[ContextGraph] = None


@dataclass
class ServiceState:
    principals: PrincipalTable
    store: Store
    clock: Optional[date] = None
    datasources: Dict[str, dict] = field(default_factory=dict)
    graphs: Dict[str, GraphEntry] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    synchronous_builds: bool = False

    def now(self) -> date:
        return self.clock or date.today()

    def adapter_for(self, graph_id: str) -> DataSourceAdapter:
        entry = self.graphs[graph_id]
        return _make_adapter(self.datasources[entry.datasource_id])


# ---------------------------------------------------------------------------
# request bodies
# ---------------------------------------------------------------------------

class DatasourceBody(BaseModel):
    id: Optional[str] = None
    type: str
    path: str


class GraphBody(BaseModel):
    datasource: str
    tables: Optional[List[str]] = None
    graph_id: Optional[str] = None


class QueryBody(BaseModel):
    question: str
    execute: bool = False
    dry_run: bool = False


class AnnotationBody(BaseModel):
    kind: str
    target: dict
    payload: dict


class FeedbackBody(BaseModel):
    graph_id: str
    audit_ref: str
    sentiment: str
    user_correction: Optional[str] = None


class ResolveBody(BaseModel):
    graph_id: str
    annotation: dict


class BookmarkBody(BaseModel):
    graph_id: str
    audit_ref: str
    label: str


# ---------------------------------------------------------------------------
# app factory
# ---------------------------------------------------------------------------

def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="tursio", version="0.1.0")
    app.state.tursio = state

    def principal(authorization: str = Header(default="")) -> Principal:
        if not authorization.startswith("Bearer "):
            raise HTTPException(401, detail="missing bearer token")
        p = state.principals.authenticate(authorization[len("Bearer "):])
        if p is None:
            raise HTTPException(401, detail="unknown token")
        return p

    def check(p: Principal, action: str, graph_id: Optional[str] = None):
        decision = authorize(p, action, graph_id)
        if not decision:
            raise HTTPException(403, detail={"reason": decision.reason,
                                             "action": action})

    def graph_entry(graph_id: str) -> GraphEntry:
        entry = state.graphs.get(graph_id)
        if entry is None:
            raise HTTPException(404, detail=f"unknown graph: {graph_id}")
        return entry

    def ready_graph(graph_id: str) -> ContextGraph:
        entry = graph_entry(graph_id)
        if entry.status != READY or entry.graph is None:
            raise HTTPException(409, detail=f"graph {graph_id} is "
                                f"{entry.status}")
        return entry.graph

    # -- datasources ---------------------------------------------------------

    @app.post("/v1/datasources")
    def register_datasource(body: DatasourceBody,
                            p: Principal = Depends(principal)):
        check(p, access.REGISTER_DATASOURCE)
        config = {"type": body.type, "path": body.path}
        try:
            _make_adapter(config)
        except (ValueError, AdapterFailure) as exc:
            raise HTTPException(422, detail=str(exc))
        ds_id = body.id or f"ds-{uuid.uuid4().hex[:8]}"
        with state.lock:
            state.datasources[ds_id] = config
        return {"id": ds_id}

    @app.get("/v1/datasources")
    def list_datasources(p: Principal = Depends(principal)):
        return {"datasources": [
            {"id": k, **v} for k, v in sorted(state.datasources.items())]}

    # -- graphs --------------------------------------------------------------

    def _run_build(entry: GraphEntry, tables: Optional[List[str]]):
        try:
            adapter = _make_adapter(state.datasources[entry.datasource_id])
            result = build_graph(adapter, graph_id=entry.graph_id,
                                 tables=tables,
                                 built_at=state.now().isoformat())
            violations = validate_graph(result.graph)
            if violations:
                entry.status = FAILED
                entry.reason = "; ".join(str(v) for v in violations)
            else:
                entry.graph = result.graph
                entry.status = READY
        except TursioError as exc:
            entry.status = FAILED
            entry.reason = str(exc)

    @app.post("/v1/graphs", status_code=202)
    def post_graph(body: GraphBody, p: Principal = Depends(principal)):
        check(p, access.REBUILD_GRAPH)
        if body.datasource not in state.datasources:
            raise HTTPException(404,
                                detail=f"unknown datasource: {body.datasource}")
        graph_id = body.graph_id or f"g-{uuid.uuid4().hex[:8]}"
        with state.lock:
            existing = state.graphs.get(graph_id)
            if existing is not None and existing.status == BUILDING:
                raise HTTPException(409, detail="build already in progress")
            entry = GraphEntry(graph_id=graph_id,
                               datasource_id=body.datasource)
            state.graphs[graph_id] = entry
        if state.synchronous_builds:
            _run_build(entry, body.tables)
        else:
            threading.Thread(target=_run_build, args=(entry, body.tables),
                             daemon=True).start()
        return {"graph_id": graph_id, "status": entry.status}

    @app.get("/v1/graphs/{graph_id}/status")
    def graph_status(graph_id: str, p: Principal = Depends(principal)):
        entry = graph_entry(graph_id)
        doc = {"graph_id": graph_id, "status": entry.status}
        if entry.status == FAILED:
            doc["reason"] = entry.reason
        return doc

    @app.get("/v1/graphs/{graph_id}")
    def get_graph(graph_id: str, p: Principal = Depends(principal)):
        check(p, access.PLAN, graph_id)
        return graph_to_doc(ready_graph(graph_id))

    @app.patch("/v1/graphs/{graph_id}/annotations")
    def patch_annotation(graph_id: str, body: AnnotationBody,
                         p: Principal = Depends(principal)):
        check(p, access.APPLY_ANNOTATION, graph_id)
        entry = graph_entry(graph_id)
        graph = ready_graph(graph_id)
        try:
            ann = Annotation(kind=body.kind,
                             target=_target_from_doc(body.target),
                             payload=body.payload, author=p.principal_id,
                             created_at=state.now().isoformat())
            new_graph = apply_annotation(graph, ann)
        except (UnresolvedTarget, InvalidPayload, TursioError) as exc:
            raise HTTPException(422, detail=str(exc))
        with state.lock:
            entry.graph = new_graph
        return {"graph_id": graph_id, "version": new_graph.version}

    # -- query ---------------------------------------------------------------

    @app.post("/v1/graphs/{graph_id}/query")
    def query(graph_id: str, body: QueryBody,
              p: Principal = Depends(principal)):
        check(p, access.PLAN, graph_id)
        if body.execute:
            check(p, access.EXECUTE, graph_id)
        graph = ready_graph(graph_id)
        try:
            result = plan_query(body.question, graph, clock=state.now())
        except PlannerError as exc:
            state.store.append_history(graph_id, {
                "question": body.question,
                "graph_id": graph_id,
                "graph_version": graph.version,
                "principal": p.principal_id,
                "clock": state.now().isoformat(),
                "error": exc.to_payload(),
            })
            raise HTTPException(400, detail=exc.to_payload())

        audit = result.audit.to_doc()
        audit["audit_id"] = uuid.uuid4().hex
        audit["principal"] = p.principal_id
        state.store.append_history(graph_id, audit)

        response = {
            "audit_id": audit["audit_id"],
            "sql": result.sql,
            "sketch": audit["sketch"],
            "tables": audit["tables"],
            "groundings": audit["groundings"],
            "rules_applied": audit["rules_applied"],
            "interpretation": result.interpretation(),
        }
        if body.dry_run or not body.execute:
            return response
        adapter = state.adapter_for(graph_id)
        try:
            columns, rows = adapter.execute(result.sql)
        except AdapterFailure as exc:
            raise HTTPException(400, detail={"stage": "execute",
                                             "message": str(exc)})
        response["result"] = shape_result(p, columns, rows,
                                          aggregated=result.tree.aggregate)
        return response

    # -- feedback, bookmarks, history, insights ------------------------------

    @app.post("/v1/feedback", status_code=201)
    def post_feedback(body: FeedbackBody, p: Principal = Depends(principal)):
        check(p, access.FEEDBACK, body.graph_id)
        graph_entry(body.graph_id)
        entry = FeedbackEntry(
            entry_id=uuid.uuid4().hex,
            audit_ref=body.audit_ref,
            sentiment=body.sentiment.lower(),
            user_correction=body.user_correction,
            created_at=state.now().isoformat(),
        )
        try:
            state.store.submit_feedback(body.graph_id, entry)
        except TursioError as exc:
            raise HTTPException(422, detail=str(exc))
        return entry.to_doc()

    @app.post("/v1/feedback/{entry_id}/resolve")
    def resolve_feedback(entry_id: str, body: ResolveBody,
                         p: Principal = Depends(principal)):
        check(p, access.APPLY_ANNOTATION, body.graph_id)
        try:
            entry = state.store.resolve_feedback(body.graph_id, entry_id,
                                                 body.annotation)
        except NotFound as exc:
            raise HTTPException(404, detail=str(exc))
        except NotNegative as exc:
            raise HTTPException(422, detail=str(exc))
        return entry.to_doc()

    @app.get("/v1/feedback")
    def list_feedback(graph_id: str, p: Principal = Depends(principal)):
        check(p, access.FEEDBACK, graph_id)
        return {"feedback": [e.to_doc()
                             for e in state.store.list_feedback(graph_id)]}

    @app.post("/v1/bookmarks", status_code=201)
    def post_bookmark(body: BookmarkBody, p: Principal = Depends(principal)):
        check(p, access.BOOKMARK, body.graph_id)
        bookmark = Bookmark(owner=p.principal_id, audit_ref=body.audit_ref,
                            label=body.label,
                            created_at=state.now().isoformat())
        state.store.add_bookmark(body.graph_id, bookmark)
        return bookmark.to_doc()

    @app.get("/v1/bookmarks")
    def list_bookmarks(graph_id: str, p: Principal = Depends(principal)):
        # bookmarks are shared with everyone granted the same data source
        check(p, access.PLAN, graph_id)
        return {"bookmarks": [b.to_doc()
                              for b in state.store.list_bookmarks(graph_id)]}

    @app.get("/v1/history")
    def history(graph_id: str, limit: int = 100, offset: int = 0,
                p: Principal = Depends(principal)):
        check(p, access.VIEW_HISTORY, graph_id)
        own_only = p.role == access.VIEWER
        docs = state.store.list_history(
            graph_id,
            principal_id=p.principal_id if own_only else None,
            limit=limit, offset=offset)
        return {"history": docs}

    @app.get("/v1/insights")
    def insights(graph_id: str, p: Principal = Depends(principal)):
        check(p, access.VIEW_INSIGHTS, graph_id)
        return state.store.insights(graph_id)

    return app


def run(state: ServiceState, addr: Optional[str] = None) -> None:
    import uvicorn

    host, _, port = (addr or listen_addr()).partition(":")
    uvicorn.run(create_app(state), host=host or "127.0.0.1",
                port=int(port or 8080), log_level="warning")
