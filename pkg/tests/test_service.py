"""API surface: auth, build lifecycle, query loop, feedback, shaping."""

import json

import pytest
from fastapi.testclient import TestClient

from tursio.access import PrincipalTable, hash_token
from tursio.service import BUILDING, GraphEntry, ServiceState, create_app
from tursio.store import Store

from conftest import CLOCK

TOKENS = {"admin": "tok-admin", "owner": "tok-owner",
          "user": "tok-user", "viewer": "tok-viewer"}


def _principals(tmp_path):
    doc = {"principals": [
        {"id": "admin", "role": "administrator",
         "token_hash": hash_token(TOKENS["admin"]), "grants": ["*"]},
        {"id": "owner", "role": "owner",
         "token_hash": hash_token(TOKENS["owner"]), "grants": ["cu"]},
        {"id": "user", "role": "user",
         "token_hash": hash_token(TOKENS["user"]), "grants": ["cu"]},
        {"id": "viewer", "role": "viewer",
         "token_hash": hash_token(TOKENS["viewer"]), "grants": ["cu"]},
    ]}
    path = tmp_path / "principals.json"
    path.write_text(json.dumps(doc))
    return PrincipalTable.load(str(path))


def _auth(who):
    return {"Authorization": f"Bearer {TOKENS[who]}"}


@pytest.fixture(scope="module")
def state(tmp_path_factory, fixture_dir):
    root = tmp_path_factory.mktemp("service-store")
    state = ServiceState(principals=_principals(root), store=Store(str(root)),
                         clock=CLOCK, synchronous_builds=True)
    return state


@pytest.fixture(scope="module")
def client(state, fixture_dir):
    client = TestClient(create_app(state))
    resp = client.post("/v1/datasources", headers=_auth("admin"),
                       json={"id": "cu-src", "type": "csv",
                             "path": fixture_dir})
    assert resp.status_code == 200
    resp = client.post("/v1/graphs", headers=_auth("owner"),
                       json={"datasource": "cu-src", "graph_id": "cu"})
    assert resp.status_code == 202
    return client


class TestAuth:
    def test_missing_token(self, client):
        assert client.get("/v1/history?graph_id=cu").status_code == 401

    def test_unknown_token(self, client):
        resp = client.get("/v1/history?graph_id=cu",
                          headers={"Authorization": "Bearer nope"})
        assert resp.status_code == 401


class TestDatasources:
    def test_bad_config_rejected(self, client):
        resp = client.post("/v1/datasources", headers=_auth("admin"),
                           json={"type": "csv", "path": "/no/such/dir"})
        assert resp.status_code == 422

    def test_user_cannot_register(self, client):
        resp = client.post("/v1/datasources", headers=_auth("user"),
                           json={"type": "csv", "path": "/tmp"})
        assert resp.status_code == 403


class TestGraphLifecycle:
    def test_status_ready(self, client):
        resp = client.get("/v1/graphs/cu/status", headers=_auth("user"))
        assert resp.json() == {"graph_id": "cu", "status": "Ready"}

    def test_graph_document(self, client):
        doc = client.get("/v1/graphs/cu", headers=_auth("user")).json()
        assert len(doc["tables"]) == 5
        assert len(doc["joins"]) == 4

    def test_unknown_graph(self, client):
        assert client.get("/v1/graphs/nope/status",
                          headers=_auth("user")).status_code == 404

    def test_concurrent_build_conflict(self, client, state):
        state.graphs["busy"] = GraphEntry(graph_id="busy",
                                          datasource_id="cu-src",
                                          status=BUILDING)
        resp = client.post("/v1/graphs", headers=_auth("owner"),
                           json={"datasource": "cu-src", "graph_id": "busy"})
        assert resp.status_code == 409
        del state.graphs["busy"]

    def test_viewer_cannot_build(self, client):
        resp = client.post("/v1/graphs", headers=_auth("viewer"),
                           json={"datasource": "cu-src", "graph_id": "cu2"})
        assert resp.status_code == 403


class TestQuery:
    def test_dry_run_never_touches_the_adapter(self, client, state,
                                               monkeypatch):
        def explode(graph_id):
            raise AssertionError("dry run must not execute")

        monkeypatch.setattr(state, "adapter_for", explode)
        resp = client.post("/v1/graphs/cu/query", headers=_auth("user"),
                           json={"question": "How many loans are there?",
                                 "execute": True, "dry_run": True})
        assert resp.status_code == 200
        body = resp.json()
        assert "result" not in body
        assert body["sql"].startswith("SELECT COUNT(*)")
        assert body["interpretation"][-1] == "SQL: " + body["sql"]

    def test_execute_returns_rows(self, client):
        resp = client.post("/v1/graphs/cu/query", headers=_auth("user"),
                           json={"question": "How many loans are there?",
                                 "execute": True})
        body = resp.json()
        assert body["result"]["rows"] == [[500]]
        assert not body["result"]["summary_only"]

    def test_viewer_gets_summary_for_listing(self, client):
        resp = client.post("/v1/graphs/cu/query", headers=_auth("viewer"),
                           json={"question": "list members in Tacoma",
                                 "execute": True})
        body = resp.json()
        assert body["result"]["summary_only"]
        assert body["result"]["rows"] == []
        assert body["result"]["row_count"] > 0

    def test_viewer_gets_aggregated_rows(self, client):
        resp = client.post("/v1/graphs/cu/query", headers=_auth("viewer"),
                           json={"question": "How many members are there?",
                                 "execute": True})
        body = resp.json()
        assert body["result"]["rows"] == [[1200]]

    def test_planner_error_payload(self, client):
        resp = client.post("/v1/graphs/cu/query", headers=_auth("user"),
                           json={"question": "list member ssn"})
        assert resp.status_code == 400
        detail = resp.json()["detail"]
        assert detail["stage"] == "ground"
        assert detail["pii_blocked"]

    def test_every_call_lands_in_history(self, client, state):
        before = len(state.store.list_history("cu"))
        client.post("/v1/graphs/cu/query", headers=_auth("user"),
                    json={"question": "list all members"})
        client.post("/v1/graphs/cu/query", headers=_auth("user"),
                    json={"question": "list member ssn"})
        docs = state.store.list_history("cu")
        assert len(docs) == before + 2
        assert "error" in docs[-1]
        assert docs[-2]["sql"].startswith("SELECT ")


class TestAnnotations:
    def test_patch_bumps_version(self, client):
        resp = client.patch("/v1/graphs/cu/annotations", headers=_auth("owner"),
                            json={"kind": "synonym",
                                  "target": {"kind": "column",
                                             "table": "MEMBER_ACCOUNT",
                                             "column": "balance"},
                                  "payload": {"term": "holdings"}})
        assert resp.status_code == 200
        version = resp.json()["version"]
        assert version >= 2
        doc = client.get("/v1/graphs/cu", headers=_auth("user")).json()
        assert doc["version"] == version

    def test_bad_target_rejected(self, client):
        resp = client.patch("/v1/graphs/cu/annotations", headers=_auth("owner"),
                            json={"kind": "synonym",
                                  "target": {"kind": "column",
                                             "table": "MEMBER", "column": "x"},
                                  "payload": {"term": "y"}})
        assert resp.status_code == 422

    def test_user_cannot_annotate(self, client):
        resp = client.patch("/v1/graphs/cu/annotations", headers=_auth("user"),
                            json={"kind": "synonym",
                                  "target": {"kind": "table",
                                             "table": "MEMBER"},
                                  "payload": {"term": "clients"}})
        assert resp.status_code == 403


class TestFeedbackAndBookmarks:
    def test_feedback_loop(self, client):
        resp = client.post("/v1/feedback", headers=_auth("viewer"),
                           json={"graph_id": "cu", "audit_ref": "a1",
                                 "sentiment": "negative",
                                 "user_correction": "wrong date column"})
        assert resp.status_code == 201
        entry_id = resp.json()["entry_id"]
        assert resp.json()["status"] == "open"

        resp = client.post(f"/v1/feedback/{entry_id}/resolve",
                           headers=_auth("user"),
                           json={"graph_id": "cu", "annotation": {}})
        assert resp.status_code == 403

        resp = client.post(f"/v1/feedback/{entry_id}/resolve",
                           headers=_auth("owner"),
                           json={"graph_id": "cu",
                                 "annotation": {"kind": "prioritization"}})
        assert resp.status_code == 200
        assert resp.json()["status"] == "resolved"

        listed = client.get("/v1/feedback?graph_id=cu",
                            headers=_auth("owner")).json()["feedback"]
        assert any(e["entry_id"] == entry_id and e["status"] == "resolved"
                   for e in listed)

    def test_resolve_missing(self, client):
        resp = client.post("/v1/feedback/nope/resolve", headers=_auth("owner"),
                           json={"graph_id": "cu", "annotation": {}})
        assert resp.status_code == 404

    def test_resolve_positive_rejected(self, client):
        entry_id = client.post("/v1/feedback", headers=_auth("user"),
                               json={"graph_id": "cu", "audit_ref": "a2",
                                     "sentiment": "positive"}
                               ).json()["entry_id"]
        resp = client.post(f"/v1/feedback/{entry_id}/resolve",
                           headers=_auth("owner"),
                           json={"graph_id": "cu", "annotation": {}})
        assert resp.status_code == 422

    def test_bookmarks(self, client):
        resp = client.post("/v1/bookmarks", headers=_auth("viewer"),
                           json={"graph_id": "cu", "audit_ref": "a1",
                                 "label": "closed accounts"})
        assert resp.status_code == 201
        marks = client.get("/v1/bookmarks?graph_id=cu",
                           headers=_auth("user")).json()["bookmarks"]
        assert any(m["label"] == "closed accounts" and m["owner"] == "viewer"
                   for m in marks)


class TestHistoryAndInsights:
    def test_viewer_sees_only_own_history(self, client):
        client.post("/v1/graphs/cu/query", headers=_auth("viewer"),
                    json={"question": "list all members"})
        client.post("/v1/graphs/cu/query", headers=_auth("user"),
                    json={"question": "list all members"})
        own = client.get("/v1/history?graph_id=cu",
                         headers=_auth("viewer")).json()["history"]
        assert own and all(d["principal"] == "viewer" for d in own)
        everyone = client.get("/v1/history?graph_id=cu",
                              headers=_auth("user")).json()["history"]
        assert {d["principal"] for d in everyone} >= {"viewer", "user"}

    def test_insights(self, client):
        stats = client.get("/v1/insights?graph_id=cu",
                           headers=_auth("user")).json()
        assert stats["query_count"] > 0
        assert "ground" in stats["errors_by_stage"]
        assert stats["feedback"]["positive"] >= 1

    def test_viewer_cannot_view_insights(self, client):
        resp = client.get("/v1/insights?graph_id=cu", headers=_auth("viewer"))
        assert resp.status_code == 403
