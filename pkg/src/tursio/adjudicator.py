"""Pluggable decision service for every assisted step in the pipeline.

The deterministic implementation is a pure rule set, so the whole system
runs offline and reproducibly.  An external HTTP provider can be layered on
top; any timeout or malformed reply falls back to the deterministic result,
and both verdicts land in the transcript so the fallback is auditable.

Provider configuration comes from TURSIO_PROVIDER_URL / TURSIO_PROVIDER_TOKEN;
when the URL is absent the system is in deterministic mode.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

PROVIDER_URL_VAR = "TURSIO_PROVIDER_URL"
PROVIDER_TOKEN_VAR = "TURSIO_PROVIDER_TOKEN"

ACCEPT_MIN_INCLUSION = 0.95
ACCEPT_MIN_NAME_SIM = 0.4

INCLUSION_BELOW_BAR = "InclusionBelowBar"
NAME_EVIDENCE_MISSING = "NameEvidenceMissing"


@dataclass(frozen=True)
class Verdict:
    accept: bool
    reason: Optional[str] = None


class Adjudicator:
    """Interface; every call appends to ``transcript``."""

    def __init__(self):
        self.transcript: List[dict] = []

    def adjudicate_join(self, candidate, context: Optional[dict] = None) -> Verdict:
        raise NotImplementedError

    def refine_text(self, kind: str, text: str, context: Optional[dict] = None) -> str:
        raise NotImplementedError

    def parse_intent(self, question: str, graph_summary: str) -> Optional[dict]:
        """A sketch document, or None when the caller's grammar should decide."""
        raise NotImplementedError

    def rewrite_sql(self, sql: str, question: str, graph_summary: str) -> str:
        raise NotImplementedError

    def _record(self, task: str, payload: dict, result: Any, **extra) -> None:
        self.transcript.append({"task": task, "payload": payload,
                                "result": result, **extra})


class DeterministicAdjudicator(Adjudicator):
    """Stateless rules; pure given inputs, so two runs are identical."""

    def adjudicate_join(self, candidate, context: Optional[dict] = None) -> Verdict:
        payload = {"candidate": list(candidate.key()),
                   "inclusion": candidate.inclusion_coeff,
                   "name_similarity": candidate.name_similarity}
        if candidate.inclusion_coeff < ACCEPT_MIN_INCLUSION:
            verdict = Verdict(False, INCLUSION_BELOW_BAR)
        elif candidate.name_similarity < ACCEPT_MIN_NAME_SIM and \
                not candidate.fk_column.lower().endswith(("_id", "_key")):
            verdict = Verdict(False, NAME_EVIDENCE_MISSING)
        else:
            verdict = Verdict(True)
        self._record("adjudicate_join", payload,
                     {"accept": verdict.accept, "reason": verdict.reason})
        return verdict

    def refine_text(self, kind: str, text: str, context: Optional[dict] = None) -> str:
        self._record("refine_text", {"kind": kind, "text": text}, text)
        return text

    def parse_intent(self, question: str, graph_summary: str) -> Optional[dict]:
        self._record("parse_intent", {"question": question}, None)
        return None

    def rewrite_sql(self, sql: str, question: str, graph_summary: str) -> str:
        self._record("rewrite_sql", {"question": question}, sql)
        return sql


FALLBACK_USED = "FallbackUsed"


class ExternalProviderAdjudicator(Adjudicator):
    """Chat-completion-style HTTP provider with deterministic fallback.

    Wire contract: POST {task, payload, context}, bearer auth; reply must be
    strict JSON with the task-specific result field.  Free-text replies are
    treated as malformed.
    """

    def __init__(self, url: str, token: str = "", timeout: float = 10.0,
                 fallback: Optional[Adjudicator] = None, client=None):
        super().__init__()
        self.url = url
        self.token = token
        self.timeout = timeout
        self.fallback = fallback or DeterministicAdjudicator()
        self._client = client  # injectable for tests

    def _call(self, task: str, payload: dict, context: dict) -> Optional[dict]:
        import httpx

        body = {"task": task, "payload": payload, "context": context}
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            client = self._client or httpx
            resp = client.post(self.url, json=body, headers=headers,
                               timeout=self.timeout)
            if resp.status_code != 200:
                return None
            doc = resp.json()
            return doc if isinstance(doc, dict) else None
        except Exception:
            return None

    def adjudicate_join(self, candidate, context: Optional[dict] = None) -> Verdict:
        payload = {"candidate": list(candidate.key()),
                   "inclusion": candidate.inclusion_coeff,
                   "name_similarity": candidate.name_similarity}
        local = self.fallback.adjudicate_join(candidate, context)
        reply = self._call("adjudicate_join", payload, context or {})
        if reply is None or reply.get("verdict") not in ("accept", "reject"):
            self._record("adjudicate_join", payload,
                         {"accept": local.accept, "reason": local.reason},
                         fallback=FALLBACK_USED)
            return local
        verdict = Verdict(reply["verdict"] == "accept", reply.get("reason"))
        self._record("adjudicate_join", payload,
                     {"accept": verdict.accept, "reason": verdict.reason},
                     deterministic={"accept": local.accept, "reason": local.reason})
        return verdict

    def refine_text(self, kind: str, text: str, context: Optional[dict] = None) -> str:
        reply = self._call("refine_text", {"kind": kind, "text": text}, context or {})
        if reply is None or not isinstance(reply.get("text"), str):
            result = self.fallback.refine_text(kind, text, context)
            self._record("refine_text", {"kind": kind}, result, fallback=FALLBACK_USED)
            return result
        self._record("refine_text", {"kind": kind}, reply["text"])
        return reply["text"]

    def parse_intent(self, question: str, graph_summary: str) -> Optional[dict]:
        reply = self._call("parse_intent", {"question": question},
                           {"graph_summary": graph_summary})
        if reply is None or not isinstance(reply.get("sketch"), dict):
            self._record("parse_intent", {"question": question}, None,
                         fallback=FALLBACK_USED)
            return None
        self._record("parse_intent", {"question": question}, reply["sketch"])
        return reply["sketch"]

    def rewrite_sql(self, sql: str, question: str, graph_summary: str) -> str:
        reply = self._call("rewrite_sql", {"sql": sql, "question": question},
                           {"graph_summary": graph_summary})
        if reply is None or not isinstance(reply.get("sql"), str):
            self._record("rewrite_sql", {"question": question}, sql,
                         fallback=FALLBACK_USED)
            return sql
        self._record("rewrite_sql", {"question": question}, reply["sql"])
        return reply["sql"]


def from_environment() -> Adjudicator:
    url = os.environ.get(PROVIDER_URL_VAR, "")
    if not url:
        return DeterministicAdjudicator()
    return ExternalProviderAdjudicator(url, os.environ.get(PROVIDER_TOKEN_VAR, ""))
