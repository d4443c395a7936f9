"""Role-based permissions and viewer result shaping.

Four roles.  Administrators and owners can do everything, including graph
mutation.  Users get the full query loop with raw results.  Viewers can
plan and execute but only ever see summaries of non-aggregated results;
the shaping happens at one choke point (shape_result) so no other code
path can hand raw rows to a viewer.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

ADMINISTRATOR = "administrator"
OWNER = "owner"
USER = "user"
VIEWER = "viewer"

ROLES = (ADMINISTRATOR, OWNER, USER, VIEWER)

# actions
PLAN = "plan"
EXECUTE = "execute"
VIEW_FULL_RESULTS = "view_full_results"
BOOKMARK = "bookmark"
FEEDBACK = "feedback"
VIEW_HISTORY = "view_history"
VIEW_INSIGHTS = "view_insights"
APPLY_ANNOTATION = "apply_annotation"
REBUILD_GRAPH = "rebuild_graph"
REGISTER_DATASOURCE = "register_datasource"
MANAGE_PRINCIPALS = "manage_principals"

ACTIONS = (PLAN, EXECUTE, VIEW_FULL_RESULTS, BOOKMARK, FEEDBACK,
           VIEW_HISTORY, VIEW_INSIGHTS, APPLY_ANNOTATION, REBUILD_GRAPH,
           REGISTER_DATASOURCE, MANAGE_PRINCIPALS)

_USER_ACTIONS = {PLAN, EXECUTE, VIEW_FULL_RESULTS, BOOKMARK, FEEDBACK,
                 VIEW_HISTORY, VIEW_INSIGHTS}
_VIEWER_ACTIONS = {PLAN, EXECUTE, BOOKMARK, FEEDBACK, VIEW_HISTORY}

ROLE_FORBIDDEN = "RoleForbidden"
SUMMARY_ONLY = "SummaryOnly"
NO_GRANT = "NoGrant"


@dataclass(frozen=True)
class Principal:
    principal_id: str
    role: str
    grants: frozenset = frozenset()      # graph ids; empty means none

    def has_grant(self, graph_id: str) -> bool:
        return graph_id in self.grants or "*" in self.grants


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = Decision(True)


def authorize(principal: Principal, action: str,
              graph_id: Optional[str] = None) -> Decision:
    """Pure capability check; Deny carries a machine-readable reason."""
    if action not in ACTIONS:
        return Decision(False, ROLE_FORBIDDEN)
    if graph_id is not None and principal.role != ADMINISTRATOR \
            and not principal.has_grant(graph_id):
        return Decision(False, NO_GRANT)
    if principal.role in (ADMINISTRATOR, OWNER):
        return ALLOW
    if principal.role == USER:
        return ALLOW if action in _USER_ACTIONS \
            else Decision(False, ROLE_FORBIDDEN)
    if principal.role == VIEWER:
        if action == VIEW_FULL_RESULTS:
            return Decision(False, SUMMARY_ONLY)
        return ALLOW if action in _VIEWER_ACTIONS \
            else Decision(False, ROLE_FORBIDDEN)
    return Decision(False, ROLE_FORBIDDEN)


# ---------------------------------------------------------------------------
# viewer result shaping
# ---------------------------------------------------------------------------

def _is_numeric(values: Sequence) -> bool:
    seen = False
    for v in values:
        if v is None or v == "":
            continue
        try:
            float(v)
        except (TypeError, ValueError):
            return False
        seen = True
    return seen


def _summarize_column(name: str, values: Sequence) -> dict:
    present = [v for v in values if v is not None and v != ""]
    summary = {"column": name, "non_null": len(present)}
    if _is_numeric(present):
        nums = [float(v) for v in present]
        summary["min"] = min(nums)
        summary["max"] = max(nums)
        summary["sum"] = sum(nums)
    else:
        summary["distinct"] = len(set(map(str, present)))
    return summary


def shape_result(principal: Principal, columns: List[str],
                 rows: List[tuple], aggregated: bool) -> dict:
    """The single choke point between adapter results and API responses.

    Everyone but viewers gets raw rows.  For viewers, aggregated results
    pass through (they are already summaries); anything else collapses to
    a row count plus per-column aggregates with zero raw rows.
    """
    if principal.role != VIEWER or aggregated:
        return {"columns": columns, "rows": [list(r) for r in rows],
                "summary_only": False}
    per_column = [
        _summarize_column(name, [row[i] for row in rows])
        for i, name in enumerate(columns)
    ]
    return {"row_count": len(rows), "columns": per_column,
            "rows": [], "summary_only": True}


# ---------------------------------------------------------------------------
# principals file
# ---------------------------------------------------------------------------

def hash_token(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


@dataclass
class PrincipalTable:
    """Static principals loaded from a JSON file, keyed by token hash."""

    by_token: Dict[str, Principal] = field(default_factory=dict)

    @staticmethod
    def load(path: str) -> "PrincipalTable":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        table = PrincipalTable()
        for entry in doc.get("principals", []):
            role = entry["role"].lower()
            if role not in ROLES:
                raise ValueError(f"unknown role: {entry['role']!r}")
            principal = Principal(
                principal_id=entry["id"], role=role,
                grants=frozenset(entry.get("grants", [])))
            table.by_token[entry["token_hash"]] = principal
        return table

    def authenticate(self, token: str) -> Optional[Principal]:
        return self.by_token.get(hash_token(token))
