"""Exception hierarchy shared across the package.

Planner errors carry a ``stage`` tag so API clients can build
ambiguity prompts from structured payloads instead of parsing prose.
"""

from __future__ import annotations

from typing import Any, Optional


class TursioError(Exception):
    """Base class for all package errors."""


# --- context graph ----------------------------------------------------------

class UnresolvedTarget(TursioError):
    """Annotation target does not exist in the graph."""


class InvalidPayload(TursioError):
    """Annotation payload violates its kind-specific invariant."""


class MalformedDocument(TursioError):
    """Graph document is not valid JSON or misses required fields."""


class UnsupportedSchemaVersion(TursioError):
    def __init__(self, version: Any):
        super().__init__(f"unsupported graph schema_version: {version!r}")
        self.version = version


# --- profiling / adapters ---------------------------------------------------

class TableNotFound(TursioError):
    pass


class AdapterFailure(TursioError):
    """Wraps an underlying data-source error."""


class ReadOnlyViolation(TursioError):
    """Adapter received a non-SELECT statement."""


class EmptyDomain(TursioError):
    """Inclusion coefficient requested for a column with no non-null values."""


class AdjudicatorFailure(TursioError):
    pass


# --- planner ----------------------------------------------------------------

class PlannerError(TursioError):
    """Base for user-facing planning failures; ``stage`` names the pipeline step."""

    stage = "plan"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_payload(self) -> dict:
        return {"stage": self.stage, "message": str(self), **self.details}


class NoTableMatch(PlannerError):
    stage = "identify_tables"


class DisconnectedModels(PlannerError):
    stage = "identify_tables"


class UngroundedPhrase(PlannerError):
    stage = "ground"

    def __init__(self, message: str, phrase: str = "",
                 alternatives: Optional[list] = None, pii_blocked: bool = False):
        super().__init__(message, phrase=phrase,
                         alternatives=alternatives or [], pii_blocked=pii_blocked)
        self.phrase = phrase
        self.alternatives = alternatives or []
        self.pii_blocked = pii_blocked


class TypeMismatch(PlannerError):
    stage = "compose_tree"


class PiiOnlyQuery(PlannerError):
    stage = "apply_rules"


class UnsupportedConstruct(PlannerError):
    stage = "emit_sql"


# --- eval harness -----------------------------------------------------------

class ParseFailure(TursioError):
    """SQL text not recognized by the subset parser."""


# --- store ------------------------------------------------------------------

class StorageFailure(TursioError):
    pass


class NotFound(TursioError):
    pass


class NotNegative(TursioError):
    """Attempted to resolve feedback that is not negative."""
