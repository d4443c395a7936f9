"""Structural evaluation of planned SQL against hand-written references.

A query is compared component-wise, not textually: the planner is free to
alias, reorder, or pre-aggregate as long as it touches the same tables,
joins them on the same keys, filters on the same atoms, groups the same
way, and computes the same aggregates over the same base columns.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .errors import ParseFailure, PlannerError
from .sqlparse import parse_sql

COMPONENTS = ("tables", "joins", "columns", "filters", "group_by",
              "aggregates")


def canonicalize(sql: str) -> Dict[str, set]:
    """Structural component sets for one SELECT statement."""
    parsed = parse_sql(sql)
    return {
        "tables": set(parsed.tables),
        "joins": set(parsed.joins),
        "columns": set(parsed.columns),
        "filters": set(parsed.filters),
        "group_by": set(parsed.group_by),
        "aggregates": set(parsed.aggregates),
    }


def _f1(predicted: set, reference: set) -> float:
    if not predicted and not reference:
        # a component absent from both queries is a perfect match
        return 1.0
    if not predicted or not reference:
        return 0.0
    hits = len(predicted & reference)
    precision = hits / len(predicted)
    recall = hits / len(reference)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def score_structural(predicted_sql: str, reference_sql: str
                     ) -> Dict[str, float]:
    """Per-component F1 plus ``overall`` (unweighted mean of the six)."""
    predicted = canonicalize(predicted_sql)
    reference = canonicalize(reference_sql)
    scores = {c: _f1(predicted[c], reference[c]) for c in COMPONENTS}
    scores["overall"] = sum(scores[c] for c in COMPONENTS) / len(COMPONENTS)
    return scores


def zero_scores() -> Dict[str, float]:
    scores = {c: 0.0 for c in COMPONENTS}
    scores["overall"] = 0.0
    return scores


@dataclass
class QuestionResult:
    question: str
    tags: List[str]
    scores: Dict[str, float]
    predicted_sql: Optional[str] = None
    reference_sql: str = ""
    error: Optional[str] = None

    def to_doc(self) -> dict:
        return {
            "question": self.question,
            "tags": self.tags,
            "scores": self.scores,
            "predicted_sql": self.predicted_sql,
            "reference_sql": self.reference_sql,
            "error": self.error,
        }


@dataclass
class EvalReport:
    per_question: List[QuestionResult] = field(default_factory=list)
    means: Dict[str, float] = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "per_question": [r.to_doc() for r in self.per_question],
            "means": self.means,
        }


def bundled_corpus_path() -> str:
    """The 20-question credit-union corpus shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "data", "corpus.jsonl")


def load_corpus(path: str) -> List[dict]:
    """JSONL corpus: one {question, reference_sql, tags} object per line."""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: bad JSON: {exc}") from exc
            if "question" not in doc or "reference_sql" not in doc:
                raise ValueError(
                    f"{path}:{line_no}: needs question and reference_sql")
            entries.append(doc)
    return entries


def run_corpus(corpus: List[dict], plan_fn) -> EvalReport:
    """Score every corpus entry; ``plan_fn(question) -> sql``.

    A planner error or unparseable prediction scores zero on every
    component rather than aborting the run.
    """
    report = EvalReport()
    for entry in corpus:
        question = entry["question"]
        reference = entry["reference_sql"]
        tags = list(entry.get("tags", []))
        try:
            sql = plan_fn(question)
            scores = score_structural(sql, reference)
            result = QuestionResult(question=question, tags=tags,
                                    scores=scores, predicted_sql=sql,
                                    reference_sql=reference)
        except (PlannerError, ParseFailure) as exc:
            result = QuestionResult(question=question, tags=tags,
                                    scores=zero_scores(),
                                    reference_sql=reference,
                                    error=f"{type(exc).__name__}: {exc}")
        report.per_question.append(result)

    keys = list(COMPONENTS) + ["overall"]
    if report.per_question:
        report.means = {
            k: sum(r.scores[k] for r in report.per_question)
            / len(report.per_question)
            for k in keys
        }
    else:
        report.means = {}
    return report
