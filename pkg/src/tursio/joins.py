"""Primary-key detection and join inference via inclusion dependencies.

Candidates pair every non-key column against every other table's primary
key of a compatible type, scored as a weighted mix of value inclusion and
name similarity.  Heuristic pruning drops weak candidates; survivors get a
full-scan containment re-check through the adapter, then go to the
adjudicator for the final accept/reject.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .adapters import DataSourceAdapter
from .errors import AdjudicatorFailure, EmptyDomain
from .model import JoinEdge, MANY_TO_ONE, ONE_TO_ONE, INFERRED
from .profiling import ColumnStats, StatsMap


@dataclass(frozen=True)
class InferenceConfig:
    weight_inclusion: float = 0.7
    weight_name: float = 0.3
    min_score: float = 0.7
    min_inclusion: float = 0.9
    # candidates with no name evidence at all never survive to adjudication
    min_name_similarity: float = 0.1


@dataclass
class JoinCandidate:
    fk_table: str
    fk_column: str
    pk_table: str
    pk_column: str
    inclusion_coeff: float
    name_similarity: float
    type_compatible: bool = True
    score: float = 0.0
    pruned_reason: Optional[str] = None

    def key(self) -> tuple:
        return (self.fk_table, self.fk_column, self.pk_table, self.pk_column)


# ---------------------------------------------------------------------------
# primary keys
# ---------------------------------------------------------------------------

def _has_key_name(column: str, table: str) -> bool:
    c = column.lower()
    return c == "id" or c == f"{table.lower()}_id" or c.endswith("_key")


def detect_primary_keys(stats: Sequence[ColumnStats], table: str) -> List[str]:
    """Unique non-null single columns, best-ranked first."""
    qualifying = []
    for position, cs in enumerate(stats):
        if cs.table != table:
            continue
        if cs.sampled_rows == 0:
            continue
        if cs.null_fraction == 0.0 and cs.distinct_count == cs.sampled_rows:
            qualifying.append((not _has_key_name(cs.column, table), position, cs.column))
    qualifying.sort()
    return [name for _, _, name in qualifying]


# ---------------------------------------------------------------------------
# scoring components
# ---------------------------------------------------------------------------

def inclusion_coefficient(fk_values, pk_values) -> float:
    """Fraction of distinct non-null fk values contained in the pk domain."""
    fk = {v for v in fk_values if v is not None}
    if not fk:
        raise EmptyDomain("fk side has no non-null values")
    pk = {v for v in pk_values if v is not None}
    return len(fk & pk) / len(fk)


_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def name_tokens(name: str) -> List[str]:
    spaced = _CAMEL_RE.sub("_", name)
    return [t for t in re.split(r"[_\W]+", spaced.lower()) if t]


def token_jaccard(a: str, b: str) -> float:
    ta, tb = set(name_tokens(a)), set(name_tokens(b))
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def name_similarity(fk_column: str, pk_column: str, pk_table: str = "") -> float:
    if fk_column.lower() == pk_column.lower():
        return 1.0
    pt = pk_table.lower()
    if pt and fk_column.lower() in (f"{pt}_{pk_column.lower()}", f"{pt}_id"):
        return 0.9
    return token_jaccard(fk_column, pk_column)


# ---------------------------------------------------------------------------
# candidate generation and pruning
# ---------------------------------------------------------------------------

def generate_candidates(table_pks: Dict[str, str], stats: StatsMap,
                        adapter: Optional[DataSourceAdapter] = None,
                        config: InferenceConfig = InferenceConfig()) -> List[JoinCandidate]:
    """One candidate per type-compatible (non-key column, primary key) pair.

    The fk side uses the profiled value sample; the pk domain comes from the
    adapter when available (sample-vs-sample inclusion is too noisy for
    domains larger than the sample cap).
    """
    pk_domains: Dict[Tuple[str, str], set] = {}

    def pk_domain(table: str, column: str) -> set:
        key = (table, column)
        if key not in pk_domains:
            if adapter is not None:
                pk_domains[key] = set(adapter.distinct_values(table, column))
            else:
                pk_domains[key] = {v for v in stats[key].value_sample if v is not None}
        return pk_domains[key]

    candidates = []
    for (fk_table, fk_column), fk_stats in sorted(stats.items()):
        if fk_column == table_pks.get(fk_table):
            continue
        fk_values = {v for v in fk_stats.value_sample if v is not None}
        for pk_table, pk_column in sorted(table_pks.items()):
            if pk_column is None or pk_table == fk_table:
                continue
            pk_stats = stats[(pk_table, pk_column)]
            if pk_stats.inferred_type != fk_stats.inferred_type:
                continue
            if not fk_values:
                continue
            domain = {_normalize(v) for v in pk_domain(pk_table, pk_column)}
            fk_norm = {_normalize(v) for v in fk_values}
            incl = len(fk_norm & domain) / len(fk_norm)
            sim = name_similarity(fk_column, pk_column, pk_table)
            score = config.weight_inclusion * incl + config.weight_name * sim
            candidates.append(JoinCandidate(
                fk_table=fk_table, fk_column=fk_column,
                pk_table=pk_table, pk_column=pk_column,
                inclusion_coeff=incl, name_similarity=sim, score=score))
    return candidates


def _normalize(value):
    """Raw adapter values and parsed sample values must compare equal."""
    if value is None:
        return None
    s = str(value)
    if re.fullmatch(r"[+-]?\d+", s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


LOW_SCORE = "LowScore"
LOW_INCLUSION = "LowInclusion"
LOW_CARDINALITY_PK = "LowCardinalityPk"
LOW_NAME_SIM = "LowNameSim"
PK_AS_FK = "PkAsFk"


def prune_candidates(candidates: Sequence[JoinCandidate], stats: StatsMap,
                     table_pks: Optional[Dict[str, str]] = None,
                     config: InferenceConfig = InferenceConfig()) -> List[JoinCandidate]:
    table_pks = table_pks or {}
    matched_best: Dict[str, float] = {}
    for cand in sorted(candidates, key=lambda c: (-c.score,) + c.key()):
        key_table = cand.pk_table
        matched_best[key_table] = max(matched_best.get(key_table, 0.0), cand.score)

    out = []
    for cand in candidates:
        reason = None
        pk_stats = stats.get((cand.pk_table, cand.pk_column))
        fk_is_pk = table_pks.get(cand.fk_table) == cand.fk_column
        if cand.score < config.min_score:
            reason = LOW_SCORE
        elif cand.inclusion_coeff < config.min_inclusion:
            reason = LOW_INCLUSION
        elif pk_stats is not None and pk_stats.distinct_count < 2:
            reason = LOW_CARDINALITY_PK
        elif cand.name_similarity < config.min_name_similarity and \
                not cand.fk_column.lower().endswith(("_id", "_key")):
            reason = LOW_NAME_SIM
        elif fk_is_pk and matched_best.get(cand.fk_table, 0.0) > cand.score:
            reason = PK_AS_FK
        out.append(replace_reason(cand, reason))
    return out


def replace_reason(cand: JoinCandidate, reason: Optional[str]) -> JoinCandidate:
    cand = JoinCandidate(**{**cand.__dict__})
    cand.pruned_reason = reason
    return cand


# ---------------------------------------------------------------------------
# final inference
# ---------------------------------------------------------------------------

def infer_joins(table_pks: Dict[str, str], stats: StatsMap, adjudicator,
                adapter: Optional[DataSourceAdapter] = None,
                config: InferenceConfig = InferenceConfig()) -> Tuple[List[JoinEdge], List[JoinCandidate]]:
    """Full pipeline: candidates -> prune -> full-scan re-check -> adjudicate.

    Returns (edges, all candidates with pruned reasons) so callers can audit
    what was rejected and why.
    """
    candidates = generate_candidates(table_pks, stats, adapter, config)
    candidates = prune_candidates(candidates, stats, table_pks, config)

    # one edge per (fk table, fk column): highest score wins, canonical tie-break
    survivors = [c for c in candidates if c.pruned_reason is None]
    survivors.sort(key=lambda c: (-c.score,) + c.key())
    chosen: Dict[Tuple[str, str], JoinCandidate] = {}
    for cand in survivors:
        chosen.setdefault((cand.fk_table, cand.fk_column), cand)

    edges = []
    for cand in sorted(chosen.values(), key=lambda c: c.key()):
        incl = cand.inclusion_coeff
        if adapter is not None:
            contained, total = adapter.containment_count(
                cand.fk_table, cand.fk_column, cand.pk_table, cand.pk_column)
            incl = contained / total if total else 0.0
            cand = replace_reason(cand, None)
            cand.inclusion_coeff = incl
            if incl < config.min_inclusion:
                cand.pruned_reason = LOW_INCLUSION
                continue
        try:
            verdict = adjudicator.adjudicate_join(cand, context={"stage": "infer_joins"})
        except Exception as exc:
            raise AdjudicatorFailure(f"{cand.key()}: {exc}") from exc
        if not verdict.accept:
            cand.pruned_reason = verdict.reason
            continue
        fk_stats = stats[(cand.fk_table, cand.fk_column)]
        cardinality = MANY_TO_ONE
        if fk_stats.distinct_count == fk_stats.sampled_rows:
            cardinality = ONE_TO_ONE
        edge = JoinEdge(
            left_table=cand.fk_table, left_columns=(cand.fk_column,),
            right_table=cand.pk_table, right_columns=(cand.pk_column,),
            confidence=round(cand.score, 6), cardinality=cardinality,
            origin=INFERRED).canonical()
        edges.append(edge)
    edges.sort(key=lambda e: (e.left_table, e.right_table, e.left_columns))
    return edges, candidates


def score_against_manifest(edges: Sequence[JoinEdge], manifest: dict) -> dict:
    """Precision/recall of inferred edges vs the fixture's seeded FK list."""
    truth = set()
    for fk in manifest.get("foreign_keys", []):
        edge = JoinEdge(fk["fk_table"], (fk["fk_column"],),
                        fk["pk_table"], (fk["pk_column"],)).canonical()
        truth.add((edge.left_table, edge.left_columns, edge.right_table, edge.right_columns))
    predicted = {(e.left_table, e.left_columns, e.right_table, e.right_columns)
                 for e in edges}
    hits = len(truth & predicted)
    return {
        "true_positives": hits,
        "precision": hits / len(predicted) if predicted else 1.0,
        "recall": hits / len(truth) if truth else 1.0,
        "spurious": sorted(predicted - truth),
        "missed": sorted(truth - predicted),
    }
