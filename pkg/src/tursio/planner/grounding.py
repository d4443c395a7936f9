"""Resolve sketch phrases to schema elements of the identified tables.

Scoring: exact alias/display-name match 1.0, stemmed token-set Jaccard,
sample-value hit 0.8.  Ties break by prioritization annotation order, then
table order from identification, then lexicographic name.  PII columns are
never candidates; a phrase whose best match would have been PII is flagged
so the pipeline can distinguish a blocked query from a vocabulary miss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..errors import UngroundedPhrase
from ..model import ColumnMeta, ColumnRef, ContextGraph, TableNode, TableRef
from .sketch import FilterTerm, QuerySketch, STRING
from .text import jaccard, stem_set, stems, words

MIN_SCORE = 0.3
SAMPLE_HIT_SCORE = 0.8
TABLE_SUBSET_SCORE = 0.9

EXACT_ALIAS = "ExactAlias"
TOKEN_OVERLAP = "TokenOverlap"
SAMPLE_VALUE_HIT = "SampleValueHit"
PRIORITIZATION_RULE = "PrioritizationRule"


@dataclass(frozen=True)
class MeasureRef:
    name: str
    expression: str
    table: str

    def __str__(self) -> str:
        return f"{self.table}.{self.name}()"


Target = Union[ColumnRef, MeasureRef, TableRef]


@dataclass
class Grounding:
    phrase: str
    target: Target
    score: float
    basis: str
    alternatives: List[Tuple[str, float]] = field(default_factory=list)
    matched_value: Optional[object] = None   # for sample-value hits

    def to_doc(self) -> dict:
        if isinstance(self.target, ColumnRef):
            target = {"kind": "column", "table": self.target.table,
                      "column": self.target.column}
        elif isinstance(self.target, MeasureRef):
            target = {"kind": "measure", "table": self.target.table,
                      "name": self.target.name,
                      "expression": self.target.expression}
        else:
            target = {"kind": "table", "table": self.target.table}
        return {"phrase": self.phrase, "target": target,
                "score": round(self.score, 4), "basis": self.basis,
                "alternatives": [[t, round(s, 4)] for t, s in self.alternatives]}


@dataclass
class GroundingSet:
    select: List[Grounding]
    group: List[Grounding]
    filters: List[Tuple[FilterTerm, Grounding]]
    time_anchor: Optional[Grounding] = None
    order: Optional[Grounding] = None

    def all(self) -> List[Grounding]:
        out = list(self.select) + list(self.group) + [g for _, g in self.filters]
        if self.time_anchor:
            out.append(self.time_anchor)
        if self.order:
            out.append(self.order)
        return out

    def to_doc(self) -> dict:
        return {
            "select": [g.to_doc() for g in self.select],
            "group": [g.to_doc() for g in self.group],
            "filters": [
                {"phrase": t.phrase, "comparator": t.comparator,
                 "literal": t.literal, "grounding": g.to_doc()}
                for t, g in self.filters
            ],
            "time_anchor": self.time_anchor.to_doc() if self.time_anchor else None,
            "order": self.order.to_doc() if self.order else None,
        }


@dataclass
class _Candidate:
    target: Target
    score: float
    basis: str
    table_rank: int
    name: str
    matched_value: Optional[object] = None


def _exact(phrase_stems: Tuple[str, ...], *names: str) -> bool:
    joined = " ".join(phrase_stems)
    return any(joined == " ".join(stems(n)) for n in names if n)


def _prioritization_rank(graph: ContextGraph, phrase: str,
                         target: Target) -> int:
    """Position of the target in a matching prioritization rule, else large."""
    if not isinstance(target, ColumnRef):
        return 1 << 20
    phrase_tokens = stem_set(phrase)
    for term, candidates in sorted(graph.prioritizations().items()):
        if not (stem_set(term) & phrase_tokens):
            continue
        for i, ref in enumerate(candidates):
            if ref == target:
                return i
        return 1 << 19  # a rule matched the term but not this column
    return 1 << 20


_KIND_ORDER = {ColumnRef: 0, MeasureRef: 1, TableRef: 2}


def selection_key(graph: ContextGraph, phrase: str, cand: "_Candidate"):
    """Total order over candidates: score first, then deterministic ties.

    The score enters only through its relative order, so scaling every
    candidate by the same positive factor never changes the winner.
    """
    return (
        -cand.score,
        _prioritization_rank(graph, phrase, cand.target),
        cand.table_rank,
        _KIND_ORDER[type(cand.target)],
        cand.name,
    )


class Grounder:
    def __init__(self, graph: ContextGraph, table_order: Sequence[str]):
        self.graph = graph
        self.table_order = list(table_order)
        self.tables = [graph.require_table(t) for t in self.table_order]
        self.measures = [
            MeasureRef(name, expr, table)
            for name, expr, table in graph.custom_measures()
            if table in self.table_order
        ]

    # -- candidate enumeration ----------------------------------------------

    def _candidates(self, phrase: str, allow_tables: bool = True,
                    literal_words: Optional[Sequence[str]] = None
                    ) -> Tuple[List[_Candidate], float]:
        """Scored candidates plus the best score a PII column would have had."""
        phrase_stems = tuple(stems(phrase, drop_stopwords=True)) or tuple(stems(phrase))
        phrase_set = set(phrase_stems)
        raw_words = [w for w in words(phrase)]
        out: List[_Candidate] = []
        pii_best = 0.0

        for rank, table in enumerate(self.tables):
            if allow_tables:
                score = self._score_table(phrase_stems, phrase_set, table)
                if score > 0:
                    out.append(_Candidate(TableRef(table.table_id), score,
                                          EXACT_ALIAS, rank, table.table_id))
            for col in table.columns:
                score, basis, matched = self._score_column(
                    phrase_stems, phrase_set, raw_words, col)
                if col.pii:
                    pii_best = max(pii_best, score)
                    continue
                if score > 0:
                    out.append(_Candidate(ColumnRef(table.table_id, col.name),
                                          score, basis, rank, col.name,
                                          matched))
        for m in self.measures:
            rank = self.table_order.index(m.table)
            if _exact(phrase_stems, m.name):
                out.append(_Candidate(m, 1.0, EXACT_ALIAS, rank, m.name))
            else:
                score = jaccard(phrase_set, stem_set(m.name))
                if score > 0:
                    out.append(_Candidate(m, score, TOKEN_OVERLAP, rank, m.name))
        return out, pii_best

    def _score_table(self, phrase_stems, phrase_set, table) -> float:
        """1.0 on a full name match, 0.9 when the phrase is part of one.

        The partial case makes "accounts" refer to the account entity even
        though the table is named MEMBER_ACCOUNT.
        """
        if _exact(phrase_stems, table.table_id, table.physical_name,
                  table.alias, table.display_name):
            return 1.0
        if not phrase_set:
            return 0.0
        for variant in (table.table_id, table.physical_name,
                        table.display_name):
            if phrase_set and phrase_set < stem_set(variant):
                return TABLE_SUBSET_SCORE
        return 0.0

    def _score_column(self, phrase_stems, phrase_set, raw_words,
                      col: ColumnMeta):
        if _exact(phrase_stems, col.name, col.display_name, *col.aliases):
            return 1.0, EXACT_ALIAS, None
        # score each name variant on its own so a short alias cannot
        # dilute the overlap with the real name
        score = max(jaccard(phrase_set, stem_set(v))
                    for v in (col.name, col.display_name, *col.aliases))
        basis = TOKEN_OVERLAP
        matched = None
        if not col.pii:
            samples = {str(v).lower(): v for v in col.sample_values}
            for word in raw_words:
                if word in samples:
                    if SAMPLE_HIT_SCORE > score:
                        score, basis, matched = (SAMPLE_HIT_SCORE,
                                                 SAMPLE_VALUE_HIT,
                                                 samples[word])
                    break
        return score, basis, matched

    # -- resolution ----------------------------------------------------------

    def resolve(self, phrase: str, allow_tables: bool = True,
                require_column: bool = False) -> Grounding:
        cands, pii_best = self._candidates(phrase, allow_tables)
        if require_column:
            cands = [c for c in cands if isinstance(c.target, (ColumnRef, MeasureRef))]
        cands.sort(key=lambda c: selection_key(self.graph, phrase, c))
        viable = [c for c in cands if c.score >= MIN_SCORE]
        if not viable or (pii_best > viable[0].score):
            alternatives = [(str(c.target), c.score) for c in cands[:3]]
            raise UngroundedPhrase(
                f"cannot ground {phrase!r}", phrase=phrase,
                alternatives=alternatives,
                pii_blocked=pii_best >= max(
                    [c.score for c in viable[:1]] + [MIN_SCORE]))
        top = viable[0]
        return Grounding(
            phrase=phrase, target=top.target, score=top.score, basis=top.basis,
            alternatives=[(str(c.target), c.score) for c in viable[1:4]],
            matched_value=top.matched_value)

    def resolve_value_filter(self, term: FilterTerm) -> Tuple[FilterTerm, Grounding]:
        """Comparator-less filter: find the column whose samples hold a word."""
        for word in words(term.phrase):
            for rank, table in enumerate(self.tables):
                for col in table.columns:
                    if col.pii:
                        continue
                    for value in col.sample_values:
                        if str(value).lower() == word:
                            grounding = Grounding(
                                phrase=term.phrase,
                                target=ColumnRef(table.table_id, col.name),
                                score=SAMPLE_HIT_SCORE,
                                basis=SAMPLE_VALUE_HIT,
                                matched_value=value)
                            resolved = FilterTerm(term.phrase, "=",
                                                  str(value), STRING)
                            return resolved, grounding
        raise UngroundedPhrase(
            f"no column value matches {term.phrase!r}", phrase=term.phrase)

    def resolve_time_anchor(self, sketch: QuerySketch,
                            question_hint: str) -> Grounding:
        """Best date/timestamp column for the sketch's time window."""
        anchor_tokens = stem_set(sketch.time_anchor or "")
        if anchor_tokens:
            # a prioritization rule on the anchor term wins outright, even
            # when its column lives on a table the keywords did not select;
            # the pipeline widens the join set afterwards
            for term, candidates in sorted(self.graph.prioritizations().items()):
                if not (stem_set(term) & anchor_tokens):
                    continue
                chosen = candidates[0]
                return Grounding(
                    phrase=sketch.time_anchor or term,
                    target=chosen, score=1.0, basis=PRIORITIZATION_RULE,
                    alternatives=[(str(c), 0.0) for c in candidates[1:4]])
        hint_tokens = stem_set(question_hint, drop_stopwords=True)
        cands: List[_Candidate] = []
        for rank, table in enumerate(self.tables):
            for col in table.columns:
                if col.pii or col.data_type not in ("date", "timestamp"):
                    continue
                col_tokens = stem_set(col.name) | stem_set(col.display_name)
                if anchor_tokens:
                    score = 1.0 if (anchor_tokens & col_tokens) else 0.0
                else:
                    score = jaccard(hint_tokens, col_tokens)
                cands.append(_Candidate(ColumnRef(table.table_id, col.name),
                                        score, TOKEN_OVERLAP, rank, col.name))
        if not cands:
            raise UngroundedPhrase("no date column available for the time filter",
                                   phrase=sketch.time_anchor or "time")
        phrase = sketch.time_anchor or "date"
        cands.sort(key=lambda c: (
            -c.score,
            _prioritization_rank(self.graph, phrase, c.target),
            c.table_rank,
            c.name,
        ))
        top = cands[0]
        basis = PRIORITIZATION_RULE if _prioritization_rank(
            self.graph, phrase, top.target) < (1 << 19) else TOKEN_OVERLAP
        return Grounding(phrase=phrase, target=top.target,
                         score=max(top.score, MIN_SCORE), basis=basis,
                         alternatives=[(str(c.target), c.score)
                                       for c in cands[1:4]])


def ground(sketch: QuerySketch, table_order: Sequence[str],
           graph: ContextGraph, question: str = "") -> GroundingSet:
    """Ground every sketch phrase; raises UngroundedPhrase on failure.

    All select phrases are evaluated before failing so the caller can tell a
    fully PII-blocked question apart from a partial vocabulary miss.
    """
    grounder = Grounder(graph, table_order)

    select: List[Grounding] = []
    failures: List[UngroundedPhrase] = []
    for phrase in sketch.select_terms:
        try:
            select.append(grounder.resolve(phrase))
        except UngroundedPhrase as exc:
            failures.append(exc)

    if failures:
        if not select and all(f.pii_blocked for f in failures):
            # every select target was PII; let the pipeline reject wholesale
            raise failures[0]
        raise failures[0]

    group = [grounder.resolve(phrase, allow_tables=False, require_column=True)
             for phrase in sketch.group_terms]

    filters: List[Tuple[FilterTerm, Grounding]] = []
    for term in sketch.filter_terms:
        if term.literal is None:
            filters.append(grounder.resolve_value_filter(term))
        else:
            grounding = grounder.resolve(term.phrase, allow_tables=False,
                                         require_column=True)
            filters.append((term, grounding))

    time_anchor = None
    if sketch.time_window is not None:
        time_anchor = grounder.resolve_time_anchor(sketch, question)

    order = None
    if sketch.order_term is not None:
        order = grounder.resolve(sketch.order_term[0], allow_tables=False,
                                 require_column=True)

    return GroundingSet(select=select, group=group, filters=filters,
                        time_anchor=time_anchor, order=order)
