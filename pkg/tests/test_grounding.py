"""Phrase grounding: scoring bases, PII blocking, deterministic tie-breaks."""

import random

import pytest

from tursio.errors import UngroundedPhrase
from tursio.model import (
    Annotation,
    ColumnRef,
    PRIORITIZATION,
    TableRef,
    apply_annotation,
)
from tursio.planner.grounding import (
    EXACT_ALIAS,
    PRIORITIZATION_RULE,
    SAMPLE_VALUE_HIT,
    TOKEN_OVERLAP,
    Grounder,
    MeasureRef,
    _Candidate,
    ground,
    selection_key,
)
from tursio.planner.sketch import FilterTerm, parse_question


@pytest.fixture(scope="module")
def grounder(graph):
    return Grounder(graph, ["MEMBER_ACCOUNT", "MEMBER", "LOAN"])


class TestResolve:
    def test_exact_column(self, grounder):
        g = grounder.resolve("balance")
        assert g.target == ColumnRef("MEMBER_ACCOUNT", "balance")
        assert g.score == 1.0 and g.basis == EXACT_ALIAS

    def test_exact_beats_inflection(self, grounder):
        g = grounder.resolve("delinquent days")
        assert g.target == ColumnRef("LOAN", "delinquent_days")
        assert g.score == 1.0

    def test_token_overlap(self, grounder):
        g = grounder.resolve("delinquent")
        assert g.target == ColumnRef("LOAN", "delinquent_days")
        assert g.basis == TOKEN_OVERLAP and 0 < g.score < 1.0

    def test_sample_value_hit(self, grounder):
        g = grounder.resolve("tacoma")
        assert g.target == ColumnRef("MEMBER", "city")
        assert g.basis == SAMPLE_VALUE_HIT
        assert g.score == 0.8
        assert str(g.matched_value).lower() == "tacoma"

    def test_table_subset_score(self, grounder):
        g = grounder.resolve("accounts")
        assert g.target == TableRef("MEMBER_ACCOUNT")
        assert g.score == 0.9

    def test_full_table_name(self, grounder):
        g = grounder.resolve("member account")
        assert g.target == TableRef("MEMBER_ACCOUNT")
        assert g.score == 1.0

    def test_pii_blocked(self, grounder):
        with pytest.raises(UngroundedPhrase) as err:
            grounder.resolve("member ssn")
        assert err.value.pii_blocked

    def test_gibberish_not_pii(self, grounder):
        with pytest.raises(UngroundedPhrase) as err:
            grounder.resolve("florble")
        assert not err.value.pii_blocked

    def test_require_column_skips_tables(self, grounder):
        # the table itself is no longer a candidate, so the nearest column wins
        g = grounder.resolve("accounts", require_column=True)
        assert g.target == ColumnRef("MEMBER_ACCOUNT", "account_id")

    def test_alternatives_reported(self, grounder):
        g = grounder.resolve("open date")
        assert g.alternatives
        assert all(isinstance(s, float) for _, s in g.alternatives)


class TestValueFilter:
    def test_sample_resolves_literal(self, grounder):
        term = FilterTerm("gold status", "=", None, "string")
        resolved, g = grounder.resolve_value_filter(term)
        assert g.target == ColumnRef("MEMBER_ACCOUNT", "status")
        assert resolved.comparator == "="
        assert str(resolved.literal).lower() == "gold"

    def test_unknown_value(self, grounder):
        term = FilterTerm("plaid status", "=", None, "string")
        with pytest.raises(UngroundedPhrase):
            grounder.resolve_value_filter(term)


class TestTimeAnchor:
    def test_default_anchor_prefers_selected_table(self, graph):
        sketch = parse_question("List accounts which got closed last year")
        grounder = Grounder(graph, ["MEMBER_ACCOUNT"])
        g = grounder.resolve_time_anchor(sketch, "accounts closed")
        assert g.target == ColumnRef("MEMBER_ACCOUNT", "close_date")

    def test_prioritization_overrides_default(self, graph):
        ann = Annotation(PRIORITIZATION, ColumnRef("LOAN", "close_date"), {
            "term": "close",
            "candidates": [
                {"table": "LOAN", "column": "close_date"},
                {"table": "MEMBER_ACCOUNT", "column": "close_date"},
                {"table": "CARD", "column": "close_date"},
            ]})
        annotated = apply_annotation(graph, ann)
        sketch = parse_question("List accounts which got closed last year")
        grounder = Grounder(annotated, ["MEMBER_ACCOUNT"])
        g = grounder.resolve_time_anchor(sketch, "accounts closed")
        assert g.target == ColumnRef("LOAN", "close_date")
        assert g.basis == PRIORITIZATION_RULE


class TestGroundSet:
    def test_full_sketch(self, graph):
        sketch = parse_question("Total transaction amount by member city")
        gs = ground(sketch, ["TRANSACTION", "MEMBER_ACCOUNT", "MEMBER"],
                    graph, question="total transaction amount by member city")
        assert gs.select[0].target == ColumnRef("TRANSACTION", "txn_amount")
        assert gs.group[0].target == ColumnRef("MEMBER", "city")
        assert gs.filters == []

    def test_doc_shape(self, graph):
        sketch = parse_question("Accounts with balance over 100")
        gs = ground(sketch, ["MEMBER_ACCOUNT"], graph)
        doc = gs.to_doc()
        assert doc["select"][0]["target"] == {"kind": "table",
                                              "table": "MEMBER_ACCOUNT"}
        assert doc["filters"][0]["comparator"] == ">"
        assert doc["filters"][0]["grounding"]["target"]["column"] == "balance"


class TestSelectionKeyInvariance:
    """Scaling all candidate scores by one positive factor never changes
    the argmax under selection_key."""

    def _random_candidates(self, rng, graph):
        tables = [t.table_id for t in graph.tables]
        cands = []
        for _ in range(rng.randint(2, 8)):
            table = rng.choice(tables)
            kind = rng.randrange(3)
            if kind == 0:
                node = graph.table(table)
                col = rng.choice(node.columns)
                target, name = ColumnRef(table, col.name), col.name
            elif kind == 1:
                target, name = MeasureRef("m", "sum(balance)", table), "m"
            else:
                target, name = TableRef(table), table
            score = rng.randrange(1, 1000) / 1000.0
            cands.append(_Candidate(target, score, TOKEN_OVERLAP,
                                    rng.randrange(5), name))
        return cands

    def test_argmax_stable_under_scaling(self, graph):
        rng = random.Random(20260824)
        phrases = ["close", "balance", "amount", "city", "status"]
        for _ in range(1000):
            phrase = rng.choice(phrases)
            cands = self._random_candidates(rng, graph)
            c = rng.randrange(1, 10000) / 1000.0  # c in (0, 10]
            baseline = min(cands,
                           key=lambda x: selection_key(graph, phrase, x))
            scaled = [_Candidate(x.target, x.score * c, x.basis,
                                 x.table_rank, x.name) for x in cands]
            winner = min(scaled,
                         key=lambda x: selection_key(graph, phrase, x))
            assert winner.target == baseline.target

    def test_key_orders_score_first(self, graph):
        a = _Candidate(ColumnRef("MEMBER", "city"), 0.9, TOKEN_OVERLAP, 4, "z")
        b = _Candidate(ColumnRef("LOAN", "amount"), 0.5, TOKEN_OVERLAP, 0, "a")
        assert selection_key(graph, "x", a) < selection_key(graph, "x", b)
