"""Enrichment heuristics: naming, roles, PII detection, derived measures."""

from tursio.enrich import (
    classify_column,
    describe_column,
    detect_pii,
    expand_name,
    generate_alias,
    load_abbreviations,
    load_pii_terms,
)
from tursio.model import ColumnMeta, DIMENSION, MEASURE
from tursio.profiling import ColumnStats


def _stats(column="c", distinct=100, sampled=100, values=()):
    return ColumnStats(table="T", column=column, sampled_rows=sampled,
                       distinct_count=distinct, null_fraction=0.0,
                       min_value=None, max_value=None, avg_length=3.0,
                       value_sample=tuple(values), inferred_type="text")


class TestNaming:
    def test_expand_known_abbreviations(self):
        assert expand_name("acct_close_dt") == "Account Close Date"
        assert expand_name("txn_amount") == "Transaction Amount"

    def test_expand_plain_tokens(self):
        assert expand_name("credit_score") == "Credit Score"

    def test_custom_lexicon(self):
        assert expand_name("qty_x", {"qty": "Quantity"}) == "Quantity X"

    def test_lexicon_file_loads(self):
        table = load_abbreviations()
        assert table["acct"] == "Account"

    def test_alias_initials_for_multi_token(self):
        assert generate_alias("member_account", set()) == "ma"

    def test_alias_prefix_for_single_token(self):
        assert generate_alias("transaction", set()) == "tran"

    def test_alias_deduplicates(self):
        assert generate_alias("member_account", {"ma"}) == "ma2"


class TestClassification:
    def test_measure_by_lexicon(self):
        s = _stats(distinct=3)
        assert classify_column("balance", "decimal", s) == MEASURE

    def test_key_is_dimension(self):
        s = _stats(distinct=100)
        assert classify_column("member_id", "integer", s, is_key=True) \
            == DIMENSION

    def test_id_named_column_is_dimension(self):
        assert classify_column("region_id", "integer", _stats()) == DIMENSION

    def test_high_cardinality_numeric_is_measure(self):
        s = _stats(distinct=90, sampled=100)
        assert classify_column("weight", "decimal", s) == MEASURE

    def test_low_cardinality_numeric_is_dimension(self):
        s = _stats(distinct=4, sampled=100)
        assert classify_column("bucket", "integer", s) == DIMENSION

    def test_text_is_dimension(self):
        assert classify_column("city", "text", _stats()) == DIMENSION


class TestPii:
    def test_name_term(self):
        assert detect_pii("ssn", _stats())
        assert detect_pii("email_address", _stats())
        assert not detect_pii("city", _stats())

    def test_value_shape_ssn(self):
        values = ["123-45-6789"] * 9 + ["n/a"]
        assert detect_pii("code9", _stats(values=values))

    def test_value_shape_email(self):
        values = ["a@example.com", "b@example.org"]
        assert detect_pii("contact", _stats(values=values))

    def test_low_hit_rate_not_flagged(self):
        values = ["a@example.com"] + ["plain"] * 9
        assert not detect_pii("contact", _stats(values=values))

    def test_terms_file_loads(self):
        terms = load_pii_terms()
        assert "ssn" in terms and "email" in terms


class TestDescriptions:
    def test_includes_example_for_non_pii(self):
        col = ColumnMeta("city", "text", display_name="City",
                         sample_values=("Tacoma",))
        assert "e.g. Tacoma" in describe_column(col, "Member")

    def test_pii_omits_examples(self):
        col = ColumnMeta("ssn", "text", display_name="Ssn", pii=True,
                         sample_values=())
        assert "e.g." not in describe_column(col, "Member")


class TestBuildEnrichment:
    def test_fixture_graph_roles_and_pii(self, graph):
        member = graph.table("MEMBER")
        cols = {c.name: c for c in member.columns}
        assert cols["ssn"].pii and cols["email"].pii and cols["phone"].pii
        assert not cols["city"].pii
        assert cols["credit_score"].role == MEASURE
        assert cols["member_id"].role == DIMENSION
        assert all(c.sample_values == () for c in member.columns if c.pii)

    def test_fixture_graph_measures_derived(self, graph):
        measures = {name for name, _, table in graph.custom_measures()
                    if table == "LOAN"}
        assert {"sum_amount", "avg_amount", "loan_count"} <= measures

    def test_aliases_unique_across_graph(self, graph):
        aliases = [t.alias for t in graph.tables]
        assert len(aliases) == len(set(aliases))
