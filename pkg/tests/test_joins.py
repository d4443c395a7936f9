"""Join inference: inclusion oracle, PK detection, pruning, fixture recovery."""

import csv
import os

import pytest
from hypothesis import given, strategies as st

from tursio.adjudicator import DeterministicAdjudicator
from tursio.errors import EmptyDomain
from tursio.joins import (
    detect_primary_keys,
    generate_candidates,
    inclusion_coefficient,
    infer_joins,
    name_similarity,
    prune_candidates,
    score_against_manifest,
    token_jaccard,
)
from tursio.profiling import profile_source, profile_table


@pytest.fixture(scope="module")
def stats(adapter):
    return profile_source(adapter)


@pytest.fixture(scope="module")
def table_pks(adapter, stats):
    pks = {}
    for table in adapter.list_tables():
        per_table = [s for s in stats.values() if s.table == table]
        found = detect_primary_keys(per_table, table)
        pks[table] = found[0] if found else None
    return pks


def _column_values(fixture_dir, table, column):
    with open(os.path.join(fixture_dir, table + ".csv"), newline="",
              encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        idx = header.index(column)
        return [r[idx] if r[idx] != "" else None for r in reader]


class TestInclusionCoefficient:
    def test_oracle_on_fixture_fk(self, fixture_dir):
        # independent oracle straight from the CSVs
        fk = _column_values(fixture_dir, "LOAN", "account_id")
        pk = _column_values(fixture_dir, "MEMBER_ACCOUNT", "account_id")
        expected = len({v for v in fk if v} & set(pk)) / len({v for v in fk if v})
        assert inclusion_coefficient(fk, pk) == expected == 1.0

    def test_partial(self):
        assert inclusion_coefficient([1, 2, 3, 4], [1, 2]) == 0.5

    def test_nulls_ignored(self):
        assert inclusion_coefficient([1, None, None], [1, 2]) == 1.0

    def test_empty_fk(self):
        with pytest.raises(EmptyDomain):
            inclusion_coefficient([None], [1])

    @given(st.sets(st.integers(), min_size=1), st.sets(st.integers()))
    def test_bounds(self, fk, pk):
        coeff = inclusion_coefficient(fk, pk)
        assert 0.0 <= coeff <= 1.0
        if fk <= pk:
            assert coeff == 1.0


class TestNameSimilarity:
    def test_identical(self):
        assert name_similarity("member_id", "member_id") == 1.0

    def test_pk_table_prefix(self):
        assert name_similarity("member_id", "id", pk_table="member") == 0.9

    def test_token_overlap(self):
        assert 0 < name_similarity("acct_member_id", "member_id") < 1.0

    def test_disjoint(self):
        assert name_similarity("region_code", "member_id") == 0.0

    def test_token_jaccard_symmetry(self):
        assert token_jaccard("a_b", "b_c") == token_jaccard("b_c", "a_b")


class TestPrimaryKeys:
    def test_fixture_pks(self, table_pks, manifest):
        for table, info in manifest["tables"].items():
            assert table_pks[table] == info["primary_key"][0]

    def test_non_unique_column_not_pk(self, adapter):
        per_table = profile_table(adapter, "MEMBER")
        keys = detect_primary_keys(per_table, "MEMBER")
        assert "city" not in keys


class TestInference:
    def test_recovers_manifest_fks_exactly(self, adapter, stats, table_pks,
                                           manifest):
        edges, candidates = infer_joins(table_pks, stats,
                                        DeterministicAdjudicator(),
                                        adapter=adapter)
        score = score_against_manifest(edges, manifest)
        assert score["recall"] == 1.0
        assert score["precision"] == 1.0
        assert len(edges) == 4

    def test_decoy_rejected(self, adapter, stats, table_pks, manifest):
        edges, candidates = infer_joins(table_pks, stats,
                                        DeterministicAdjudicator(),
                                        adapter=adapter)
        decoy = manifest["decoys"][0]
        for edge in edges:
            pair = {(edge.left_table, edge.left_columns[0]),
                    (edge.right_table, edge.right_columns[0])}
            assert (decoy["fk_table"], decoy["fk_column"]) not in pair

    def test_decoy_pruned_for_name_evidence(self, adapter, stats, table_pks):
        candidates = generate_candidates(table_pks, stats, adapter)
        candidates = prune_candidates(candidates, stats, table_pks)
        decoys = [c for c in candidates
                  if c.fk_column == "region_code" and c.pk_table == "MEMBER"]
        assert decoys and all(c.pruned_reason is not None for c in decoys)

    def test_candidates_report_reasons(self, adapter, stats, table_pks):
        _, candidates = infer_joins(table_pks, stats,
                                    DeterministicAdjudicator(),
                                    adapter=adapter)
        accepted = [c for c in candidates if c.pruned_reason is None]
        assert len(accepted) >= 4
