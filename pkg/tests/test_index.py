"""Keyword index and table identification over the fixture graph."""

import pytest

from tursio.errors import DisconnectedModels, NoTableMatch
from tursio.model import ColumnMeta, ContextGraph, TableNode
from tursio.planner.index import (
    build_keyword_index,
    extend_selection,
    identify_tables,
)


@pytest.fixture(scope="module")
def index(graph):
    return build_keyword_index(graph)


class TestKeywordIndex:
    def test_table_tokens_full_weight(self, index):
        assert index["loan"]["LOAN"] == 1.0
        assert index["member"]["MEMBER"] == 1.0
        assert index["member"]["MEMBER_ACCOUNT"] == 1.0

    def test_column_tokens_lower_weight(self, index):
        assert index["balanc"]["MEMBER_ACCOUNT"] == 0.8

    def test_sample_values_indexed_for_dimensions(self, index):
        assert index["tacoma"]["MEMBER"] == 0.7

    def test_pii_columns_absent(self, index):
        assert "ssn" not in index


class TestIdentifyTables:
    def test_single_table(self, graph, index):
        sel = identify_tables("list all members", graph, index)
        assert sel.tables == ["MEMBER"]
        assert sel.edges == []

    def test_partial_name_does_not_drag_sibling(self, graph, index):
        # "members" covers only half of MEMBER_ACCOUNT's name
        sel = identify_tables("members with high credit score", graph, index)
        assert sel.tables == ["MEMBER"]

    def test_intermediate_table_added(self, graph, index):
        sel = identify_tables("total transaction amount by member city",
                              graph, index)
        assert set(sel.tables) == {"MEMBER", "MEMBER_ACCOUNT", "TRANSACTION"}
        assert len(sel.edges) == 2

    def test_no_match(self, graph, index):
        with pytest.raises(NoTableMatch):
            identify_tables("xyzzy plugh", graph, index)

    def test_join_steps_connect(self, graph, index):
        sel = identify_tables("total transaction amount by member city",
                              graph, index)
        steps = sel.join_steps()
        assert steps[0][1] is None
        placed = {steps[0][0]}
        for table, edge in steps[1:]:
            assert edge is not None
            assert table in edge.tables()
            assert (set(edge.tables()) - {table}) <= placed
            placed.add(table)

    def test_deterministic(self, graph, index):
        a = identify_tables("accounts with transactions", graph, index)
        b = identify_tables("accounts with transactions", graph, index)
        assert a.tables == b.tables and a.edges == b.edges


class TestExtendSelection:
    def test_noop_when_already_selected(self, graph, index):
        sel = identify_tables("list all members", graph, index)
        assert extend_selection(graph, sel, ["MEMBER"]) is sel

    def test_widens_with_join_path(self, graph, index):
        sel = identify_tables("list accounts", graph, index)
        wider = extend_selection(graph, sel, ["LOAN"])
        assert set(wider.tables) == {"MEMBER_ACCOUNT", "LOAN"}
        assert len(wider.edges) == 1
        assert wider.weights == sel.weights

    def test_disconnected_tables_rejected(self):
        island = ContextGraph(graph_id="g", tables=(
            TableNode(table_id="ALPHA", physical_name="alpha", alias="al",
                      columns=(ColumnMeta("x", "integer"),)),
            TableNode(table_id="BETA", physical_name="beta", alias="be",
                      columns=(ColumnMeta("y", "integer"),)),
        ))
        with pytest.raises(DisconnectedModels):
            identify_tables("alpha beta", island)
