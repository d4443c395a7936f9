"""Graph construction: profile -> keys -> joins -> enrichment -> assemble.

Deterministic given (source data, configuration): sampling is seeded by
(graph_id, table), and the deterministic adjudicator is pure, so two builds
of the same source produce byte-identical graph documents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import enrich
from .adapters import DataSourceAdapter
from .adjudicator import Adjudicator, DeterministicAdjudicator
from .errors import TableNotFound
from .joins import (
    InferenceConfig,
    JoinCandidate,
    detect_primary_keys,
    infer_joins,
)
from .model import (
    ColumnMeta,
    ContextGraph,
    TableNode,
    validate_graph,
)
from .profiling import (
    DEFAULT_SAMPLE_SIZE,
    StatsMap,
    profile_source,
)

COLUMN_ALIAS_MIN_LEN = 13  # physical names this long get a compact alias
SAMPLE_VALUES_ON_META = 20


@dataclass
class BuildResult:
    graph: ContextGraph
    stats: StatsMap
    candidates: List[JoinCandidate]
    violations: list


def build_graph(adapter: DataSourceAdapter, graph_id: str,
                tables: Optional[Sequence[str]] = None,
                adjudicator: Optional[Adjudicator] = None,
                sample_size: int = DEFAULT_SAMPLE_SIZE,
                config: InferenceConfig = InferenceConfig(),
                built_at: str = "") -> BuildResult:
    adjudicator = adjudicator or DeterministicAdjudicator()
    table_names = list(tables) if tables else adapter.list_tables()
    for name in table_names:
        if name not in adapter.list_tables():
            raise TableNotFound(name)

    stats = profile_source(adapter, table_names, sample_size, seed_key=graph_id)

    table_pks: Dict[str, Optional[str]] = {}
    for table in table_names:
        per_table = [stats[(table, col)] for (t, col) in sorted(stats)
                     if t == table]
        keys = detect_primary_keys(per_table, table)
        table_pks[table] = keys[0] if keys else None

    edges, candidates = infer_joins(
        {t: pk for t, pk in table_pks.items() if pk}, stats, adjudicator,
        adapter=adapter, config=config)

    fk_endpoints = set()
    for e in edges:
        for table, cols in ((e.left_table, e.left_columns),
                            (e.right_table, e.right_columns)):
            for col in cols:
                fk_endpoints.add((table, col))

    taken_aliases: set = set()
    nodes = []
    for table in sorted(table_names):
        row_count = sum(1 for _ in adapter.scan(table))
        display = enrich.expand_name(table)
        display = adjudicator.refine_text("table_display", display,
                                          {"table": table})
        alias = enrich.generate_alias(table, taken_aliases)
        taken_aliases.add(alias)

        columns = []
        schema = adapter.read_schema(table)
        for name, _declared in schema:
            cs = stats[(table, name)]
            pii = enrich.detect_pii(name, cs)
            is_key = (name == table_pks[table]) or (table, name) in fk_endpoints
            # PII never aggregates: flagged columns stay dimensions
            role = enrich.DIMENSION if pii else \
                enrich.classify_column(name, cs.inferred_type, cs, is_key)
            aliases: tuple = ()
            if len(name) >= COLUMN_ALIAS_MIN_LEN:
                col_alias = enrich.generate_alias(name, taken_aliases)
                taken_aliases.add(col_alias)
                aliases = (col_alias,)
            samples = () if pii else tuple(cs.value_sample[:SAMPLE_VALUES_ON_META])
            col = ColumnMeta(
                name=name,
                data_type=cs.inferred_type,
                role=role,
                display_name=enrich.expand_name(name),
                aliases=aliases,
                pii=pii,
                sample_values=samples,
                stats_ref=f"{table}.{name}",
            )
            col = ColumnMeta(**{**col.__dict__,
                                "description": enrich.describe_column(col, display)})
            columns.append(col)

        nodes.append(TableNode(
            table_id=table,
            physical_name=table,
            display_name=display,
            alias=alias,
            description=adjudicator.refine_text(
                "table_description", f"{display} table with {row_count} rows",
                {"table": table}),
            columns=tuple(columns),
            primary_key=(table_pks[table],) if table_pks[table] else (),
            row_count_estimate=row_count,
        ))

    graph = ContextGraph(
        graph_id=graph_id,
        tables=tuple(nodes),
        joins=tuple(edges),
        version=1,
        built_at=built_at,
    )
    measures = tuple(enrich.derive_custom_measures(graph))
    graph = ContextGraph(**{**graph.__dict__, "annotations": measures})
    return BuildResult(graph=graph, stats=stats, candidates=candidates,
                       violations=validate_graph(graph))
