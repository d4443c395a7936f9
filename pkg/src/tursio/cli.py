"""Operator command line: profile, build, query, annotate, eval, serve.

Stdout carries exactly one JSON document per invocation so output can be
piped and golden-tested; logs go to stderr.  Exit codes: 0 success, 1
planner or user error, 2 system error.  Time never comes from the wall
clock when --clock is given, so two runs with the same clock are
byte-identical.
"""

from __future__ import annotations

import json
import os
import sys
from datetime import date, datetime
from typing import Optional

import click

from .adapters import CsvDirectoryAdapter, DataSourceAdapter, SqliteAdapter
from .build import build_graph
from .errors import PlannerError, TursioError
from .evalharness import load_corpus, run_corpus
from .model import (
    Annotation,
    _target_from_doc,
    apply_annotation,
    deserialize_graph,
    graph_to_doc,
    serialize_graph,
    validate_graph,
)
from .planner.pipeline import plan_query
from .profiling import profile_table

EXIT_OK = 0
EXIT_USER = 1
EXIT_SYSTEM = 2


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _log(message: str) -> None:
    sys.stderr.write(message + "\n")


def _fail(message: str, code: int) -> None:
    _log(f"error: {message}")
    sys.exit(code)


def _open_adapter(source: str) -> DataSourceAdapter:
    if os.path.isdir(source):
        return CsvDirectoryAdapter(source)
    if os.path.isfile(source):
        return SqliteAdapter(source)
    raise TursioError(f"no such data source: {source}")


def _parse_clock(value: Optional[str]) -> date:
    if not value:
        return date.today()
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00")).date()
    except ValueError:
        raise click.BadParameter(f"bad --clock value: {value!r}")


def _load_graph(path: str):
    with open(path, "rb") as fh:
        return deserialize_graph(fh.read())


def _load_config(config_path: Optional[str]) -> dict:
    path = config_path or os.environ.get("TURSIO_CONFIG")
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


@click.group()
@click.option("--config", "config_path", default=None,
              help="Config file (JSON); defaults to TURSIO_CONFIG.")
@click.pass_context
def main(ctx, config_path):
    """Structured-data search over relational sources."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = _load_config(config_path)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read config: {exc}", EXIT_SYSTEM)


@main.command()
@click.argument("source")
@click.option("--sample", default=1000, show_default=True,
              help="Rows sampled per table.")
def profile(source, sample):
    """Profile every table in SOURCE (CSV directory or SQLite file)."""
    try:
        adapter = _open_adapter(source)
        docs = {}
        for table in adapter.list_tables():
            stats = profile_table(adapter, table, sample_size=sample)
            docs[table] = {
                s.column: {
                    "inferred_type": s.inferred_type,
                    "null_fraction": round(s.null_fraction, 4),
                    "distinct_count": s.distinct_count,
                    "sampled_rows": s.sampled_rows,
                    "sample_values": [str(v) for v in s.value_sample[:5]],
                }
                for s in stats
            }
        _emit({"source": source, "tables": docs})
    except TursioError as exc:
        _fail(str(exc), EXIT_USER)
    except OSError as exc:
        _fail(str(exc), EXIT_SYSTEM)


@main.command()
@click.argument("source")
@click.option("--tables", default=None, help="Comma-separated table subset.")
@click.option("--out", default=None, help="Write the graph document here.")
@click.option("--graph-id", default=None, help="Graph identifier.")
@click.option("--clock", default=None, help="Build timestamp (ISO).")
def build(source, tables, out, graph_id, clock):
    """Infer a context graph from SOURCE."""
    try:
        adapter = _open_adapter(source)
        table_list = [t.strip() for t in tables.split(",")] if tables else None
        gid = graph_id or os.path.basename(os.path.normpath(source))
        built_at = clock or ""
        result = build_graph(adapter, graph_id=gid, tables=table_list,
                             built_at=built_at)
        violations = validate_graph(result.graph)
        if violations:
            _fail("; ".join(str(v) for v in violations), EXIT_USER)
        data = serialize_graph(result.graph)
        if out:
            with open(out, "wb") as fh:
                fh.write(data)
            _log(f"wrote {out}")
            _emit({"graph_id": gid, "out": out,
                   "tables": len(result.graph.tables),
                   "joins": len(result.graph.joins)})
        else:
            _emit(graph_to_doc(result.graph))
    except TursioError as exc:
        _fail(str(exc), EXIT_USER)
    except OSError as exc:
        _fail(str(exc), EXIT_SYSTEM)


@main.command()
@click.argument("graph_path")
@click.argument("question")
@click.option("--dry-run", is_flag=True, help="Plan only; show interpretation.")
@click.option("--execute", "execute_", is_flag=True,
              help="Run the SQL against --source.")
@click.option("--source", default=None,
              help="Data source for --execute (CSV dir or SQLite file).")
@click.option("--clock", default=None, help="Reference instant (ISO).")
def query(graph_path, question, dry_run, execute_, source, clock):
    """Plan QUESTION against a saved graph document."""
    try:
        graph = _load_graph(graph_path)
    except (OSError, TursioError) as exc:
        _fail(str(exc), EXIT_SYSTEM)
    try:
        result = plan_query(question, graph, clock=_parse_clock(clock))
    except PlannerError as exc:
        _emit({"error": exc.to_payload()})
        sys.exit(EXIT_USER)
    doc = {
        "question": question,
        "sql": result.sql,
        "tables": list(result.selection.tables),
        "rules_applied": result.audit.rules_applied,
        "interpretation": result.interpretation(),
        "sketch": result.audit.sketch,
        "groundings": result.audit.groundings,
    }
    if execute_ and not dry_run:
        if not source:
            _fail("--execute needs --source", EXIT_USER)
        try:
            adapter = _open_adapter(source)
            columns, rows = adapter.execute(result.sql)
            doc["result"] = {"columns": columns,
                             "rows": [list(r) for r in rows]}
        except TursioError as exc:
            _fail(str(exc), EXIT_USER)
    _emit(doc)


@main.command()
@click.argument("graph_path")
@click.option("--kind", required=True,
              help="prioritization | synonym | description | "
                   "custom_measure | enforcer_rule | pii_flag")
@click.option("--target", "target_json", required=True,
              help='JSON target, e.g. {"kind":"column","table":"T","column":"c"}')
@click.option("--payload", "payload_json", required=True,
              help="JSON payload for the annotation kind.")
@click.option("--author", default="cli")
@click.option("--clock", default=None, help="Annotation timestamp (ISO).")
@click.option("--out", default=None,
              help="Output path; defaults to rewriting GRAPH_PATH.")
def annotate(graph_path, kind, target_json, payload_json, author, clock, out):
    """Apply one annotation and write the bumped graph document."""
    try:
        graph = _load_graph(graph_path)
    except (OSError, TursioError) as exc:
        _fail(str(exc), EXIT_SYSTEM)
    try:
        target = _target_from_doc(json.loads(target_json))
        payload = json.loads(payload_json)
    except (json.JSONDecodeError, TursioError) as exc:
        _fail(f"bad target/payload: {exc}", EXIT_USER)
    ann = Annotation(kind=kind, target=target, payload=payload,
                     author=author, created_at=clock or "")
    try:
        new_graph = apply_annotation(graph, ann)
    except TursioError as exc:
        _fail(str(exc), EXIT_USER)
    destination = out or graph_path
    try:
        with open(destination, "wb") as fh:
            fh.write(serialize_graph(new_graph))
    except OSError as exc:
        _fail(str(exc), EXIT_SYSTEM)
    _emit({"graph_id": new_graph.graph_id, "version": new_graph.version,
           "out": destination})


@main.command(name="eval")
@click.argument("graph_path")
@click.argument("corpus_path")
@click.option("--clock", default=None, help="Reference instant (ISO).")
def eval_cmd(graph_path, corpus_path, clock):
    """Score the planner against a JSONL corpus of reference SQL."""
    try:
        graph = _load_graph(graph_path)
        corpus = load_corpus(corpus_path)
    except (OSError, ValueError, TursioError) as exc:
        _fail(str(exc), EXIT_SYSTEM)
    when = _parse_clock(clock)

    def plan_fn(question: str) -> str:
        return plan_query(question, graph, clock=when).sql

    report = run_corpus(corpus, plan_fn)
    _emit(report.to_doc())


@main.command()
@click.option("--addr", default=None, help="host:port (default TURSIO_ADDR).")
@click.option("--principals", "principals_path", required=True,
              help="Principals JSON file.")
@click.option("--data-dir", default=None,
              help="Store directory (default TURSIO_DATA_DIR).")
def serve(addr, principals_path, data_dir):
    """Run the HTTP API."""
    from .access import PrincipalTable
    from .service import ServiceState, run
    from .store import Store

    try:
        principals = PrincipalTable.load(principals_path)
    except (OSError, ValueError, KeyError) as exc:
        _fail(f"cannot load principals: {exc}", EXIT_SYSTEM)
    state = ServiceState(principals=principals,
                         store=Store(root=data_dir or ""))
    run(state, addr)


if __name__ == "__main__":
    main()
