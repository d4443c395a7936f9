"""Command line contract: exit codes, JSON stdout, byte determinism."""

import json
import subprocess
import sys

import pytest

from tursio.evalharness import bundled_corpus_path

CLOCK_ARG = "2026-08-24T00:00:00Z"


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "tursio.cli", *args],
                          capture_output=True)


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory, fixture_dir):
    path = tmp_path_factory.mktemp("cli") / "graph.json"
    proc = run_cli("build", fixture_dir, "--out", str(path),
                   "--graph-id", "cu", "--clock", "2026-08-24")
    assert proc.returncode == 0, proc.stderr
    return str(path)


class TestBuild:
    def test_summary_on_stdout(self, graph_file, fixture_dir, tmp_path):
        out = tmp_path / "g2.json"
        proc = run_cli("build", fixture_dir, "--out", str(out),
                       "--graph-id", "cu", "--clock", "2026-08-24")
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert doc == {"graph_id": "cu", "out": str(out),
                       "tables": 5, "joins": 4}

    def test_byte_identical_graph_documents(self, graph_file, fixture_dir,
                                            tmp_path):
        out = tmp_path / "g2.json"
        run_cli("build", fixture_dir, "--out", str(out),
                "--graph-id", "cu", "--clock", "2026-08-24")
        assert out.read_bytes() == open(graph_file, "rb").read()

    def test_missing_source(self, tmp_path):
        proc = run_cli("build", str(tmp_path / "nope"))
        assert proc.returncode == 1


class TestQuery:
    def test_dry_run(self, graph_file):
        proc = run_cli("query", graph_file,
                       "Which members have closed accounts in the last quarter?",
                       "--dry-run", "--clock", CLOCK_ARG)
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert doc["sql"].startswith("SELECT DISTINCT")
        assert "'2026-04-01'" in doc["sql"]
        assert doc["interpretation"][-1] == "SQL: " + doc["sql"]

    def test_byte_identical_runs(self, graph_file):
        args = ("query", graph_file, "Total transaction amount by member city",
                "--dry-run", "--clock", CLOCK_ARG)
        assert run_cli(*args).stdout == run_cli(*args).stdout

    def test_pii_error(self, graph_file):
        proc = run_cli("query", graph_file, "list member ssn",
                       "--dry-run", "--clock", CLOCK_ARG)
        assert proc.returncode == 1
        doc = json.loads(proc.stdout)
        assert doc["error"]["stage"] == "ground"
        assert doc["error"]["pii_blocked"]

    def test_execute(self, graph_file, fixture_dir):
        proc = run_cli("query", graph_file, "How many loans are there?",
                       "--execute", "--source", fixture_dir,
                       "--clock", CLOCK_ARG)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["result"]["rows"] == [[500]]

    def test_execute_without_source(self, graph_file):
        proc = run_cli("query", graph_file, "list all members", "--execute")
        assert proc.returncode == 1

    def test_missing_graph(self):
        proc = run_cli("query", "/no/such/graph.json", "anything")
        assert proc.returncode == 2

    def test_bad_clock(self, graph_file):
        proc = run_cli("query", graph_file, "list all members",
                       "--clock", "not-a-date")
        assert proc.returncode == 2


class TestProfile:
    def test_deterministic_profile(self, fixture_dir):
        a = run_cli("profile", fixture_dir)
        b = run_cli("profile", fixture_dir)
        assert a.returncode == 0
        assert a.stdout == b.stdout
        doc = json.loads(a.stdout)
        assert doc["tables"]["MEMBER"]["member_id"]["inferred_type"] \
            == "integer"


class TestAnnotate:
    def test_applies_and_bumps_version(self, graph_file, tmp_path):
        out = tmp_path / "annotated.json"
        proc = run_cli(
            "annotate", graph_file,
            "--kind", "prioritization",
            "--target", json.dumps({"kind": "column", "table": "LOAN",
                                    "column": "close_date"}),
            "--payload", json.dumps({
                "term": "close",
                "candidates": [
                    {"table": "LOAN", "column": "close_date"},
                    {"table": "MEMBER_ACCOUNT", "column": "close_date"},
                ]}),
            "--clock", "2026-08-24", "--out", str(out))
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["version"] == 2

        after = run_cli("query", str(out),
                        "List accounts which got closed last year",
                        "--dry-run", "--clock", CLOCK_ARG)
        assert "loan.close_date" in json.loads(after.stdout)["sql"]

    def test_bad_payload(self, graph_file):
        proc = run_cli("annotate", graph_file, "--kind", "prioritization",
                       "--target", "{}", "--payload", "{}")
        assert proc.returncode == 1


class TestEval:
    def test_bundled_corpus_means(self, graph_file):
        proc = run_cli("eval", graph_file, bundled_corpus_path(),
                       "--clock", CLOCK_ARG)
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert len(doc["per_question"]) == 20
        means = doc["means"]
        assert means["tables"] >= 0.9 and means["joins"] >= 0.9
        assert means["filters"] >= 0.8 and means["aggregates"] >= 0.8

    def test_byte_identical_runs(self, graph_file):
        args = ("eval", graph_file, bundled_corpus_path(),
                "--clock", CLOCK_ARG)
        a, b = run_cli(*args), run_cli(*args)
        assert a.stdout == b.stdout
