"""Shared fixtures: one generated CSV database and one built graph per session."""

from __future__ import annotations

from datetime import date

import pytest

from tursio.adapters import CsvDirectoryAdapter
from tursio.build import build_graph
from tursio.fixture import generate_fixture, load_manifest

CLOCK = date(2026, 8, 24)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("cu_csv")
    generate_fixture(str(directory))
    return str(directory)


@pytest.fixture(scope="session")
def manifest(fixture_dir):
    return load_manifest(fixture_dir)


@pytest.fixture(scope="session")
def adapter(fixture_dir):
    return CsvDirectoryAdapter(fixture_dir)


@pytest.fixture(scope="session")
def build_result(adapter):
    return build_graph(adapter, graph_id="cu", built_at="2026-08-24")


@pytest.fixture(scope="session")
def graph(build_result):
    return build_result.graph
