from __future__ import annotations

import json
from pathlib import Path

import pytest

from capdispatch.io import bundled_khodabandelu
from capdispatch.netmodel import build_ybus

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def dataset():
    return bundled_khodabandelu()


@pytest.fixture(scope="session")
def network(dataset):
    return dataset.network


@pytest.fixture(scope="session")
def ybus(network):
    return build_ybus(network)


@pytest.fixture(scope="session")
def golden_json():
    def load(name: str):
        return json.loads((GOLDEN / name).read_text(encoding="utf-8"))

    return load


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    lines = [test_acceptance.RESULTS[k] for k in sorted(test_acceptance.RESULTS)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
