from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


def port_lines(example: str, original: set[int]) -> set[int]:
    """Translate line numbers of the original Python listing to the .ml1 port."""
    mapping = json.loads((CORPUS / example / "line_map.json").read_text())["lines"]
    return {mapping[str(n)] for n in original}


@pytest.fixture
def corpus():
    return CORPUS


@pytest.fixture
def equilateral_dir():
    return CORPUS / "equilateral"


@pytest.fixture
def isosceles_dir():
    return CORPUS / "isosceles"


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
