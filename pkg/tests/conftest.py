from __future__ import annotations

import sys
from pathlib import Path

import pytest

from lambda_eq.parser import parse_term
from lambda_eq.syntax import Context, name

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# deep terms from the generators recurse through the printer and alpha_eq
sys.setrecursionlimit(max(sys.getrecursionlimit(), 10_000))


def p(text: str):
    return parse_term(text)


def ctx_of(*entries: tuple[str, str]) -> Context:
    c = Context()
    for x, ty in entries:
        c = c.extend(name(x), parse_term(ty))
    return c


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(acceptance.VERDICTS):
            terminalreporter.write_line(acceptance.VERDICTS[n])
