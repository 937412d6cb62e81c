"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

from hconvex.exprkit import EvalDomain, parse

# criterion number -> (title, passed, detail); filled in by test_acceptance
ACCEPTANCE: dict = {}

CATALOG = ("t^2", "t", "exp(t)", "sqrt(t)", "1-t^2")


@pytest.fixture
def unit():
    return EvalDomain(0.0, 1.0)


@pytest.fixture(scope="session")
def catalog():
    return {text: parse(text) for text in CATALOG}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
