from __future__ import annotations

import pytest

from selmem import data

# (criterion line) appended by test_acceptance; echoed after the run so the
# pass/fail table survives pytest's output capture
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_corpus():
    return data.generate(data.SyntheticPaperSpec(seed=3, n_papers=12))


@pytest.fixture(scope="session")
def tiny_short_corpus():
    return data.generate(data.short_spec(seed=5, n_papers=40))
