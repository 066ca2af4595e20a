from pathlib import Path

import pytest

from designforge import make_rng

GOLDEN = Path(__file__).parent / "golden"

# (number, title, passed, detail) recorded by the acceptance suite
ACCEPTANCE = []


@pytest.fixture
def rng():
    return make_rng(1234, 0)


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture
def criterion():
    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
