import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for a numbered acceptance criterion."""
    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}")
