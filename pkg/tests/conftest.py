"""Shared test configuration.

numba reads NUMBA_NUM_THREADS / NUMBA_THREADING_LAYER at import time, so the
environment must be pinned here, before any test module imports
swtorus.engine. Two workers are enough to exercise the thread-count
invariance tests; workqueue is the deterministic-friendly layer that works on
any core count.
"""
import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
os.environ.setdefault("NUMBA_NUM_THREADS", "2")

import pytest

# One line per acceptance criterion, filled in by tests/test_acceptance.py and
# echoed at the end of the run so the PASS/FAIL verdicts survive output capture.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
