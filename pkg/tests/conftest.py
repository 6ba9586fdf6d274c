"""Shared fixtures and the per-criterion acceptance summary."""
import numpy as np
import pytest

ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store one acceptance verdict; printed at the end of the session."""
    ACCEPTANCE[criterion] = (bool(passed), detail)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
