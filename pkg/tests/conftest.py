import numpy as np
import pytest

from batchbandits.rng import make_rng

_ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return make_rng(20240601)


@pytest.fixture
def report():
    """Record a one-line PASS/FAIL verdict for the acceptance summary."""

    def _report(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_unit_vectors(rng, k, d):
    v = rng.normal(size=(k, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
