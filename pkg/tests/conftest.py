import numpy as np
import pytest

from foldedwiener import Design, ProblemSpec


@pytest.fixture
def brownian():
    return ProblemSpec.from_r([0])


@pytest.fixture
def sheet():
    return ProblemSpec.from_r([0, 0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def points1d(values):
    return Design(np.asarray(values, dtype=float).reshape(-1, 1), "grid")


_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line: ``verdict(number, ok, detail)``, then assert ``ok``."""
    table = request.config.stash.setdefault(_VERDICTS, {})

    def record(number, ok, detail):
        table[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_VERDICTS, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        ok, detail = table[number]
        terminalreporter.line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
