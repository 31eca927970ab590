import numpy as np
import pytest

from monadnahm.monad_core import MonadData


def k1j0():
    return MonadData(1, 0, [[2]], [[3]], [[1, -1]], [[1], [1]])


def k1j1():
    return MonadData(1, 1, [[1]], [[0]], [[1, 1]], [[1], [-1]], [[1]], [[0]], [[0, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_g(rng, k, cond_max=1e3):
    while True:
        g = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        if np.linalg.cond(g) <= cond_max:
            return g


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number: int, name: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {number} {name}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
