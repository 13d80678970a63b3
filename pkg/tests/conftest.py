import numpy as np
import pytest

from foliata import preset


@pytest.fixture(scope="session")
def P0():
    return preset("p0")


@pytest.fixture(scope="session")
def P2():
    return preset("p2")


@pytest.fixture(scope="session")
def P4():
    return preset("p4")


@pytest.fixture(scope="session")
def presets(P0, P2, P4):
    return {"p0": P0, "p2": P2, "p4": P4}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
