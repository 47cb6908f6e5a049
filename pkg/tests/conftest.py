import pytest

from meshca.conflict_graph import build_emmcg
from meshca.topology import GenTargets, generate_rwmn, make_topology


@pytest.fixture(scope="session")
def rwmn():
    return generate_rwmn(GenTargets(seed=42))


@pytest.fixture(scope="session")
def rwmn_cg(rwmn):
    return build_emmcg(rwmn, 2)


@pytest.fixture
def triangle():
    return make_topology([(0, 0), (200, 0), (100, 150)], [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    """Nodes a-b-c, 200 m apart: links ab=0, bc=1."""
    return make_topology([(0, 0), (200, 0), (400, 0)], [(0, 1), (1, 2)])


@pytest.fixture
def star3():
    """Hub 0 with three spokes."""
    return make_topology([(0, 0), (200, 0), (-200, 0), (0, 200)], [(0, 1), (0, 2), (0, 3)])


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
