import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nitsche_fem.cases import get_case  # noqa: E402
from nitsche_fem.mesh import generate_initial  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def jump_case():
    return get_case("paper-3-3")


@pytest.fixture(scope="session")
def jump_problem(jump_case):
    return jump_case.regularized()


@pytest.fixture(scope="session")
def coarse_mesh(jump_case):
    return generate_initial(jump_case.domain, "p1", 1)


@pytest.fixture
def acceptance_line():
    def record(number, description, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {description}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
