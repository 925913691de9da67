import numpy as np
import pytest

from pfaffian_cqed.lattice import LatticeSpec, basis_for
from pfaffian_cqed.qubit import reference_operating_point


@pytest.fixture(scope="session")
def operating_qubit():
    return reference_operating_point()


@pytest.fixture(scope="session")
def reference_basis():
    return basis_for(LatticeSpec())


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
