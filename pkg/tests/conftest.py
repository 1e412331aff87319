import numpy as np
import pytest

from kvbeam.fem import assemble
from kvbeam.model import BeamCoefficients, SpaceMesh, TimeGrid

# lines reported by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ref():
    """Reference configuration: ell=1, rho=r=kappa=1, mu=0.1, T=1, 32 elements, 2000 steps."""
    c = BeamCoefficients.reference()
    mesh = SpaceMesh(1.0, 32)
    grid = TimeGrid(1.0, 2000)
    return c, mesh, grid, assemble(c, mesh)


@pytest.fixture(scope="session")
def small():
    """A cheap configuration for structural tests."""
    c = BeamCoefficients.reference()
    mesh = SpaceMesh(1.0, 8)
    grid = TimeGrid(1.0, 200)
    return c, mesh, grid, assemble(c, mesh)


def twin_truth(t):
    return np.asarray(t) * np.sin(np.pi * np.asarray(t)) ** 2


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
