import numpy as np
import pytest

from twopeak import ansatz as anz
from twopeak import field, profile
from twopeak.potentials import PotentialSet

BUMP = "2 - exp(-(x1^2+x2^2))"


@pytest.fixture(scope="session")
def prof2():
    return profile.solve_profile(2, 2.0)


@pytest.fixture(scope="session")
def prof1():
    return profile.solve_profile(1, 2.0)


@pytest.fixture(scope="session")
def prof3():
    return profile.solve_profile(3, 2.0)


@pytest.fixture(scope="session")
def bump():
    return PotentialSet.from_strings(J1=BUMP, dim=2)


@pytest.fixture(scope="session")
def const2():
    return PotentialSet.from_strings(dim=2)


@pytest.fixture(scope="session")
def ansatz_state(prof2, bump):
    """Ansatz at Q=0, eps=0.01 on an h=0.25 window."""
    pl = anz.place((0.0, 0.0), 0.01)
    grid = field.make_grid(pl, 4 * 0.01 ** -0.25, 0.25)
    return pl, grid, anz.ansatz(bump, prof2, pl, grid)


def smooth(rng, grid):
    fp = field.FieldPair(rng.standard_normal(grid.shape), rng.standard_normal(grid.shape), grid)
    fp.u[grid.boundary_mask] = 0.0
    fp.v[grid.boundary_mask] = 0.0
    d = field.riesz(field.riesz(fp))
    return d * (1.0 / max(np.abs(d.u).max(), np.abs(d.v).max()))


def pytest_terminal_summary(terminalreporter, config):
    from test_acceptance import ACCEPTANCE_LINES

    lines = config.stash.get(ACCEPTANCE_LINES, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
