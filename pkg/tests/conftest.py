import numpy as np
import pytest

from nmunravel.bath import BathSpec, solve_rate_function, uniform_grid
from nmunravel.system import two_level_atom

FIG2 = dict(omega=2.0, omega_c=5.5, Omega=0.5, g=0.8, Gamma=1.0)


@pytest.fixture(scope="session")
def fig2_bath():
    return BathSpec(g=FIG2["g"], Gamma=FIG2["Gamma"], omega_c=FIG2["omega_c"])


@pytest.fixture(scope="session")
def fig2_system():
    return two_level_atom(FIG2["omega"], FIG2["Omega"])


@pytest.fixture(scope="session")
def fig2_rates(fig2_bath):
    return solve_rate_function(fig2_bath, FIG2["omega"], uniform_grid(5.0, 5e-4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_states(rng, n, D=2):
    return rng.normal(size=(n, D)) + 1j * rng.normal(size=(n, D))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
