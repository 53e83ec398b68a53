import numpy as np
import pytest

from qwslab.gws import eigendecompose, gws_matrix
from qwslab.scattering import fig3_scenario, solve_scattering

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def fig3():
    return fig3_scenario()


@pytest.fixture(scope="session")
def fig3_solution(fig3):
    return solve_scattering(fig3)


@pytest.fixture(scope="session")
def fig3_q(fig3):
    return gws_matrix(fig3)


@pytest.fixture(scope="session")
def fig3_eig(fig3_q):
    return eigendecompose(fig3_q.entries)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unitary(n, rng):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hermitian(n, rng, scale=1.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (A + A.conj().T)


def random_symmetric(n, rng, scale=0.3):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (A + A.T)
