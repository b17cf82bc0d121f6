import numpy as np
import pytest

from teleclone import epr_teleport as et
from teleclone import fock_core as fc

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def photon_h_q06():
    """Quadrature channel output for an H photon at q=0.6 (V_q=0.25), n_max=8."""
    psi = fc.single_photon_state((1, 0), 8)
    return et.teleport_channel(psi, 0.6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unitary(rng) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_polarization(rng) -> fc.JonesVector:
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    return fc.JonesVector.from_array(z / np.linalg.norm(z))
