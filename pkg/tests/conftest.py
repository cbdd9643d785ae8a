from pathlib import Path

import numpy as np
import pytest

from bsmimo import network

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def printed_s():
    return network.printed_smatrix()


@pytest.fixture(scope="session")
def amended_s(printed_s):
    return network.amend_with_losses(printed_s, 2.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_passive_s(rng, n=3, scale=0.6):
    """Random reciprocal S-matrix with spectral norm < 1."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = a + a.T
    return scale * a / np.linalg.norm(a, 2)


def random_symmetric_radiator(rng, scale=0.6):
    """Random reciprocal S-matrix with the passive-port mirror symmetry."""
    a, b, c, d, e = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    s = np.array([[a, b, b], [b, c, d], [b, d, c]])
    return scale * s / np.linalg.norm(s, 2)
