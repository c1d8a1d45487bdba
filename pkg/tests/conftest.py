import numpy as np
import pytest

from lightdepol.fock import enumerate_basis
from lightdepol.polarization import build_polarization_ops


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def basis_ops():
    cache = {}

    def get(m, N_max):
        if (m, N_max) not in cache:
            b = enumerate_basis(m, N_max)
            cache[m, N_max] = (b, build_polarization_ops(b))
        return cache[m, N_max]

    return get


def comm(A, B):
    return A @ B - B @ A


def random_block_state(basis, N, rng):
    """Random full-rank density matrix supported on the N-photon block."""
    from lightdepol.density import random_density

    sl = basis.block_slice(N)
    d = sl.stop - sl.start
    out = np.zeros((basis.dim, basis.dim), complex)
    out[sl, sl] = random_density(d, rng)
    return out
