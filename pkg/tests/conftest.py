import numpy as np
import pytest

import jmscatter as jm

HW = 500.0
TRIPLET_V11_HW = -0.81512
SINGLET_V11_HW = -0.7315
E_I = 189.525


@pytest.fixture(scope="session")
def basis():
    return jm.OscillatorBasis(HW)


@pytest.fixture(scope="session")
def triplet_params(basis):
    return jm.Rank2Params(basis, E_I, 0.0, TRIPLET_V11_HW * HW)


@pytest.fixture(scope="session")
def singlet_params(basis):
    return jm.Rank2Params(basis, E_I, 0.0, SINGLET_V11_HW * HW)


@pytest.fixture(scope="session")
def triplet_ham(triplet_params):
    return jm.build_truncated_hamiltonian(triplet_params.to_potential())


@pytest.fixture(scope="session")
def singlet_ham(singlet_params):
    return jm.build_truncated_hamiltonian(singlet_params.to_potential())


def random_symmetric(rng, size, scale_mev):
    v = rng.normal(0.0, scale_mev, (size, size))
    return 0.5 * (v + v.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
