import numpy as np
import pytest

from fracch.energy import EnergyContext
from fracch.mesh import build_uniform_mesh
from fracch.operators import FracExponents, build_operator_set
from fracch.potentials import double_well


@pytest.fixture(scope="session")
def mesh8():
    return build_uniform_mesh(-1.0, 1.0, 8)


@pytest.fixture(scope="session")
def ops8(mesh8):
    return build_operator_set(mesh8, FracExponents(0.5, 0.5))


@pytest.fixture(scope="session")
def ops64():
    return build_operator_set(build_uniform_mesh(-1.0, 1.0, 64), FracExponents(0.5, 0.5))


@pytest.fixture(scope="session")
def ctx64(ops64):
    return EnergyContext(ops=ops64, pot=double_well(4.0))


@pytest.fixture(scope="session")
def ctx64_wide():
    ops = build_operator_set(build_uniform_mesh(-4.0, 4.0, 64), FracExponents(0.5, 0.5))
    return EnergyContext(ops=ops, pot=double_well(4.0))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
