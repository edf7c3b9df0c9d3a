import numpy as np
import pytest

from hom_detect.quantum import DensityMatrix, PureState, maximally_entangled_state
from hom_detect.witness import Witness, projector_witness


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def phi_plus() -> PureState:
    return maximally_entangled_state(2)


@pytest.fixture
def bell_density(phi_plus: PureState) -> DensityMatrix:
    return phi_plus.density()


@pytest.fixture
def product_density() -> DensityMatrix:
    return PureState.basis(0, (2, 2)).density()


@pytest.fixture
def maximally_mixed() -> DensityMatrix:
    return DensityMatrix.maximally_mixed((2, 2))


@pytest.fixture
def standard_witness(phi_plus: PureState) -> Witness:
    """1/2 - |phi+><phi+|."""
    return projector_witness(phi_plus)


@pytest.fixture
def standard_aew_matrix(phi_plus: PureState) -> np.ndarray:
    return (np.eye(4) - phi_plus.projector()) / 3
