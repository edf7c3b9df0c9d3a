"""Hong-Ou-Mandel interference of two photons on a 50:50 beam splitter.

Two photons carrying internal states psi1 and psi2 leave through different
output ports with probability (1 - |<psi2|psi1>|^2) / 2. Everything else in the
package reduces to that identity or its mixed-state form (1 - tr[rho sigma]) / 2.
"""
import logging
import math

import numpy as np

from hom_detect import fock
from hom_detect.constants import NORM_TOLERANCE
from hom_detect.errors import ConsistencyError, DimensionMismatchError
from hom_detect.quantum import DensityMatrix, Ensemble, PureState, overlap
from hom_detect.schema import BaseSchema

logger = logging.getLogger(__name__)

INPUT_PORTS = ('a', 'b')
OUTPUT_PORTS = ('c', 'd')

_HALF = 1 / math.sqrt(2)


class CoincidenceResult(BaseSchema):
    p_coincidence: float
    p_bunched: float
    breakdown: dict[str, float] | None = None


def _from_overlap(fidelity: float) -> CoincidenceResult:
    p_coincidence = min(max((1 - fidelity) / 2, 0.0), 0.5)
    return CoincidenceResult(p_coincidence=p_coincidence, p_bunched=1 - p_coincidence)


def coincidence_pure(psi1: PureState, psi2: PureState) -> CoincidenceResult:
    if psi1.dimension != psi2.dimension:
        raise DimensionMismatchError(psi1.dims, psi2.dims)
    return _from_overlap(psi1.fidelity(psi2))


def coincidence_mixed(sigma1: DensityMatrix, sigma2: DensityMatrix) -> CoincidenceResult:
    return _from_overlap(overlap(sigma1, sigma2))


def _beam_splitter(mode: tuple[str, int]) -> list[tuple[tuple[str, int], complex]]:
    port, level = mode
    match port:
        case 'a':
            return [(('c', level), _HALF), (('d', level), _HALF)]
        case 'b':
            return [(('c', level), _HALF), (('d', level), -_HALF)]

    msg = f'unknown beam splitter input port {port!r}'
    raise ValueError(msg)


def bs_oracle(psi1: PureState, psi2: PureState) -> CoincidenceResult:
    """Coincidence probability from the full two-photon bosonic output state."""
    if psi1.dimension != psi2.dimension:
        raise DimensionMismatchError(psi1.dims, psi2.dims)

    terms: fock.FockTerms = {
        fock.canonical((('a', i), ('b', j))): complex(amplitude_a * amplitude_b)
        for i, amplitude_a in enumerate(psi1.amplitudes)
        for j, amplitude_b in enumerate(psi2.amplitudes)
        if amplitude_a and amplitude_b
    }
    output = fock.transform(terms, _beam_splitter)

    breakdown: dict[str, float] = {}
    p_bunched = 0.0
    for key, amplitude in output.items():
        probability = abs(amplitude) ** 2
        ports = sorted(port for port, _ in key)
        if ports == list(OUTPUT_PORTS):
            (_, level_c), (_, level_d) = key
            breakdown[f'c{level_c},d{level_d}'] = probability
        else:
            p_bunched += probability

    p_coincidence = sum(breakdown.values())
    logger.debug(f'Oracle: p_c = {p_coincidence:.15f}, p_b = {p_bunched:.15f}')

    return CoincidenceResult(p_coincidence=p_coincidence, p_bunched=p_bunched, breakdown=breakdown)


def average_fidelity(rho_ensemble: Ensemble, sigma_ensemble: Ensemble) -> float:
    """sum_ij w_i q_j |<phi_i|psi_j>|^2, equal to tr[rho sigma] for every realisation."""
    if rho_ensemble.dims != sigma_ensemble.dims:
        raise DimensionMismatchError(rho_ensemble.dims, sigma_ensemble.dims)

    gram = np.abs(rho_ensemble.amplitudes().conj() @ sigma_ensemble.amplitudes().T) ** 2
    value = float(rho_ensemble.weights @ gram @ sigma_ensemble.weights)

    if not -NORM_TOLERANCE <= value <= 1 + NORM_TOLERANCE:
        raise ConsistencyError(details={'average_fidelity': value})
    return value
