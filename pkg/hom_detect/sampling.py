"""Seeded random states, unitaries and ensemble remixing."""
import math
from collections.abc import Iterable

import numpy as np
from scipy.stats import unitary_group

from hom_detect.errors import ValidationError
from hom_detect.quantum import DensityMatrix, Ensemble, PureState
from hom_detect.types import ComplexMatrix, ComplexVector


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent substream of ``seed`` for the given block index."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))


def complex_gaussian(rng: np.random.Generator, shape: int | tuple[int, ...]) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_vector(rng: np.random.Generator, dimension: int) -> ComplexVector:
    vector = complex_gaussian(rng, dimension)
    return vector / np.linalg.norm(vector)


def random_pure_state(rng: np.random.Generator, dims: Iterable[int]) -> PureState:
    """Haar-random pure state."""
    dims = tuple(dims)
    return PureState(random_vector(rng, math.prod(dims)), dims)


def random_product_state(rng: np.random.Generator, dim_a: int, dim_b: int) -> PureState:
    return PureState(
        np.kron(random_vector(rng, dim_a), random_vector(rng, dim_b)),
        (dim_a, dim_b),
    )


def random_density_matrix(
    rng: np.random.Generator,
    dims: Iterable[int],
    rank: int | None = None,
) -> DensityMatrix:
    """Induced-measure mixed state from a Ginibre matrix."""
    dims = tuple(dims)
    dimension = math.prod(dims)
    rank = rank or dimension
    if not 1 <= rank <= dimension:
        raise ValidationError(details={'rank': f'must lie in [1, {dimension}], got {rank}'})

    ginibre = complex_gaussian(rng, (dimension, rank))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix.from_numeric(matrix / np.trace(matrix).real, dims)


def random_unitary(rng: np.random.Generator, dimension: int) -> ComplexMatrix:
    # unitary_group needs dim > 1
    if dimension == 1:
        return np.exp(2j * np.pi * rng.random((1, 1)))
    return unitary_group.rvs(dimension, random_state=rng)


def remix_ensemble(
    ensemble: Ensemble,
    rng: np.random.Generator,
    size: int | None = None,
) -> Ensemble:
    """Another ensemble with the same density matrix, through a random isometry."""
    size = size or len(ensemble)
    if size < len(ensemble):
        raise ValidationError(details={'size': f'must be at least {len(ensemble)}, got {size}'})

    weighted = ensemble.amplitudes() * np.sqrt(ensemble.weights)[:, np.newaxis]
    isometry = random_unitary(rng, size)[:, :len(ensemble)]
    mixed = isometry @ weighted

    norms = np.linalg.norm(mixed, axis=1)
    keep = norms > 0
    weights = norms[keep] ** 2

    return Ensemble(
        (float(weight), PureState(vector / norm, ensemble.dims))
        for weight, norm, vector in zip(weights / weights.sum(), norms[keep], mixed[keep], strict=True)
    )
