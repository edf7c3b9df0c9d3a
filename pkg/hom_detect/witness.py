import logging
import math
from collections.abc import Callable, Iterable, Sequence
from enum import StrEnum
from typing import NamedTuple, Self

import numpy as np
import scipy.linalg
import scipy.optimize

from hom_detect.constants import (
    BISECTION_MAX_ITERATIONS,
    BISECTION_TOLERANCE,
    BISECTION_XTOL,
    DECOMPOSITION_ENSEMBLE_SIZE,
    DECOMPOSITION_RESTARTS,
    DECOMPOSITION_TOLERANCE,
    DECOMPOSITION_WEIGHT_FLOOR,
    KERNEL_TOLERANCE,
    MINIMALITY_TOLERANCE,
    NORM_TOLERANCE,
    PPT_EXACT_MAX_DIMENSION,
)
from hom_detect.errors import (
    BracketError,
    ConfigError,
    ConsistencyError,
    NotAWitnessError,
    ProductTargetError,
    ValidationError,
)
from hom_detect.quantum import (
    DensityMatrix,
    PureState,
    as_square_matrix,
    check_hermitian,
    check_size,
    check_unit_trace,
    min_eigenvalue,
    partial_transpose,
    require_same_dims,
    schmidt,
)
from hom_detect.sampling import (
    block_generator,
    complex_gaussian,
    random_pure_state,
    random_vector,
)
from hom_detect.types import ComplexMatrix, ComplexVector, Dims, RealVector
from hom_detect.utils import time_it

logger = logging.getLogger(__name__)


class SeparabilityMode(StrEnum):
    EXACT = 'exact'
    PPT_LOWER_BOUND = 'ppt-lower-bound'


class WitnessKind(StrEnum):
    PROJECTOR = 'projector'
    TRANSPOSE = 'transpose'


class Witness:
    matrix: ComplexMatrix
    dims: Dims
    lambda_min: float

    def __init__(
        self,
        matrix: object,
        dims: Iterable[int],
    ) -> None:
        array = as_square_matrix(matrix)
        self.dims = tuple(int(dim) for dim in dims)
        if len(self.dims) != 2:  # noqa:PLR2004
            raise ValidationError(details={'dims': f'a witness acts on two subsystems, got {list(self.dims)}'})
        check_size(self.dims, array.shape[0])

        check_hermitian(array)
        self.lambda_min = min_eigenvalue(array)
        if self.lambda_min >= 0:
            raise NotAWitnessError(self.lambda_min)
        check_unit_trace(array)

        array.flags.writeable = False
        self.matrix = array

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def local_dimension(self) -> int:
        """The d of a [d, d] witness; the identity mixing is reconstructed through d**2."""
        dim_a, dim_b = self.dims
        if dim_a != dim_b:
            raise ConfigError('dims', f'needs equal local dimensions [d, d], got {list(self.dims)}')
        return dim_a

    def expectation(self, rho: DensityMatrix) -> float:
        """tr[rho W], negative only for entangled rho."""
        require_same_dims(self.dims, rho.dims)
        return rho.expectation(self.matrix)

    def __repr__(self) -> str:
        return f'Witness(dims={list(self.dims)}, lambda_min={self.lambda_min:.6g})'


def mix_with_identity(witness: Witness, p: float) -> ComplexMatrix:
    return (1 - p) * witness.matrix + p * np.eye(witness.dimension) / witness.dimension


class ApproxWitness:
    """Witness mixed with the least amount of white noise that makes it a state."""

    source: Witness
    p_star: float
    matrix: DensityMatrix

    def __init__(
        self,
        source: Witness,
        p_star: float,
    ) -> None:
        if not 0 < p_star < 1:
            raise ValidationError(details={'p_star': f'must lie in (0, 1), got {p_star!r}'})

        self.source = source
        self.p_star = p_star
        self.matrix = DensityMatrix.from_numeric(mix_with_identity(source, p_star), source.dims)

        if self.matrix.min_eigenvalue > MINIMALITY_TOLERANCE:
            raise ConsistencyError(
                details={
                    'p_star': p_star,
                    'min_eigenvalue': self.matrix.min_eigenvalue,
                    'minimality': 'a smaller mixing would still be positive',
                },
            )

    @property
    def dims(self) -> Dims:
        return self.source.dims

    @property
    def lambda_min(self) -> float:
        return self.source.lambda_min


class ProductTerm(NamedTuple):
    weight: float
    a: DensityMatrix
    b: DensityMatrix

    def product(self) -> ComplexMatrix:
        return np.kron(self.a.matrix, self.b.matrix)


def mixture_of(terms: Sequence[ProductTerm]) -> ComplexMatrix:
    return sum((term.weight * term.product() for term in terms[1:]), start=terms[0].weight * terms[0].product())


def reconstruction_residual(target: DensityMatrix, terms: Sequence[ProductTerm]) -> float:
    if not terms:
        return float(np.max(np.abs(target.matrix)))
    return float(np.max(np.abs(mixture_of(terms) - target.matrix)))


class SeparableApproxWitness:
    source: Witness
    p_s: float
    p_star: float
    mode: SeparabilityMode
    matrix: DensityMatrix
    decomposition: tuple[ProductTerm, ...] | None

    def __init__(
        self,
        source: Witness,
        p_s: float,
        *,
        p_star: float,
        mode: SeparabilityMode,
        decomposition: Sequence[ProductTerm] | None = None,
    ) -> None:
        if not 0 < p_s <= 1:
            raise ValidationError(details={'p_s': f'must lie in (0, 1], got {p_s!r}'})
        if p_s < p_star - BISECTION_TOLERANCE:
            raise ConsistencyError(details={'p_s': p_s, 'p_star': p_star, 'ordering': 'p_s must not undercut p_star'})

        self.source = source
        self.p_s = p_s
        self.p_star = p_star
        self.mode = mode
        self.matrix = DensityMatrix.from_numeric(mix_with_identity(source, p_s), source.dims)

        self.decomposition = None
        if decomposition is not None:
            self._check_decomposition(decomposition)
            self.decomposition = tuple(decomposition)

    def _check_decomposition(self, decomposition: Sequence[ProductTerm]) -> None:
        weights = np.array([term.weight for term in decomposition])
        if np.any(weights < 0) or abs(weights.sum() - 1) > NORM_TOLERANCE:
            raise ConsistencyError(details={'weights': weights.tolist(), 'decomposition': 'weights must form a distribution'})

        residual = reconstruction_residual(self.matrix, decomposition)
        if residual > DECOMPOSITION_TOLERANCE:
            raise ConsistencyError(details={'residual': residual, 'decomposition': 'does not reproduce the witness'})

    @property
    def dims(self) -> Dims:
        return self.source.dims

    def with_decomposition(self, decomposition: Sequence[ProductTerm]) -> Self:
        return type(self)(
            self.source,
            self.p_s,
            p_star=self.p_star,
            mode=self.mode,
            decomposition=decomposition,
        )


class DecompositionOutcome(NamedTuple):
    found: bool
    residual: float
    saew: SeparableApproxWitness
    attempts: int


def projector_witness(target: PureState) -> Witness:
    """Witness detecting states close to an entangled target, normalised to unit trace."""
    if len(target.dims) != 2:  # noqa:PLR2004
        raise ValidationError(details={'dims': f'target must be bipartite, got {list(target.dims)}'})

    largest = float(schmidt(target, *target.dims).coefficients[0])
    if largest**2 >= 1 - NORM_TOLERANCE:
        raise ProductTargetError(largest)

    raw = largest**2 * np.eye(target.dimension) - target.projector()
    return Witness(raw / np.trace(raw).real, target.dims)


def random_witness(
    rng: np.random.Generator,
    dim_a: int,
    dim_b: int,
    kind: WitnessKind = WitnessKind.PROJECTOR,
) -> Witness:
    target = random_pure_state(rng, (dim_a, dim_b))

    match kind:
        case WitnessKind.PROJECTOR:
            return projector_witness(target)
        case WitnessKind.TRANSPOSE:
            return Witness(partial_transpose(target.projector(), 1, target.dims), target.dims)

    raise ValidationError(details={'kind': f'unknown witness kind {kind!r}'})


def psd_margin(matrix: ComplexMatrix) -> float:
    return min_eigenvalue(matrix)


def ppt_margin(matrix: ComplexMatrix, dims: Dims) -> float:
    return min(min_eigenvalue(matrix), min_eigenvalue(partial_transpose(matrix, 1, dims)))


def minimal_mixing(
    witness: Witness,
    margin: Callable[[ComplexMatrix], float],
) -> float:
    """Smallest white-noise weight p with margin((1-p)W + p 1/D) >= 0.

    The margin is concave in p, so bisection on [0, 1] finds the single crossing.
    The returned value sits on the feasible side of it.
    """
    def objective(p: float) -> float:
        return margin(mix_with_identity(witness, p))

    lower, upper = 0.0, 1.0
    if objective(lower) >= 0:
        raise NotAWitnessError(witness.lambda_min)
    if objective(upper) < 0:
        raise BracketError(lower, upper)

    root = scipy.optimize.bisect(
        objective,
        lower,
        upper,
        xtol=BISECTION_XTOL,
        maxiter=BISECTION_MAX_ITERATIONS,
    )
    return min(float(root) + BISECTION_XTOL, upper)


def approximate(witness: Witness) -> ApproxWitness:
    magnitude = witness.dimension * abs(witness.lambda_min)
    p_star = magnitude / (1 + magnitude)

    logger.debug(f'p* = {p_star:.12f} for lambda_min = {witness.lambda_min:.6g}')
    return ApproxWitness(witness, p_star)


def bisect_p_star(witness: Witness) -> float:
    return minimal_mixing(witness, psd_margin)


def separable_approximate(witness: Witness) -> SeparableApproxWitness:
    if witness.dimension <= PPT_EXACT_MAX_DIMENSION:
        mode = SeparabilityMode.EXACT
    else:
        mode = SeparabilityMode.PPT_LOWER_BOUND
        logger.warning(
            f'PPT is only necessary for separability on {list(witness.dims)}, '
            f'the mixing found is a lower bound',
        )

    p_s = minimal_mixing(witness, lambda matrix: ppt_margin(matrix, witness.dims))
    p_star = approximate(witness).p_star

    logger.debug(f'p_s = {p_s:.12f} ({mode}), p* = {p_star:.12f}')
    return SeparableApproxWitness(witness, p_s, p_star=p_star, mode=mode)


def _kernel(target: DensityMatrix) -> ComplexMatrix:
    values, vectors = scipy.linalg.eigh(target.matrix)
    return vectors[:, values <= KERNEL_TOLERANCE]


def _range_product_vectors(
    rng: np.random.Generator,
    kernel: ComplexMatrix,
    dim_a: int,
    dim_b: int,
) -> tuple[ComplexVector, ComplexVector]:
    a = random_vector(rng, dim_a)

    if kernel.shape[1]:
        # <k|a (x) b> = 0 is linear in b once a is fixed
        constraints = np.array([a @ column.conj().reshape(dim_a, dim_b) for column in kernel.T])
        basis = scipy.linalg.null_space(constraints)
        if basis.shape[1]:
            b = basis @ complex_gaussian(rng, basis.shape[1])
            return a, b / np.linalg.norm(b)

    return a, random_vector(rng, dim_b)


def _product_basis_vectors(
    kernel: ComplexMatrix,
    dim_a: int,
    dim_b: int,
) -> list[tuple[ComplexVector, ComplexVector]]:
    eye_a, eye_b = np.eye(dim_a, dtype=np.complex128), np.eye(dim_b, dtype=np.complex128)
    return [
        (eye_a[i], eye_b[j])
        for i in range(dim_a)
        for j in range(dim_b)
        if not kernel.shape[1] or np.max(np.abs(kernel[i * dim_b + j])) <= KERNEL_TOLERANCE
    ]


def _realify(matrix: ComplexMatrix) -> RealVector:
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def fit_separable_mixture(
    target: DensityMatrix,
    *,
    ensemble_size: int,
    rng: np.random.Generator,
) -> tuple[list[ProductTerm], float]:
    """Nonnegative least-squares fit of target over sampled product projectors."""
    dim_a, dim_b = target.dims
    kernel = _kernel(target)

    candidates = _product_basis_vectors(kernel, dim_a, dim_b)[:ensemble_size]
    while len(candidates) < ensemble_size:
        candidates.append(_range_product_vectors(rng, kernel, dim_a, dim_b))

    projectors = [
        (np.outer(a, a.conj()), np.outer(b, b.conj()))
        for a, b in candidates
    ]
    design = np.column_stack([_realify(np.kron(pa, pb)) for pa, pb in projectors])
    weights, _ = scipy.optimize.nnls(design, _realify(target.matrix))

    keep = weights > DECOMPOSITION_WEIGHT_FLOOR
    if not np.any(keep):
        return [], reconstruction_residual(target, [])

    total = weights[keep].sum()
    terms = [
        ProductTerm(float(weights[index] / total), DensityMatrix(pa, (dim_a,)), DensityMatrix(pb, (dim_b,)))
        for index in np.flatnonzero(keep)
        for pa, pb in [projectors[index]]
    ]
    return terms, reconstruction_residual(target, terms)


@time_it
def find_separable_decomposition(
    saew: SeparableApproxWitness,
    *,
    ensemble_size: int = DECOMPOSITION_ENSEMBLE_SIZE,
    seed: int = 0,
    restarts: int = DECOMPOSITION_RESTARTS,
) -> DecompositionOutcome:
    if saew.mode is not SeparabilityMode.EXACT:
        raise ValidationError(
            details={'mode': f'{saew.mode}', 'decomposition': 'needs a separability certificate'},
            error_code='NotExactMode',
        )

    best_residual, attempts = math.inf, 0
    for attempt in range(restarts):
        attempts = attempt + 1
        terms, residual = fit_separable_mixture(
            saew.matrix,
            ensemble_size=ensemble_size,
            rng=block_generator(seed, attempt),
        )
        logger.debug(f'Decomposition attempt {attempts}: {len(terms)} terms, residual {residual:.3g}')

        if residual < DECOMPOSITION_TOLERANCE:
            return DecompositionOutcome(
                found=True,
                residual=residual,
                saew=saew.with_decomposition(terms),
                attempts=attempts,
            )
        best_residual = min(best_residual, residual)

    logger.warning(f'No separable decomposition within {DECOMPOSITION_TOLERANCE} after {attempts} attempts')
    return DecompositionOutcome(found=False, residual=best_residual, saew=saew, attempts=attempts)


def locc_expectation(
    decomposition: SeparableApproxWitness | Sequence[ProductTerm],
    rho: DensityMatrix,
) -> float:
    """sum_k p_k tr[(a_k (x) b_k) rho], what local measurements on each product term estimate."""
    if isinstance(decomposition, SeparableApproxWitness):
        if decomposition.decomposition is None:
            raise ValidationError(details={'decomposition': 'witness carries no separable decomposition'})
        terms: Sequence[ProductTerm] = decomposition.decomposition
    else:
        terms = decomposition

    return sum(
        (term.weight * rho.expectation(term.product()) for term in terms),
        start=0.0,
    )


def reconstruct_expectation(
    f_ave: float,
    p_star: float,
    d: int,
    *,
    check_range: bool = True,
) -> float:
    """Invert the white-noise mixing: (f_ave - p*/d^2) / (1 - p*)."""
    if p_star >= 1 or (check_range and p_star <= 0):
        raise ValidationError(details={'p_star': f'must lie in (0, 1), got {p_star!r}'})
    if d < 2:  # noqa:PLR2004
        raise ValidationError(details={'d': f'must be at least 2, got {d}'})
    if check_range and not -NORM_TOLERANCE <= f_ave <= 1 + NORM_TOLERANCE:
        raise ValidationError(details={'f_ave': f'must lie in [0, 1], got {f_ave!r}'})

    return (f_ave - p_star / d**2) / (1 - p_star)
