import logging
import math
from collections.abc import Iterable, Iterator
from typing import NamedTuple, Protocol, Self, overload

import numpy as np
import scipy.linalg

from hom_detect.constants import (
    EIGENVALUE_DROP_TOLERANCE,
    HERMITIAN_TOLERANCE,
    IMAGINARY_RESIDUE_TOLERANCE,
    NORM_TOLERANCE,
    PSD_CLAMP_TOLERANCE,
    SPECTRAL_TOLERANCE,
    TRACE_TOLERANCE,
)
from hom_detect.errors import (
    ConsistencyError,
    DimensionMismatchError,
    NotHermitianError,
    NotNormalizedError,
    NotPositiveError,
    SubsystemIndexError,
    ValidationError,
    WrongTraceError,
)
from hom_detect.types import ComplexMatrix, ComplexVector, Dims, RealVector

logger = logging.getLogger(__name__)


class Operator(Protocol):
    matrix: ComplexMatrix
    dims: Dims


def _as_dims(dims: Iterable[int]) -> Dims:
    return tuple(int(dim) for dim in dims)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def as_square_matrix(matrix: object) -> ComplexMatrix:
    array = np.array(matrix, dtype=np.complex128)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:  # noqa:PLR2004
        raise ValidationError(details={'matrix': f'must be square, got shape {array.shape}'})
    return array


def check_size(dims: Dims, size: int) -> None:
    if math.prod(dims) != size:
        raise DimensionMismatchError(dims, size)


def require_same_dims(left: Dims, right: Dims) -> None:
    if left != right:
        raise DimensionMismatchError(left, right)


def hermitian_deviation(matrix: ComplexMatrix) -> float:
    if not matrix.size:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def check_hermitian(matrix: ComplexMatrix, tolerance: float = HERMITIAN_TOLERANCE) -> None:
    deviation = hermitian_deviation(matrix)
    if deviation > tolerance:
        raise NotHermitianError(deviation)


def check_unit_trace(matrix: ComplexMatrix) -> None:
    trace = complex(np.trace(matrix))
    if abs(trace - 1) > TRACE_TOLERANCE:
        raise WrongTraceError(trace)


def min_eigenvalue(matrix: ComplexMatrix) -> float:
    return float(scipy.linalg.eigvalsh(matrix)[0])


class PureState:
    amplitudes: ComplexVector
    dims: Dims

    def __init__(
        self,
        amplitudes: Iterable[complex] | np.ndarray,
        dims: Iterable[int] | None = None,
    ) -> None:
        vector = np.array(amplitudes, dtype=np.complex128).ravel()
        self.dims = _as_dims(dims) if dims is not None else (vector.size,)
        check_size(self.dims, vector.size)

        norm = float(np.linalg.norm(vector))
        if abs(norm - 1) > NORM_TOLERANCE:
            raise NotNormalizedError(norm)

        self.amplitudes = _frozen(vector)

    @classmethod
    def normalized(
        cls,
        amplitudes: Iterable[complex] | np.ndarray,
        dims: Iterable[int] | None = None,
    ) -> Self:
        vector = np.array(amplitudes, dtype=np.complex128).ravel()
        norm = float(np.linalg.norm(vector))
        if norm == 0:
            raise NotNormalizedError(norm)
        return cls(vector / norm, dims)

    @classmethod
    def basis(cls, index: int, dims: Iterable[int]) -> Self:
        dims = _as_dims(dims)
        vector = np.zeros(math.prod(dims), dtype=np.complex128)
        vector[index] = 1
        return cls(vector, dims)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def inner(self, other: 'PureState') -> complex:
        """<self|other>."""
        if self.dimension != other.dimension:
            raise DimensionMismatchError(self.dims, other.dims)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: 'PureState') -> float:
        return abs(self.inner(other)) ** 2

    def equals_up_to_phase(self, other: 'PureState', tolerance: float = SPECTRAL_TOLERANCE) -> bool:
        if self.dims != other.dims:
            return False
        return abs(abs(self.inner(other)) - 1) <= tolerance

    def projector(self) -> ComplexMatrix:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> 'DensityMatrix':
        return DensityMatrix(self.projector(), self.dims)

    def __repr__(self) -> str:
        return f'PureState(dims={list(self.dims)}, amplitudes={np.round(self.amplitudes, 6).tolist()})'


class DensityMatrix:
    matrix: ComplexMatrix
    dims: Dims
    min_eigenvalue: float

    def __init__(
        self,
        matrix: object,
        dims: Iterable[int] | None = None,
    ) -> None:
        array = as_square_matrix(matrix)
        self.dims = _as_dims(dims) if dims is not None else (array.shape[0],)
        check_size(self.dims, array.shape[0])

        check_hermitian(array)
        check_unit_trace(array)

        self.min_eigenvalue = min_eigenvalue(array)
        if self.min_eigenvalue < -PSD_CLAMP_TOLERANCE:
            raise NotPositiveError(self.min_eigenvalue)

        self.matrix = _frozen(array)

    @classmethod
    def from_numeric(
        cls,
        matrix: object,
        dims: Iterable[int] | None = None,
    ) -> Self:
        """Build from a computed matrix, clamping round-off negativity of the spectrum."""
        array = as_square_matrix(matrix)
        check_hermitian(array)
        array = (array + array.conj().T) / 2

        values, vectors = scipy.linalg.eigh(array)
        if values[0] < -PSD_CLAMP_TOLERANCE:
            raise NotPositiveError(float(values[0]))

        if values[0] < 0:
            values = np.clip(values, 0, None)
            array = (vectors * values) @ vectors.conj().T
            array = array / np.trace(array).real

        return cls(array, dims)

    @classmethod
    def maximally_mixed(cls, dims: Iterable[int]) -> Self:
        dims = _as_dims(dims)
        dimension = math.prod(dims)
        return cls(np.eye(dimension) / dimension, dims)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> RealVector:
        return scipy.linalg.eigvalsh(self.matrix)

    def expectation(self, operator: ComplexMatrix) -> float:
        """tr[rho O] for a Hermitian O."""
        if operator.shape != self.matrix.shape:
            raise DimensionMismatchError(self.matrix.shape, operator.shape)
        value = complex(np.einsum('ij,ji->', self.matrix, operator))
        if abs(value.imag) > IMAGINARY_RESIDUE_TOLERANCE:
            raise ConsistencyError(details={'imaginary_residue': value.imag})
        return value.real

    def __repr__(self) -> str:
        return f'DensityMatrix(dims={list(self.dims)}, min_eigenvalue={self.min_eigenvalue:.3g})'


class EnsembleEntry(NamedTuple):
    weight: float
    state: PureState


class Ensemble:
    entries: tuple[EnsembleEntry, ...]
    dims: Dims

    def __init__(self, entries: Iterable[tuple[float, PureState]]) -> None:
        self.entries = tuple(EnsembleEntry(float(weight), state) for weight, state in entries)
        if not self.entries:
            raise ValidationError(details={'ensemble': 'at least one entry is required'})

        weights = self.weights
        if np.any(weights < 0):
            raise ValidationError(details={'weights': 'must be nonnegative'})
        if abs(weights.sum() - 1) > NORM_TOLERANCE:
            raise ValidationError(details={'weights': f'must sum to 1, got {weights.sum()!r}'})

        self.dims = self.entries[0].state.dims
        for entry in self.entries:
            require_same_dims(self.dims, entry.state.dims)

    @property
    def weights(self) -> RealVector:
        return np.array([entry.weight for entry in self.entries], dtype=np.float64)

    @property
    def states(self) -> list[PureState]:
        return [entry.state for entry in self.entries]

    def amplitudes(self) -> ComplexMatrix:
        """Member amplitude vectors as rows."""
        return np.array([entry.state.amplitudes for entry in self.entries])

    def density(self) -> DensityMatrix:
        rows = self.amplitudes()
        matrix = (rows.T * self.weights) @ rows.conj()
        return DensityMatrix.from_numeric(matrix, self.dims)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[EnsembleEntry]:
        return iter(self.entries)


class EigenPair(NamedTuple):
    value: float
    vector: PureState


class SchmidtDecomposition(NamedTuple):
    coefficients: RealVector
    left: tuple[PureState, ...]
    right: tuple[PureState, ...]

    def reconstruct(self) -> ComplexVector:
        return sum(
            (
                coefficient * np.kron(left.amplitudes, right.amplitudes)
                for coefficient, left, right in zip(self.coefficients, self.left, self.right, strict=True)
            ),
            start=np.zeros(self.left[0].dimension * self.right[0].dimension, dtype=np.complex128),
        )


def _unpack(operator: Operator | np.ndarray, dims: Iterable[int] | None) -> tuple[ComplexMatrix, Dims]:
    if isinstance(operator, np.ndarray):
        array = as_square_matrix(operator)
        return array, _as_dims(dims) if dims is not None else (array.shape[0],)
    return operator.matrix, operator.dims


@overload
def tensor(a: PureState, b: PureState) -> PureState: ...
@overload
def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix: ...
def tensor(a: PureState | DensityMatrix, b: PureState | DensityMatrix) -> PureState | DensityMatrix:
    match a, b:
        case PureState(), PureState():
            return PureState(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims)
        case DensityMatrix(), DensityMatrix():
            return DensityMatrix(np.kron(a.matrix, b.matrix), a.dims + b.dims)

    raise ValidationError(
        details={'tensor': f'operands must be of the same kind, got {type(a).__name__} and {type(b).__name__}'},
    )


def overlap(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """tr[rho sigma], the average fidelity of any two ensembles realising rho and sigma."""
    require_same_dims(rho.dims, sigma.dims)
    return rho.expectation(sigma.matrix)


def eigendecompose(
    h: Operator | np.ndarray,
    dims: Iterable[int] | None = None,
) -> list[EigenPair]:
    array, dims = _unpack(h, dims)
    check_hermitian(array)

    values, vectors = scipy.linalg.eigh(array)
    return [
        EigenPair(float(value), PureState(vectors[:, index], dims))
        for index, value in enumerate(values)
    ]


def partial_transpose(
    rho: Operator | np.ndarray,
    subsystem: int,
    dims: Iterable[int] | None = None,
) -> ComplexMatrix:
    array, dims = _unpack(rho, dims)
    count = len(dims)
    if not 0 <= subsystem < count:
        raise SubsystemIndexError(subsystem, count)

    axes = list(range(2 * count))
    axes[subsystem], axes[count + subsystem] = axes[count + subsystem], axes[subsystem]

    return np.ascontiguousarray(
        array.reshape(dims + dims).transpose(axes).reshape(array.shape),
    )


def schmidt(psi: PureState, dim_a: int, dim_b: int) -> SchmidtDecomposition:
    if psi.dims != (dim_a, dim_b):
        raise DimensionMismatchError(psi.dims, (dim_a, dim_b))

    left, coefficients, right = scipy.linalg.svd(psi.amplitudes.reshape(dim_a, dim_b))
    rank = min(dim_a, dim_b)

    return SchmidtDecomposition(
        coefficients=coefficients[:rank],
        left=tuple(PureState(left[:, index]) for index in range(rank)),
        right=tuple(PureState(right[index, :]) for index in range(rank)),
    )


def ensemble_of(rho: DensityMatrix) -> Ensemble:
    """Eigen-ensemble of rho, dropping numerically empty eigenspaces."""
    pairs = [pair for pair in eigendecompose(rho) if pair.value > EIGENVALUE_DROP_TOLERANCE]
    total = sum(pair.value for pair in pairs)

    return Ensemble((pair.value / total, pair.vector) for pair in pairs)


def maximally_entangled_state(dim: int) -> PureState:
    return PureState(np.eye(dim).ravel() / math.sqrt(dim), (dim, dim))
