"""Linear-optical circuits over path, polarization and orbital angular momentum.

States are normalised Fock amplitudes over photon multisets (see ``fock``).
The preset joining circuit takes photon ``b`` on path ``b1`` and photon ``c``
on path ``c`` carrying the two-qubit state x, plus an ancilla ``H_a``; on a
``H_a H_c`` detection the surviving photon holds all four amplitudes of x.
"""
import logging
import math
from collections import defaultdict
from collections.abc import Callable, Iterable, Mapping, Sequence
from enum import StrEnum
from typing import Any, NamedTuple

import numpy as np

from hom_detect import fock
from hom_detect.constants import HALF_WAVE_PLATE_ANGLE, NORM_TOLERANCE
from hom_detect.errors import (
    BasisCollisionError,
    ConfigError,
    ConsistencyError,
    DimensionMismatchError,
    MixedConditionalError,
    NotNormalizedError,
    UnknownPathError,
    UnknownPresetError,
    ValidationError,
)
from hom_detect.ifaces import ElementIface
from hom_detect.quantum import PureState
from hom_detect.schema import ElementRecordSchema
from hom_detect.types import ComplexVector

logger = logging.getLogger(__name__)

_HALF = 1 / math.sqrt(2)


class Polarization(StrEnum):
    H = 'H'
    V = 'V'


class ModeLabel(NamedTuple):
    path: str
    polarization: Polarization
    oam: int = 0

    def __str__(self) -> str:
        suffix = f',{self.oam}' if self.oam else ''
        return f'{self.polarization}_{self.path}{suffix}'


def mode(path: str, polarization: Polarization | str, oam: int = 0) -> ModeLabel:
    return ModeLabel(path, Polarization(polarization), oam)


type PhotonKey = tuple[ModeLabel, ...]


class PhotonicState:
    terms: dict[PhotonKey, complex]
    paths: frozenset[str]
    photon_count: int

    def __init__(
        self,
        terms: Mapping[PhotonKey, complex],
        *,
        paths: Iterable[str] | None = None,
        photon_count: int | None = None,
    ) -> None:
        self.terms = {}
        for key, amplitude in terms.items():
            canonical = fock.canonical(mode(*label) for label in key)
            self.terms[canonical] = self.terms.get(canonical, 0) + complex(amplitude)

        counts = {len(key) for key in self.terms}
        if photon_count is None:
            if len(counts) != 1:
                raise ValidationError(details={'photon_count': 'cannot be inferred from the terms'})
            photon_count = counts.pop()
        elif counts - {photon_count}:
            raise ValidationError(details={'photon_count': f'terms must carry {photon_count} photons, got {sorted(counts)}'})
        self.photon_count = photon_count

        used = {label.path for key in self.terms for label in key}
        self.paths = frozenset(paths) if paths is not None else frozenset(used)
        if unknown := sorted(used - self.paths):
            raise UnknownPathError(unknown[0], sorted(self.paths))

        if self.norm_squared > 1 + NORM_TOLERANCE:
            raise NotNormalizedError(math.sqrt(self.norm_squared))

    @property
    def norm_squared(self) -> float:
        return fock.norm_squared(self.terms)

    @property
    def is_empty(self) -> bool:
        return not self.terms

    def amplitude(self, *labels: ModeLabel) -> complex:
        return self.terms.get(fock.canonical(labels), 0j)

    def normalized(self) -> 'PhotonicState':
        norm = math.sqrt(self.norm_squared)
        if norm == 0:
            raise NotNormalizedError(norm)
        return PhotonicState(
            {key: amplitude / norm for key, amplitude in self.terms.items()},
            paths=self.paths,
            photon_count=self.photon_count,
        )

    def fidelity(self, other: 'PhotonicState') -> float:
        """|<self|other>|^2 of the normalised states."""
        inner = sum(
            (amplitude.conjugate() * other.terms.get(key, 0j) for key, amplitude in self.terms.items()),
            start=0j,
        )
        norms = self.norm_squared * other.norm_squared
        if norms == 0:
            return 0.0
        return abs(inner) ** 2 / norms

    def __str__(self) -> str:
        if self.is_empty:
            return '0'
        return ' + '.join(
            f'({amplitude.real:.6g}{amplitude.imag:+.6g}j) ' + ' '.join(str(label) for label in key)
            for key, amplitude in sorted(self.terms.items())
        )


class HalfWavePlate(ElementIface):
    kind = 'HWP'
    path: str
    angle: float

    def __init__(
        self,
        path: str,
        angle: float = HALF_WAVE_PLATE_ANGLE,
        *,
        name: str | None = None,
    ) -> None:
        if not math.isfinite(angle):
            raise ValidationError(details={'angle': f'must be finite, got {angle!r}'})

        self.path = path
        self.angle = angle
        self.name = name or f'HWP_{path}'

        doubled = math.radians(2 * angle)
        self._cos, self._sin = math.cos(doubled), math.sin(doubled)

    @property
    def input_paths(self) -> tuple[str, ...]:
        return (self.path,)

    def mode_map(self, label: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        if label.path != self.path:
            return [(label, 1)]

        horizontal = label._replace(polarization=Polarization.H)
        vertical = label._replace(polarization=Polarization.V)
        if label.polarization == Polarization.H:
            return [(horizontal, self._cos), (vertical, self._sin)]
        return [(horizontal, self._sin), (vertical, -self._cos)]

    def to_record(self) -> dict[str, Any]:
        return {'kind': self.kind, 'name': self.name, 'path': self.path, 'angle': self.angle}


class PolarizingBeamSplitter(ElementIface):
    """Transmits H, reflects V into the other path."""

    kind = 'PBS'
    paths: tuple[str, str]

    def __init__(
        self,
        first: str,
        second: str,
        *,
        name: str | None = None,
    ) -> None:
        if first == second:
            raise ValidationError(details={'paths': f'must differ, got {first!r} twice'})

        self.paths = (first, second)
        self.name = name or f'PBS_{first},{second}'

    @property
    def input_paths(self) -> tuple[str, ...]:
        return self.paths

    def mode_map(self, label: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        if label.polarization == Polarization.V and label.path in self.paths:
            first, second = self.paths
            return [(label._replace(path=second if label.path == first else first), 1)]
        return [(label, 1)]

    def to_record(self) -> dict[str, Any]:
        return {'kind': self.kind, 'name': self.name, 'paths': list(self.paths)}


class BeamSplitter5050(ElementIface):
    kind = 'BS'
    inputs: tuple[str, str]
    outputs: tuple[str, str]

    def __init__(
        self,
        inputs: tuple[str, str],
        outputs: tuple[str, str],
        *,
        name: str | None = None,
    ) -> None:
        if len(set(inputs)) != 2 or len(set(outputs)) != 2:  # noqa:PLR2004
            raise ValidationError(details={'ports': f'need two distinct inputs and outputs, got {inputs} -> {outputs}'})

        self.inputs = inputs
        self.outputs = outputs
        self.name = name or f'BS_{",".join(inputs)}'

    @property
    def input_paths(self) -> tuple[str, ...]:
        return self.inputs

    @property
    def output_paths(self) -> tuple[str, ...]:
        return self.outputs

    def mode_map(self, label: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        if label.path not in self.inputs:
            return [(label, 1)]

        sign = 1 if label.path == self.inputs[0] else -1
        first, second = self.outputs
        return [(label._replace(path=first), _HALF), (label._replace(path=second), sign * _HALF)]

    def to_record(self) -> dict[str, Any]:
        return {'kind': self.kind, 'name': self.name, 'paths': list(self.inputs), 'outputs': list(self.outputs)}


class Hologram(ElementIface):
    kind = 'HOLO'
    path: str
    q: int

    def __init__(
        self,
        path: str,
        q: int,
        *,
        name: str | None = None,
    ) -> None:
        self.path = path
        self.q = q
        self.name = name or f'HOLO_{path}'

    @property
    def input_paths(self) -> tuple[str, ...]:
        return (self.path,)

    def mode_map(self, label: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        if label.path != self.path:
            return [(label, 1)]
        return [(label._replace(oam=label.oam + self.q), 1)]

    def to_record(self) -> dict[str, Any]:
        return {'kind': self.kind, 'name': self.name, 'path': self.path, 'q': self.q}


class Detector(ElementIface):
    """Photon counter on a path, optionally behind a polarization filter.

    Detectors act at the end of a circuit through ``post_select``.
    """

    kind = 'DETECT'
    path: str
    polarization: Polarization | None

    def __init__(
        self,
        path: str,
        polarization: Polarization | str | None = None,
        *,
        name: str | None = None,
    ) -> None:
        self.path = path
        self.polarization = Polarization(polarization) if polarization is not None else None
        self.name = name or f'D_{polarization or "*"}_{path}'

    @property
    def input_paths(self) -> tuple[str, ...]:
        return (self.path,)

    def mode_map(self, label: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        return [(label, 1)]

    def accepts(self, label: ModeLabel) -> bool:
        return label.path == self.path and self.polarization in (None, label.polarization)

    def to_record(self) -> dict[str, Any]:
        return {'kind': self.kind, 'name': self.name, 'path': self.path, 'polarization': str(self.polarization) if self.polarization else None}


def apply(state: PhotonicState, element: ElementIface) -> PhotonicState:
    for path in element.input_paths:
        if path not in state.paths:
            raise UnknownPathError(path, sorted(state.paths))

    return PhotonicState(
        fock.transform(state.terms, element.mode_map),
        paths=(state.paths - set(element.input_paths)) | set(element.output_paths),
        photon_count=state.photon_count,
    )


def _as_detector(entry: Detector | tuple[str, Polarization | str | None]) -> Detector:
    if isinstance(entry, Detector):
        return entry
    path, polarization = entry
    return Detector(path, polarization)


def _fires(detected: PhotonKey, detectors: Sequence[Detector]) -> bool:
    if len(detected) != len(detectors):
        return False

    remaining = list(detected)
    # resolved detectors first so an unresolved one never takes their photon
    for detector in sorted(detectors, key=lambda detector: detector.polarization is None):
        match = next((label for label in remaining if detector.accepts(label)), None)
        if match is None:
            return False
        remaining.remove(match)

    return True


def post_select(
    state: PhotonicState,
    pattern: Sequence[Detector | tuple[str, Polarization | str | None]],
) -> tuple[PhotonicState, float]:
    """Condition on every detector firing exactly once.

    Returns the renormalised remainder and the squared norm of the kept branch, so a
    sub-normalised input carries its own branch weight into the probability.
    """
    detectors = [_as_detector(entry) for entry in pattern]
    watched = {detector.path for detector in detectors}
    if unknown := sorted(watched - state.paths):
        raise UnknownPathError(unknown[0], sorted(state.paths))

    branches: defaultdict[PhotonKey, dict[PhotonKey, complex]] = defaultdict(dict)
    for key, amplitude in state.terms.items():
        detected = tuple(label for label in key if label.path in watched)
        if _fires(detected, detectors):
            rest = tuple(label for label in key if label.path not in watched)
            branches[detected][rest] = amplitude

    remaining_paths = state.paths - watched
    remaining_count = state.photon_count - len(detectors)

    live = [terms for terms in branches.values() if fock.norm_squared(terms) > 0]
    if len(live) > 1:
        raise MixedConditionalError(len(live))
    if not live:
        return PhotonicState({}, paths=remaining_paths, photon_count=remaining_count), 0.0

    kept = fock.norm_squared(live[0])
    norm = math.sqrt(kept)
    conditional = PhotonicState(
        {rest: amplitude / norm for rest, amplitude in live[0].items()},
        paths=remaining_paths,
        photon_count=remaining_count,
    )
    return conditional, kept


class CircuitStep(NamedTuple):
    name: str
    state: PhotonicState
    probability: float


def run_circuit(state: PhotonicState, elements: Sequence[ElementIface]) -> list[CircuitStep]:
    """Apply elements in order, recording the squared norm after each one.

    The final step, if the circuit holds detectors, records the post-selection
    probability of all of them firing.
    """
    steps = [CircuitStep('input', state, state.norm_squared)]
    detectors: list[Detector] = []

    for element in elements:
        if isinstance(element, Detector):
            detectors.append(element)
            continue

        state = apply(state, element)
        steps.append(CircuitStep(element.name, state, state.norm_squared))
        logger.debug(f'{element.name}: {len(state.terms)} terms, |psi|^2 = {state.norm_squared:.15f}')

    if detectors:
        conditional, probability = post_select(state, detectors)
        steps.append(CircuitStep(f'post-select {" ".join(d.name for d in detectors)}', conditional, probability))
        logger.debug(f'Post-selection probability {probability:.15f}')

    return steps


JOINING_PATHS = ('a', 'b1', 'b2', 'c')


def joining_circuit() -> list[ElementIface]:
    return [
        HalfWavePlate('a', name='HWP_a0'),
        PolarizingBeamSplitter('a', 'c', name='PBS_ac'),
        PolarizingBeamSplitter('b1', 'b2', name='PBS_b1b2'),
        HalfWavePlate('a', name='HWP_a1'),
        HalfWavePlate('c', name='HWP_c1'),
        HalfWavePlate('b1', name='HWP_b1_1'),
        HalfWavePlate('b2', name='HWP_b2_1'),
        PolarizingBeamSplitter('a', 'b1', name='PBS_ab1'),
        PolarizingBeamSplitter('c', 'b2', name='PBS_cb2'),
        HalfWavePlate('a', name='HWP_a2'),
        HalfWavePlate('c', -HALF_WAVE_PLATE_ANGLE, name='HWP_c2'),
        HalfWavePlate('b1', name='HWP_b1_2'),
        HalfWavePlate('b2', name='HWP_b2_2'),
        Detector('a', Polarization.H),
        Detector('c', Polarization.H),
    ]


CIRCUIT_PRESETS: dict[str, Callable[[], list[ElementIface]]] = {
    'quantum-join-fig4': joining_circuit,
}


def circuit_preset(name: str) -> list[ElementIface]:
    if name not in CIRCUIT_PRESETS:
        raise UnknownPresetError(name, 'circuit-verify')
    return CIRCUIT_PRESETS[name]()


def two_qubit_amplitudes(x: Iterable[complex] | np.ndarray) -> ComplexVector:
    vector = np.array(x, dtype=np.complex128).ravel()
    if vector.size != 4:  # noqa:PLR2004
        raise DimensionMismatchError(vector.size, 4)

    norm = float(np.linalg.norm(vector))
    if abs(norm - 1) > NORM_TOLERANCE:
        raise NotNormalizedError(norm)
    return vector


def joining_input(x: Iterable[complex] | np.ndarray) -> PhotonicState:
    """x0 H_b H_c + x1 H_b V_c + x2 V_b H_c + x3 V_b V_c, times the ancilla H_a."""
    vector = two_qubit_amplitudes(x)
    return PhotonicState(
        {
            (
                mode('a', Polarization.H),
                mode('b1', (Polarization.H, Polarization.V)[index >> 1]),
                mode('c', (Polarization.H, Polarization.V)[index & 1]),
            ): amplitude
            for index, amplitude in enumerate(vector)
        },
        paths=JOINING_PATHS,
        photon_count=3,
    )


def joined_target(x: Iterable[complex] | np.ndarray) -> PhotonicState:
    """x0 H_b1 + x1 V_b1 + x2 H_b2 + x3 V_b2."""
    vector = two_qubit_amplitudes(x)
    basis = (
        mode('b1', Polarization.H),
        mode('b1', Polarization.V),
        mode('b2', Polarization.H),
        mode('b2', Polarization.V),
    )
    return PhotonicState(
        {(label,): amplitude for label, amplitude in zip(basis, vector, strict=True)},
        paths=('b1', 'b2'),
        photon_count=1,
    )


def trace_quantum_join(
    x: Iterable[complex] | np.ndarray,
    circuit: Sequence[ElementIface] | None = None,
) -> list[CircuitStep]:
    return run_circuit(joining_input(x), circuit if circuit is not None else joining_circuit())


def quantum_join(x: Iterable[complex] | np.ndarray) -> tuple[PhotonicState, float]:
    """Join two polarization qubits into one photon, heralded with probability 1/32."""
    last = trace_quantum_join(x)[-1]
    return last.state, last.probability


def joining_branches(
    x: Iterable[complex] | np.ndarray,
) -> dict[tuple[Polarization, Polarization], tuple[PhotonicState, float]]:
    """Conditional states for every polarization outcome on the a and c detectors."""
    unitary = [element for element in joining_circuit() if not isinstance(element, Detector)]
    state = run_circuit(joining_input(x), unitary)[-1].state

    return {
        (on_a, on_c): post_select(state, [Detector('a', on_a), Detector('c', on_c)])
        for on_a in Polarization
        for on_c in Polarization
    }


OAM_OUTPUT_SIGNS = {
    'c1': np.array([1, 1, 1, 1]),
    'c2': np.array([1, 1, -1, -1]),
}


def oam_encode(
    joined: PhotonicState,
    q: int = 1,
    output_path: str = 'c1',
) -> tuple[PureState, float]:
    """Move the b1/b2 path qubit of a joined photon into OAM 0 / q on one output path.

    The result is over (H,0), (V,0), (H,q), (V,q) with dims (2, 2).
    """
    if q == 0:
        raise BasisCollisionError(q)
    if output_path not in OAM_OUTPUT_SIGNS:
        raise UnknownPathError(output_path, sorted(OAM_OUTPUT_SIGNS))
    if joined.photon_count != 1:
        raise ValidationError(details={'photon_count': f'oam encoding takes one photon, got {joined.photon_count}'})

    for (label,) in joined.terms:
        if label.oam != 0:
            raise BasisCollisionError(q, label.oam)

    state = PhotonicState(joined.terms, paths=joined.paths | {'b1', 'b2'}, photon_count=1)
    state = apply(state, Hologram('b2', q))
    state = apply(state, BeamSplitter5050(('b1', 'b2'), ('c1', 'c2')))

    basis = (
        mode(output_path, Polarization.H),
        mode(output_path, Polarization.V),
        mode(output_path, Polarization.H, q),
        mode(output_path, Polarization.V, q),
    )
    vector = np.array([state.amplitude(label) for label in basis])
    kept = float(np.sum(np.abs(vector) ** 2))
    if kept == 0:
        raise ConsistencyError(details={'output_path': output_path, 'oam_encoding': 'no amplitude on the output path'})

    return PureState(vector / math.sqrt(kept), (2, 2)), kept / state.norm_squared


def sign_correct(encoded: PureState, output_path: str = 'c1') -> PureState:
    if output_path not in OAM_OUTPUT_SIGNS:
        raise UnknownPathError(output_path, sorted(OAM_OUTPUT_SIGNS))
    return PureState(encoded.amplitudes * OAM_OUTPUT_SIGNS[output_path], encoded.dims)


def encode_optically(state: PureState, q: int = 1) -> PureState:
    """Two-qubit state carried by a single photon in polarization and OAM."""
    if state.dims != (2, 2):
        raise DimensionMismatchError(state.dims, (2, 2))

    joined, _ = quantum_join(state.amplitudes)
    encoded, _ = oam_encode(joined, q)
    return sign_correct(encoded)


def _required[T](record: ElementRecordSchema, field: str, value: T | None) -> T:
    if value is None:
        raise ConfigError(field, f'required for {record.kind} elements')
    return value


def element_from_record(record: ElementRecordSchema) -> ElementIface:
    match record.kind:
        case 'HWP':
            return HalfWavePlate(
                _required(record, 'path', record.path),
                record.angle if record.angle is not None else HALF_WAVE_PLATE_ANGLE,
                name=record.name,
            )
        case 'PBS':
            first, second = _pair(record, 'paths', record.paths)
            return PolarizingBeamSplitter(first, second, name=record.name)
        case 'BS':
            return BeamSplitter5050(
                _pair(record, 'paths', record.paths),
                _pair(record, 'outputs', record.outputs),
                name=record.name,
            )
        case 'HOLO':
            return Hologram(_required(record, 'path', record.path), _required(record, 'q', record.q), name=record.name)
        case 'DETECT':
            return Detector(_required(record, 'path', record.path), record.polarization, name=record.name)

    raise ConfigError('kind', f'unknown element kind {record.kind!r}')


def _pair(record: ElementRecordSchema, field: str, value: list[str] | None) -> tuple[str, str]:
    paths = _required(record, field, value)
    if len(paths) != 2:  # noqa:PLR2004
        raise ConfigError(field, f'{record.kind} elements take two paths, got {paths}')
    return paths[0], paths[1]


def parse_circuit(records: Iterable[ElementRecordSchema | dict[str, Any]]) -> list[ElementIface]:
    return [
        element_from_record(
            record if isinstance(record, ElementRecordSchema) else ElementRecordSchema.model_validate(record),
        )
        for record in records
    ]
