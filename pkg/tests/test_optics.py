import itertools
import math
from collections import Counter, defaultdict

import numpy as np
import pytest

from hom_detect.errors import (
    BasisCollisionError,
    ConfigError,
    MixedConditionalError,
    NotNormalizedError,
    UnknownPathError,
    UnknownPresetError,
)
from hom_detect.optics import (
    BeamSplitter5050,
    Detector,
    HalfWavePlate,
    Hologram,
    ModeLabel,
    PhotonicState,
    Polarization,
    PolarizingBeamSplitter,
    apply,
    circuit_preset,
    encode_optically,
    joined_target,
    joining_branches,
    joining_circuit,
    mode,
    oam_encode,
    parse_circuit,
    post_select,
    quantum_join,
    sign_correct,
    trace_quantum_join,
)
from hom_detect.quantum import PureState, maximally_entangled_state
from hom_detect.sampling import random_pure_state

H, V = Polarization.H, Polarization.V
HALF = 1 / math.sqrt(2)
QUARTER_ROOT = HALF / 2


def single(path: str, polarization: Polarization, oam: int = 0, *, paths: tuple[str, ...] | None = None) -> PhotonicState:
    return PhotonicState({(mode(path, polarization, oam),): 1}, paths=paths)


def random_x(rng: np.random.Generator) -> np.ndarray:
    return random_pure_state(rng, (2, 2)).amplitudes


def test_half_wave_plate_on_horizontal() -> None:
    state = apply(single('a', H), HalfWavePlate('a'))

    assert state.amplitude(mode('a', H)) == pytest.approx(HALF)
    assert state.amplitude(mode('a', V)) == pytest.approx(HALF)


def test_half_wave_plate_on_vertical() -> None:
    state = apply(single('a', V), HalfWavePlate('a'))

    assert state.amplitude(mode('a', H)) == pytest.approx(HALF)
    assert state.amplitude(mode('a', V)) == pytest.approx(-HALF)


def test_polarizing_beam_splitter_swaps_vertical() -> None:
    state = apply(single('c', V, paths=('a', 'c')), PolarizingBeamSplitter('a', 'c'))
    assert state.amplitude(mode('a', V)) == pytest.approx(1)

    state = apply(single('c', H, paths=('a', 'c')), PolarizingBeamSplitter('a', 'c'))
    assert state.amplitude(mode('c', H)) == pytest.approx(1)


def test_hologram_adds_oam() -> None:
    state = PhotonicState({(mode('b2', H),): 0.6, (mode('b1', V),): 0.8})
    state = apply(state, Hologram('b2', 2))

    assert state.amplitude(mode('b2', H, 2)) == pytest.approx(0.6)
    assert state.amplitude(mode('b1', V)) == pytest.approx(0.8)


def test_beam_splitter_renames_paths() -> None:
    state = apply(single('b2', H, paths=('b1', 'b2')), BeamSplitter5050(('b1', 'b2'), ('c1', 'c2')))

    assert state.paths == frozenset({'c1', 'c2'})
    assert state.amplitude(mode('c1', H)) == pytest.approx(HALF)
    assert state.amplitude(mode('c2', H)) == pytest.approx(-HALF)


def test_apply_rejects_unknown_path() -> None:
    with pytest.raises(UnknownPathError):
        apply(single('a', H), HalfWavePlate('z'))


def test_photonic_state_rejects_overnormalised_terms() -> None:
    with pytest.raises(NotNormalizedError):
        PhotonicState({(mode('a', H),): 1, (mode('a', V),): 1})


type ModeImage = dict[ModeLabel, float]


def image(*terms: tuple[float, str]) -> ModeImage:
    """Linear combination of modes written as 'Hb1', 'Va', ..."""
    return {mode(label[1:], label[0]): coefficient for coefficient, label in terms}


# Image of every input mode after each element of the joining circuit; unchanged images are carried over.
JOINING_LEDGER: list[tuple[str, dict[str, ModeImage]]] = [
    ('HWP_a0', {'Ha': image((HALF, 'Ha'), (HALF, 'Va'))}),
    ('PBS_ac', {
        'Vc': image((1, 'Va')),
        'Ha': image((HALF, 'Ha'), (HALF, 'Vc')),
    }),
    ('PBS_b1b2', {'Vb': image((1, 'Vb2'))}),
    ('HWP_a1', {
        'Vc': image((HALF, 'Ha'), (-HALF, 'Va')),
        'Ha': image((0.5, 'Ha'), (0.5, 'Va'), (HALF, 'Vc')),
    }),
    ('HWP_c1', {
        'Hc': image((HALF, 'Hc'), (HALF, 'Vc')),
        'Ha': image((0.5, 'Ha'), (0.5, 'Va'), (0.5, 'Hc'), (-0.5, 'Vc')),
    }),
    ('HWP_b1_1', {'Hb': image((HALF, 'Hb1'), (HALF, 'Vb1'))}),
    ('HWP_b2_1', {'Vb': image((HALF, 'Hb2'), (-HALF, 'Vb2'))}),
    ('PBS_ab1', {
        'Hb': image((HALF, 'Hb1'), (HALF, 'Va')),
        'Vc': image((HALF, 'Ha'), (-HALF, 'Vb1')),
        'Ha': image((0.5, 'Ha'), (0.5, 'Vb1'), (0.5, 'Hc'), (-0.5, 'Vc')),
    }),
    ('PBS_cb2', {
        'Hc': image((HALF, 'Hc'), (HALF, 'Vb2')),
        'Vb': image((HALF, 'Hb2'), (-HALF, 'Vc')),
        'Ha': image((0.5, 'Ha'), (0.5, 'Vb1'), (0.5, 'Hc'), (-0.5, 'Vb2')),
    }),
    ('HWP_a2', {
        'Hb': image((HALF, 'Hb1'), (0.5, 'Ha'), (-0.5, 'Va')),
        'Vc': image((0.5, 'Ha'), (0.5, 'Va'), (-HALF, 'Vb1')),
        'Ha': image((QUARTER_ROOT, 'Ha'), (QUARTER_ROOT, 'Va'), (0.5, 'Vb1'), (0.5, 'Hc'), (-0.5, 'Vb2')),
    }),
    ('HWP_c2', {
        'Hc': image((0.5, 'Hc'), (-0.5, 'Vc'), (HALF, 'Vb2')),
        'Vb': image((HALF, 'Hb2'), (0.5, 'Hc'), (0.5, 'Vc')),
        'Ha': image(
            (QUARTER_ROOT, 'Ha'), (QUARTER_ROOT, 'Va'), (0.5, 'Vb1'),
            (QUARTER_ROOT, 'Hc'), (-QUARTER_ROOT, 'Vc'), (-0.5, 'Vb2'),
        ),
    }),
    ('HWP_b1_2', {
        'Hb': image((0.5, 'Hb1'), (0.5, 'Vb1'), (0.5, 'Ha'), (-0.5, 'Va')),
        'Vc': image((0.5, 'Ha'), (0.5, 'Va'), (-0.5, 'Hb1'), (0.5, 'Vb1')),
        'Ha': image(
            (QUARTER_ROOT, 'Ha'), (QUARTER_ROOT, 'Va'), (QUARTER_ROOT, 'Hb1'), (-QUARTER_ROOT, 'Vb1'),
            (QUARTER_ROOT, 'Hc'), (-QUARTER_ROOT, 'Vc'), (-0.5, 'Vb2'),
        ),
    }),
    ('HWP_b2_2', {
        'Hc': image((0.5, 'Hc'), (-0.5, 'Vc'), (0.5, 'Hb2'), (-0.5, 'Vb2')),
        'Vb': image((0.5, 'Hb2'), (0.5, 'Vb2'), (0.5, 'Hc'), (0.5, 'Vc')),
        'Ha': image(
            (QUARTER_ROOT, 'Ha'), (QUARTER_ROOT, 'Va'), (QUARTER_ROOT, 'Hb1'), (-QUARTER_ROOT, 'Vb1'),
            (QUARTER_ROOT, 'Hc'), (-QUARTER_ROOT, 'Vc'), (-QUARTER_ROOT, 'Hb2'), (QUARTER_ROOT, 'Vb2'),
        ),
    }),
]

# photon b and photon c modes for x0..x3
JOINING_INPUT_MODES = (('Hb', 'Hc'), ('Hb', 'Vc'), ('Vb', 'Hc'), ('Vb', 'Vc'))


def ledger_images(step: int) -> dict[str, ModeImage]:
    images = {
        'Hb': image((1, 'Hb1')),
        'Vb': image((1, 'Vb1')),
        'Hc': image((1, 'Hc')),
        'Vc': image((1, 'Vc')),
        'Ha': image((1, 'Ha')),
    }
    for _, changes in JOINING_LEDGER[:step]:
        images |= changes
    return images


def expand_ledger(images: dict[str, ModeImage], x: np.ndarray) -> dict[tuple[ModeLabel, ...], complex]:
    """Multiply out sum_k x_k b_k c_k H_a in creation operators, as normalised Fock amplitudes."""
    operators: defaultdict[tuple[ModeLabel, ...], complex] = defaultdict(complex)
    for amplitude, (photon_b, photon_c) in zip(x, JOINING_INPUT_MODES, strict=True):
        factors = (images[photon_b].items(), images[photon_c].items(), images['Ha'].items())
        for choice in itertools.product(*factors):
            labels = tuple(sorted(label for label, _ in choice))
            operators[labels] += amplitude * math.prod(coefficient for _, coefficient in choice)

    return {
        labels: coefficient * math.sqrt(math.prod(math.factorial(n) for n in Counter(labels).values()))
        for labels, coefficient in operators.items()
    }


@pytest.mark.parametrize(('step', 'name'), [(index + 1, name) for index, (name, _) in enumerate(JOINING_LEDGER)])
def test_joining_ledger(step: int, name: str, rng: np.random.Generator) -> None:
    for _ in range(5):
        x = random_x(rng)
        traced = trace_quantum_join(x)[step]
        expected = expand_ledger(ledger_images(step), x)

        assert traced.name == name
        for labels in expected.keys() | traced.state.terms.keys():
            assert traced.state.amplitude(*labels) == pytest.approx(expected.get(labels, 0), abs=1e-10), labels


def test_joining_ledger_covers_every_unitary_element() -> None:
    assert [name for name, _ in JOINING_LEDGER] == [element.name for element in joining_circuit()[:-2]]


def test_heralded_component_before_detection(rng: np.random.Generator) -> None:
    x = random_x(rng)
    state = trace_quantum_join(x)[len(JOINING_LEDGER)].state
    herald = (mode('a', H), mode('c', H))
    outputs = (mode('b1', H), mode('b1', V), mode('b2', H), mode('b2', V))

    for amplitude, label in zip(x, outputs, strict=True):
        assert state.amplitude(*herald, label) == pytest.approx(amplitude / (4 * math.sqrt(2)), abs=1e-12)


def test_ledger_bosonic_amplitudes() -> None:
    step = trace_quantum_join([0, 1, 0, 0])[5]

    assert step.name == 'HWP_c1'
    b1 = mode('b1', H)
    expected = {
        (mode('a', H), mode('a', H), b1): 0.5,
        (mode('a', V), mode('a', V), b1): -0.5,
        (mode('c', H), mode('a', H), b1): HALF / 2,
        (mode('c', H), mode('a', V), b1): -HALF / 2,
        (mode('c', V), mode('a', H), b1): -HALF / 2,
        (mode('c', V), mode('a', V), b1): HALF / 2,
    }
    assert len(step.state.terms) == len(expected)
    for labels, amplitude in expected.items():
        assert step.state.amplitude(*labels) == pytest.approx(amplitude, abs=1e-10)


def test_unitary_steps_preserve_the_norm(rng: np.random.Generator) -> None:
    steps = trace_quantum_join(random_x(rng))

    assert [step.name for step in steps[1:-1]] == [element.name for element in joining_circuit()[:-2]]
    for step in steps[:-1]:
        assert step.probability == pytest.approx(1, abs=1e-12)


def test_quantum_join_probability_and_fidelity(rng: np.random.Generator) -> None:
    for _ in range(100):
        x = random_x(rng)
        joined, probability = quantum_join(x)

        assert probability == pytest.approx(1 / 32, abs=1e-12)
        assert joined.fidelity(joined_target(x)) >= 1 - 1e-10
        assert joined.paths == frozenset({'b1', 'b2'})


@pytest.mark.parametrize(
    ('x', 'label'),
    [
        ([1, 0, 0, 0], mode('b1', H)),
        ([0, 0, 0, 1], mode('b2', V)),
    ],
)
def test_quantum_join_basis_inputs(x: list[int], label: object) -> None:
    joined, probability = quantum_join(x)

    assert probability == pytest.approx(1 / 32, abs=1e-12)
    assert abs(joined.amplitude(label)) == pytest.approx(1, abs=1e-12)  # type:ignore[arg-type]


def test_quantum_join_uniform_input() -> None:
    joined, probability = quantum_join([0.5, 0.5, 0.5, 0.5])

    assert probability == pytest.approx(1 / 32, abs=1e-12)
    for key in joined.terms:
        assert abs(joined.terms[key]) == pytest.approx(0.5, abs=1e-12)


def test_quantum_join_rejects_unnormalized_input() -> None:
    with pytest.raises(NotNormalizedError):
        quantum_join([0.9, 0, 0, 0])


@pytest.mark.parametrize(
    ('on_a', 'on_c', 'order'),
    [
        (H, H, [('b1', H), ('b1', V), ('b2', H), ('b2', V)]),
        (H, V, [('b1', H), ('b1', V), ('b2', V), ('b2', H)]),
        (V, H, [('b1', V), ('b1', H), ('b2', H), ('b2', V)]),
        (V, V, [('b1', V), ('b1', H), ('b2', V), ('b2', H)]),
    ],
)
def test_every_detection_branch(on_a: Polarization, on_c: Polarization, order: list[tuple[str, Polarization]], rng: np.random.Generator) -> None:
    x = random_x(rng)
    state, probability = joining_branches(x)[on_a, on_c]

    assert probability == pytest.approx(1 / 32, abs=1e-12)
    for amplitude, (path, polarization) in zip(x, order, strict=True):
        assert abs(state.amplitude(mode(path, polarization))) == pytest.approx(abs(amplitude), abs=1e-10)


def test_post_select_certain_branch() -> None:
    state = PhotonicState({(mode('a', H), mode('b', V)): 1})
    conditional, probability = post_select(state, [('a', 'H')])

    assert probability == pytest.approx(1)
    assert conditional.amplitude(mode('b', V)) == pytest.approx(1)


def test_post_select_keeps_the_weight_of_a_subnormalised_branch() -> None:
    state = PhotonicState({(mode('a', H), mode('b', V)): 0.5})
    conditional, probability = post_select(state, [('a', 'H')])

    assert probability == pytest.approx(0.25)
    assert conditional.amplitude(mode('b', V)) == pytest.approx(1)


def test_post_select_impossible_branch_returns_empty_marker() -> None:
    state = PhotonicState({(mode('a', H), mode('b', V)): 1})
    conditional, probability = post_select(state, [('a', 'V')])

    assert probability == 0
    assert conditional.is_empty
    assert str(conditional) == '0'


def test_post_select_unresolved_detector_is_rejected() -> None:
    state = PhotonicState({
        (mode('a', H), mode('b', H)): HALF,
        (mode('a', V), mode('b', V)): HALF,
    })
    with pytest.raises(MixedConditionalError):
        post_select(state, [Detector('a')])


def test_post_select_rejects_unknown_path() -> None:
    with pytest.raises(UnknownPathError):
        post_select(single('a', H), [('z', 'H')])


def test_oam_encoding_signs(rng: np.random.Generator) -> None:
    x = random_x(rng)
    joined = joined_target(x)

    for output_path, signs in [('c1', [1, 1, 1, 1]), ('c2', [1, 1, -1, -1])]:
        encoded, probability = oam_encode(joined, 3, output_path)

        assert probability == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(encoded.amplitudes, x * np.array(signs), atol=1e-12)
        assert sign_correct(encoded, output_path).fidelity(PureState(x, (2, 2))) == pytest.approx(1, abs=1e-12)


def test_oam_encoding_of_basis_photons() -> None:
    encoded, probability = oam_encode(single('b1', H, paths=('b1', 'b2')))
    assert probability == pytest.approx(0.5)
    np.testing.assert_allclose(encoded.amplitudes, [1, 0, 0, 0], atol=1e-12)

    encoded, probability = oam_encode(single('b2', H, paths=('b1', 'b2')), 1, 'c2')
    assert probability == pytest.approx(0.5)
    np.testing.assert_allclose(encoded.amplitudes, [0, 0, -1, 0], atol=1e-12)


def test_oam_encoding_rejects_collisions() -> None:
    with pytest.raises(BasisCollisionError):
        oam_encode(single('b1', H), 0)
    with pytest.raises(BasisCollisionError):
        oam_encode(single('b1', H, 1), 1)


def test_encode_optically_keeps_the_state() -> None:
    bell = maximally_entangled_state(2)
    assert encode_optically(bell).fidelity(bell) == pytest.approx(1, abs=1e-10)


def test_circuit_records_round_trip(rng: np.random.Generator) -> None:
    circuit = joining_circuit()
    parsed = parse_circuit([element.to_record() for element in circuit])
    x = random_x(rng)

    assert [element.to_record() for element in parsed] == [element.to_record() for element in circuit]
    assert trace_quantum_join(x, parsed)[-1].probability == pytest.approx(1 / 32, abs=1e-12)


def test_parse_circuit_requires_element_fields() -> None:
    with pytest.raises(ConfigError):
        parse_circuit([{'kind': 'HWP'}])
    with pytest.raises(ConfigError):
        parse_circuit([{'kind': 'PBS', 'paths': ['a']}])


def test_unknown_circuit_preset() -> None:
    assert len(circuit_preset('quantum-join-fig4')) == len(joining_circuit())
    with pytest.raises(UnknownPresetError):
        circuit_preset('fig9')
