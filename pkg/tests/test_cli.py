import math
from pathlib import Path
from typing import Any

import orjson
import pytest

from hom_detect.cli import handler, main
from hom_detect.command_handler import CommandOptions
from hom_detect.errors import EXIT_CONSISTENCY, EXIT_SUCCESS, EXIT_VALIDATION
from hom_detect.presets import BELL_STATE, PRODUCT_STATE

IDENTITY_WITNESS = {
    'dims': [2, 2],
    'matrix': [[[0.25 if row == column else 0.0, 0.0] for column in range(4)] for row in range(4)],
}


def write_config(tmp_path: Path, document: Any) -> Path:  # noqa:ANN401
    path = tmp_path / 'config.json'
    path.write_bytes(document if isinstance(document, bytes) else orjson.dumps(document))
    return path


def run(tmp_path: Path, *args: str) -> tuple[int, dict[str, Any] | None]:
    out = tmp_path / 'report.json'
    out.unlink(missing_ok=True)
    code = main([*args, '--out', str(out)])
    return code, orjson.loads(out.read_bytes()) if out.exists() else None


def test_witness_preset(tmp_path: Path) -> None:
    code, report = run(tmp_path, 'witness', '--preset', 'bell-witness')

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['p_star'] == pytest.approx(2 / 3, abs=1e-12)
    assert report['p_s'] == pytest.approx(2 / 3, abs=1e-8)
    assert report['lambda_min'] == pytest.approx(-0.5)
    assert report['mode'] == 'exact'
    assert report['decomposition_found'] is True
    assert report['decomposition_residual'] < 1e-6


def test_identity_is_not_a_witness(tmp_path: Path) -> None:
    code, report = run(tmp_path, 'witness', '--config', str(write_config(tmp_path, IDENTITY_WITNESS)))

    assert code == EXIT_VALIDATION
    assert report is None


def test_malformed_json(tmp_path: Path) -> None:
    code, _ = run(tmp_path, 'witness', '--config', str(write_config(tmp_path, b'{"dims": [2, 2]')))
    assert code == EXIT_VALIDATION


def test_missing_config_file(tmp_path: Path) -> None:
    code, _ = run(tmp_path, 'witness', '--config', str(tmp_path / 'absent.json'))
    assert code == EXIT_VALIDATION


def test_schema_violation(tmp_path: Path) -> None:
    code, _ = run(tmp_path, 'witness', '--config', str(write_config(tmp_path, {'dims': [2, 2]})))
    assert code == EXIT_VALIDATION


def test_preset_without_the_command(tmp_path: Path) -> None:
    code, _ = run(tmp_path, 'witness', '--preset', 'maximally-mixed')
    assert code == EXIT_VALIDATION


@pytest.mark.parametrize(
    ('preset', 'expectation', 'p_coincidence'),
    [
        ('bell-witness', -0.5, 0.5),
        ('maximally-mixed', 0.25, 3 / 8),
        ('product-boundary', 0.0, 5 / 12),
    ],
)
def test_exact_presets(preset: str, expectation: float, p_coincidence: float, tmp_path: Path) -> None:
    code, report = run(tmp_path, 'exact', '--preset', preset)

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['witness_expectation'] == pytest.approx(expectation, abs=1e-12)
    assert report['reconstructed_expectation'] == pytest.approx(expectation, abs=1e-10)
    assert report['p_coincidence'] == pytest.approx(p_coincidence, abs=1e-12)


def test_exact_locc_value_for_boundary_state(tmp_path: Path) -> None:
    _, report = run(tmp_path, 'exact', '--preset', 'product-boundary')

    assert report is not None
    assert report['locc_expectation'] == pytest.approx(1 / 6, abs=1e-6)
    assert report['locc_reconstructed_expectation'] == pytest.approx(0, abs=1e-5)


def test_exact_dimension_mismatch(tmp_path: Path) -> None:
    qutrit = {'dims': [3, 3], 'amplitudes': [[1 / math.sqrt(3), 0.0], 0, 0, 0, [1 / math.sqrt(3), 0.0], 0, 0, 0, 1 / math.sqrt(3)]}
    code, _ = run(tmp_path, 'exact', '--config', str(write_config(tmp_path, {'rho': qutrit, 'witness': BELL_STATE})))
    assert code == EXIT_VALIDATION


QUBIT_QUTRIT = {'dims': [2, 3], 'amplitudes': [1 / math.sqrt(2), 0, 0, 0, 1 / math.sqrt(2), 0]}


@pytest.mark.parametrize(
    ('command', 'extra'),
    [('exact', {}), ('simulate', {'n_copies': 10, 'seed': 1})],
)
def test_unequal_local_dimensions_are_rejected(command: str, extra: dict[str, Any]) -> None:
    document = {'rho': QUBIT_QUTRIT, 'witness': QUBIT_QUTRIT, **extra}
    result = handler.handle(command, document, CommandOptions())

    assert result.exit_code == EXIT_VALIDATION
    assert result.error is not None
    assert result.error.error_code == 'ConfigError'
    assert result.error.details == {'dims': 'needs equal local dimensions [d, d], got [2, 3]'}


def test_wrong_decomposition_is_inconsistent(tmp_path: Path) -> None:
    zero = {'dims': [2], 'amplitudes': [1, 0]}
    document = {
        'rho': PRODUCT_STATE,
        'witness': BELL_STATE,
        'decomposition': [{'weight': 1.0, 'a': zero, 'b': zero}],
    }
    code, _ = run(tmp_path, 'exact', '--config', str(write_config(tmp_path, document)))
    assert code == EXIT_CONSISTENCY


def test_circuit_verify_preset(tmp_path: Path) -> None:
    code, report = run(tmp_path, 'circuit-verify', '--preset', 'quantum-join-fig4')

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['probability'] == pytest.approx(1 / 32, abs=1e-12)
    assert report['fidelity'] == pytest.approx(1, abs=1e-10)
    assert report['branch_probability'] == pytest.approx(0.5, abs=1e-12)
    assert report['encoded_fidelity'] == pytest.approx(1, abs=1e-10)
    assert [step['name'] for step in report['steps']][:3] == ['input', 'HWP_a0', 'PBS_ac']
    assert len(report['steps']) == 15


def test_circuit_verify_basis_input(tmp_path: Path) -> None:
    config = write_config(tmp_path, {'x': [1, 0, 0, 0], 'output_path': 'c2', 'q': 2})
    code, report = run(tmp_path, 'circuit-verify', '--config', str(config))

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['probability'] == pytest.approx(1 / 32, abs=1e-12)


def test_circuit_verify_seeded_random_input(tmp_path: Path) -> None:
    config = write_config(tmp_path, {})
    first = run(tmp_path, 'circuit-verify', '--config', str(config), '--seed', '12')
    second = run(tmp_path, 'circuit-verify', '--config', str(config), '--seed', '12')

    assert first[0] == EXIT_SUCCESS
    assert first == second


def test_circuit_verify_needs_x_or_seed(tmp_path: Path) -> None:
    code, _ = run(tmp_path, 'circuit-verify', '--config', str(write_config(tmp_path, {})))
    assert code == EXIT_VALIDATION


def test_circuit_verify_unnormalized_input(tmp_path: Path) -> None:
    code, _ = run(tmp_path, 'circuit-verify', '--config', str(write_config(tmp_path, {'x': [0.9, 0, 0, 0]})))
    assert code == EXIT_VALIDATION


def simulate_config(n_copies: int, rho: dict[str, Any] = BELL_STATE, **extra: Any) -> dict[str, Any]:  # noqa:ANN401
    return {'n_copies': n_copies, 'seed': 2024, 'rho': rho, 'witness': BELL_STATE, **extra}


def test_simulate_small_sample(tmp_path: Path) -> None:
    config = write_config(tmp_path, simulate_config(10))
    code, report = run(tmp_path, 'simulate', '--config', str(config), '--threads', '1')

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['counts']['n_used'] + report['counts']['n_discarded'] == 10
    assert report['report']['n_copies'] == 10
    assert math.isfinite(report['report']['z_score'])


def test_simulate_is_byte_identical(tmp_path: Path) -> None:
    config = write_config(tmp_path, simulate_config(100_000))
    first, second = tmp_path / 'first.json', tmp_path / 'second.json'

    assert main(['simulate', '--config', str(config), '--threads', '1', '--out', str(first)]) == EXIT_SUCCESS
    assert main(['simulate', '--config', str(config), '--threads', '4', '--out', str(second)]) == EXIT_SUCCESS
    assert first.read_bytes() == second.read_bytes()


def test_simulate_seed_flag_overrides_config(tmp_path: Path) -> None:
    config = write_config(tmp_path, simulate_config(100_000))
    _, default = run(tmp_path, 'simulate', '--config', str(config))
    _, overridden = run(tmp_path, 'simulate', '--config', str(config), '--seed', '7')

    assert default is not None
    assert overridden is not None
    assert overridden['config']['seed'] == 7
    assert default['counts'] != overridden['counts']


def test_simulate_requires_a_seed(tmp_path: Path) -> None:
    document = simulate_config(100)
    del document['seed']
    code, _ = run(tmp_path, 'simulate', '--config', str(write_config(tmp_path, document)))
    assert code == EXIT_VALIDATION


def test_simulate_decision_is_in_the_payload(tmp_path: Path) -> None:
    config = write_config(tmp_path, simulate_config(200_000, PRODUCT_STATE, variance_reduced=True))
    code, report = run(tmp_path, 'simulate', '--config', str(config))

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['report']['decision'] in {'entangled', 'not_detected'}


def test_simulate_bell_preset(tmp_path: Path) -> None:
    code, report = run(tmp_path, 'simulate', '--preset', 'bell-witness')

    assert code == EXIT_SUCCESS
    assert report is not None
    assert report['report']['decision'] == 'entangled'
    assert report['counts']['n_used'] + report['counts']['n_discarded'] == 1_000_000


def test_simulate_csv(tmp_path: Path) -> None:
    config = write_config(tmp_path, simulate_config(100_000))
    out = tmp_path / 'blocks.csv'

    assert main(['simulate', '--config', str(config), '--format', 'csv', '--out', str(out)]) == EXIT_SUCCESS
    lines = out.read_text().splitlines()
    assert lines[0] == 'n_used,n_c_upper,n_c_lower,n_discarded,block'
    assert len(lines) == 3


def test_csv_is_only_for_simulate(tmp_path: Path) -> None:
    out = tmp_path / 'exact.csv'
    assert main(['exact', '--preset', 'bell-witness', '--format', 'csv', '--out', str(out)]) == EXIT_VALIDATION
    assert not out.exists()


def test_report_goes_to_stdout(capsysbinary: pytest.CaptureFixture[bytes]) -> None:
    assert main(['circuit-verify', '--preset', 'quantum-join-fig4']) == EXIT_SUCCESS

    report = orjson.loads(capsysbinary.readouterr().out)
    assert report['probability'] == pytest.approx(1 / 32, abs=1e-12)


def test_unknown_command_is_rejected_by_the_parser() -> None:
    with pytest.raises(SystemExit):
        main(['teleport', '--preset', 'bell-witness'])
