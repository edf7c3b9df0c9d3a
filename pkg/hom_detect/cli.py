import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from hom_detect.codec import (
    decode_vector,
    density_from_record,
    encode_matrix,
    encode_vector,
    ensemble_from_records,
    load_document,
    make_report,
    product_term_records,
    product_terms_from_records,
    witness_from_record,
)
from hom_detect.command_handler import (
    CommandHandler,
    CommandOptions,
    CommandResult,
    OutputFormat,
)
from hom_detect.constants import (
    BISECTION_TOLERANCE,
    DECOMPOSITION_TOLERANCE,
    JOINING_SUCCESS_PROBABILITY,
    NORM_TOLERANCE,
    SPECTRAL_TOLERANCE,
)
from hom_detect.errors import (
    EXIT_SUCCESS,
    BaseError,
    ConfigError,
    ConsistencyError,
    handle_error,
)
from hom_detect.experiment import (
    ExperimentConfig,
    ExperimentRunner,
    Pipeline,
    SimulationReport,
    estimate,
    merge_counts,
)
from hom_detect.hom import coincidence_mixed
from hom_detect.optics import (
    circuit_preset,
    joined_target,
    oam_encode,
    parse_circuit,
    sign_correct,
    trace_quantum_join,
    two_qubit_amplitudes,
)
from hom_detect.presets import preset_document
from hom_detect.quantum import PureState, ensemble_of, overlap, require_same_dims
from hom_detect.sampling import random_pure_state
from hom_detect.schema import (
    CircuitReportSchema,
    CircuitStepSchema,
    CircuitVerifyConfigSchema,
    ExactConfigSchema,
    ExactReportSchema,
    SimulateConfigSchema,
    WitnessConfigSchema,
    WitnessReportSchema,
)
from hom_detect.utils import setup_rich_logging
from hom_detect.witness import (
    SeparabilityMode,
    approximate,
    bisect_p_star,
    find_separable_decomposition,
    locc_expectation,
    reconstruct_expectation,
    separable_approximate,
)

logger = logging.getLogger(__name__)

handler = CommandHandler()


def _cross_check(name: str, value: float, reference: float, tolerance: float) -> None:
    if abs(value - reference) > tolerance:
        raise ConsistencyError(
            details={
                'check': name,
                'value': value,
                'reference': reference,
                'tolerance': tolerance,
            },
        )


@handler.command('witness')
def cmd_witness(
    config: WitnessConfigSchema,
    options: CommandOptions,
) -> CommandResult:
    witness = witness_from_record(config)
    aew = approximate(witness)

    p_star_bisection = bisect_p_star(witness)
    _cross_check('p_star bisection', p_star_bisection, aew.p_star, BISECTION_TOLERANCE)

    saew = separable_approximate(witness)

    decomposition: dict[str, Any] = {}
    if config.decompose and saew.mode is SeparabilityMode.EXACT:
        settings = config.decomposition_settings
        outcome = find_separable_decomposition(
            saew,
            ensemble_size=settings.ensemble_size,
            seed=options.seed if options.seed is not None else settings.seed,
            restarts=settings.restarts,
        )
        decomposition = {
            'decomposition_found': outcome.found,
            'decomposition_residual': outcome.residual,
            'decomposition': product_term_records(outcome.saew.decomposition) if outcome.saew.decomposition else None,
        }
    elif config.decompose:
        logger.warning(f'Skipping the separable decomposition, separability is only bounded ({saew.mode})')

    report = make_report(
        WitnessReportSchema,
        dims=list(witness.dims),
        lambda_min=witness.lambda_min,
        p_star=aew.p_star,
        p_star_bisection=p_star_bisection,
        matrix=encode_matrix(aew.matrix.matrix),
        p_s=saew.p_s,
        mode=str(saew.mode),
        **decomposition,
    )
    return CommandResult('witness', report=report)


@handler.command('exact')
def cmd_exact(
    config: ExactConfigSchema,
    options: CommandOptions,
) -> CommandResult:
    rho = density_from_record(config.rho)
    witness = witness_from_record(config.witness)
    require_same_dims(rho.dims, witness.dims)
    d = witness.local_dimension

    aew = approximate(witness)
    saew = separable_approximate(witness)

    direct = witness.expectation(rho)
    fidelity = overlap(rho, aew.matrix)
    reconstructed = reconstruct_expectation(fidelity, aew.p_star, d)
    p_coincidence = coincidence_mixed(rho, aew.matrix).p_coincidence

    _cross_check('reconstructed expectation', reconstructed, direct, SPECTRAL_TOLERANCE)
    _cross_check('coincidence vs overlap', 1 - 2 * p_coincidence, fidelity, NORM_TOLERANCE)

    if config.decomposition is not None:
        saew = saew.with_decomposition(product_terms_from_records(config.decomposition))
    elif config.find_decomposition and saew.mode is SeparabilityMode.EXACT:
        settings = config.decomposition_settings
        saew = find_separable_decomposition(
            saew,
            ensemble_size=settings.ensemble_size,
            seed=options.seed if options.seed is not None else settings.seed,
            restarts=settings.restarts,
        ).saew

    locc: dict[str, float] = {}
    if saew.decomposition is not None:
        value = locc_expectation(saew, rho)
        locc_reconstructed = reconstruct_expectation(value, saew.p_s, d, check_range=False)
        _cross_check(
            'locc expectation',
            locc_reconstructed,
            direct,
            witness.dimension * DECOMPOSITION_TOLERANCE / (1 - saew.p_s),
        )
        locc = {'locc_expectation': value, 'locc_reconstructed_expectation': locc_reconstructed}

    report = make_report(
        ExactReportSchema,
        witness_expectation=direct,
        overlap=fidelity,
        reconstructed_expectation=reconstructed,
        p_coincidence=p_coincidence,
        p_star=aew.p_star,
        p_s=saew.p_s,
        **locc,
    )
    return CommandResult('exact', report=report)


@handler.command('simulate')
def cmd_simulate(
    config: SimulateConfigSchema,
    options: CommandOptions,
) -> CommandResult:
    seed = options.seed if options.seed is not None else config.seed
    if seed is None:
        raise ConfigError('seed', 'required for simulate')

    witness = witness_from_record(config.witness)
    d = witness.local_dimension
    aew = approximate(witness)

    if config.rho is not None:
        state_ensemble = ensemble_of(density_from_record(config.rho))
    else:
        state_ensemble = ensemble_from_records(config.rho_ensemble or [])

    experiment = ExperimentConfig(
        n_copies=config.n_copies,
        seed=seed,
        witness=aew,
        state_ensemble=state_ensemble,
        aew_ensemble=ensemble_of(aew.matrix),
        pipeline=Pipeline(config.pipeline),
        variance_reduced=config.variance_reduced,
        optical_encoding=config.optical_encoding,
        oam_q=config.oam_q,
    )
    blocks = ExperimentRunner(experiment, threads=options.threads or config.threads).run_blocks()
    counts = merge_counts(blocks)

    report = make_report(
        SimulationReport,
        config=experiment.describe(),
        counts=counts,
        report=estimate(counts, aew.p_star, d, experiment.pipeline),
    )
    return CommandResult('simulate', report=report, rows=blocks)


@handler.command('circuit-verify')
def cmd_circuit_verify(
    config: CircuitVerifyConfigSchema,
    options: CommandOptions,
) -> CommandResult:
    if config.x is not None:
        x = two_qubit_amplitudes(decode_vector(config.x))
    else:
        seed = options.seed if options.seed is not None else config.seed
        if seed is None:
            raise ConfigError('x', 'give x or a seed to draw a random one')
        x = random_pure_state(np.random.default_rng(seed), (2, 2)).amplitudes

    circuit = circuit_preset(config.circuit) if isinstance(config.circuit, str) else parse_circuit(config.circuit)
    steps = trace_quantum_join(x, circuit)
    joined, probability = steps[-1].state, steps[-1].probability
    fidelity = joined.fidelity(joined_target(x))

    _cross_check('joining probability', probability, JOINING_SUCCESS_PROBABILITY, NORM_TOLERANCE)
    _cross_check('joining fidelity', fidelity, 1.0, SPECTRAL_TOLERANCE)

    encoded, branch_probability = oam_encode(joined, config.q, config.output_path)
    encoded_fidelity = sign_correct(encoded, config.output_path).fidelity(PureState(x, (2, 2)))
    _cross_check('oam branch probability', branch_probability, 0.5, NORM_TOLERANCE)
    _cross_check('oam fidelity', encoded_fidelity, 1.0, SPECTRAL_TOLERANCE)

    report = make_report(
        CircuitReportSchema,
        x=encode_vector(x),
        probability=probability,
        fidelity=fidelity,
        q=config.q,
        output_path=config.output_path,
        branch_probability=branch_probability,
        encoded_fidelity=encoded_fidelity,
        joined=str(joined),
        steps=[
            CircuitStepSchema(name=step.name, probability=step.probability, terms=len(step.state.terms))
            for step in steps
        ],
    )
    return CommandResult('circuit-verify', report=report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='hom-detect',
        description='Entanglement detection through two-photon interference.',
    )
    parser.add_argument('command', choices=sorted(handler.commands))

    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', type=Path, help='JSON configuration document')
    source.add_argument('--preset', help='built-in configuration, e.g. bell-witness or quantum-join-fig4')

    parser.add_argument('--seed', type=int, help='overrides the seed of the configuration')
    parser.add_argument('--out', type=Path, help='write the report here instead of stdout')
    parser.add_argument(
        '--format',
        dest='output_format',
        choices=[output_format.value for output_format in OutputFormat],
        default=OutputFormat.JSON.value,
    )
    parser.add_argument('--threads', type=int, help='worker threads for simulate')
    parser.add_argument('-v', '--verbose', action='store_true')

    return parser


def load_input(args: argparse.Namespace) -> dict[str, Any]:
    if args.preset:
        return preset_document(args.preset, args.command)

    try:
        data = args.config.read_bytes()
    except OSError as error:
        raise ConfigError('config', f'cannot read {args.config}: {error.strerror}') from error

    return load_document(data)


def _fail(error: BaseError) -> int:
    handle_error(logger, error, logging.DEBUG)
    return error.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_rich_logging(logging.DEBUG if args.verbose else logging.INFO)

    options = CommandOptions(
        seed=args.seed,
        output_format=OutputFormat(args.output_format),
        threads=args.threads,
    )

    try:
        document = load_input(args)
    except BaseError as error:
        return _fail(error)

    result = handler.handle(args.command, document, options)
    if result.error is not None:
        return _fail(result.error)

    try:
        payload = result.dump(options.output_format)
    except BaseError as error:
        return _fail(error)

    if args.out:
        args.out.write_bytes(payload)
        logger.info(f'Report written to {args.out}')
    else:
        sys.stdout.buffer.write(payload + b'\n')
        sys.stdout.flush()

    return EXIT_SUCCESS


if __name__ == '__main__':
    sys.exit(main())
