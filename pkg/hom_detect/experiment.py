"""Monte-Carlo run of the interferometric witness test and its estimator.

Every trial draws one member of the witness-state ensemble and one member of
the tested-state ensemble, routes both photons through a balanced splitter
each, and records a coincidence when both land in the same interferometer
and leave the final 50:50 splitter through different ports.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from enum import StrEnum
from functools import cached_property
from typing import Any, NamedTuple, Self

import numpy as np
from pydantic import Field, model_validator

from hom_detect.constants import (
    DECISION_GUARD,
    THREADS_ENV_VAR,
    TRIAL_BLOCK_SIZE,
)
from hom_detect.errors import ConfigError, DimensionMismatchError, ValidationError
from hom_detect.hom import coincidence_mixed, coincidence_pure
from hom_detect.optics import encode_optically
from hom_detect.quantum import Ensemble
from hom_detect.sampling import block_generator
from hom_detect.schema import BaseSchema
from hom_detect.types import RealVector
from hom_detect.utils import time_it
from hom_detect.witness import ApproxWitness, reconstruct_expectation

logger = logging.getLogger(__name__)

UPPER, LOWER = 0, 1


class Pipeline(StrEnum):
    TWO_INTERFEROMETERS = 'two_interferometers'
    SINGLE_INTERFEROMETER_DUMPED = 'single_interferometer_dumped'

    @property
    def interfering_fraction(self) -> float:
        """Share of trials that reach an interferometer with both photons."""
        match self:
            case Pipeline.TWO_INTERFEROMETERS:
                return 1 / 2
            case Pipeline.SINGLE_INTERFEROMETER_DUMPED:
                return 1 / 4


class Routing(StrEnum):
    UU = 'UU'
    LL = 'LL'
    DISCARD = 'discard'


class Decision(StrEnum):
    ENTANGLED = 'entangled'
    NOT_DETECTED = 'not_detected'


class TrialOutcome(NamedTuple):
    routing: Routing
    coincidence: bool


class ExperimentCounts(BaseSchema):
    n_used: int = Field(default=0, ge=0)
    n_c_upper: int = Field(default=0, ge=0)
    n_c_lower: int = Field(default=0, ge=0)
    n_discarded: int = Field(default=0, ge=0)

    @model_validator(mode='after')
    def coincidences_within_used(self) -> Self:
        if self.n_c_upper + self.n_c_lower > self.n_used:
            msg = 'coincidences cannot exceed used copies'
            raise ValueError(msg)
        return self

    @property
    def n_copies(self) -> int:
        return self.n_used + self.n_discarded

    @property
    def n_c_total(self) -> int:
        return self.n_c_upper + self.n_c_lower

    def coincidence_statistic(self, pipeline: Pipeline) -> float:
        """N_c compared against the threshold: the interferometer average, or the lower one alone."""
        match pipeline:
            case Pipeline.TWO_INTERFEROMETERS:
                return self.n_c_total / 2
            case Pipeline.SINGLE_INTERFEROMETER_DUMPED:
                return float(self.n_c_lower)

    def recorded_coincidences(self, pipeline: Pipeline) -> int:
        match pipeline:
            case Pipeline.TWO_INTERFEROMETERS:
                return self.n_c_total
            case Pipeline.SINGLE_INTERFEROMETER_DUMPED:
                return self.n_c_lower

    def __add__(self, other: 'ExperimentCounts') -> 'ExperimentCounts':
        return ExperimentCounts(
            n_used=self.n_used + other.n_used,
            n_c_upper=self.n_c_upper + other.n_c_upper,
            n_c_lower=self.n_c_lower + other.n_c_lower,
            n_discarded=self.n_discarded + other.n_discarded,
        )


class BlockCounts(ExperimentCounts):
    block: int = Field(ge=0)


class DetectionReport(BaseSchema):
    n_copies: int
    n_c: float
    p_c_hat: float
    f_ave_hat: float
    witness_expectation_hat: float
    std_error: float
    threshold_counts: float
    z_score: float
    decision: Decision


class SimulationReport(BaseSchema):
    config: dict[str, Any]
    counts: ExperimentCounts
    report: DetectionReport


class ExperimentConfig:
    n_copies: int
    seed: int
    pipeline: Pipeline
    witness: ApproxWitness
    state_ensemble: Ensemble
    aew_ensemble: Ensemble
    variance_reduced: bool
    optical_encoding: bool
    oam_q: int

    def __init__(
        self,
        *,
        n_copies: int,
        seed: int,
        witness: ApproxWitness,
        state_ensemble: Ensemble,
        aew_ensemble: Ensemble,
        pipeline: Pipeline = Pipeline.TWO_INTERFEROMETERS,
        variance_reduced: bool = False,
        optical_encoding: bool = False,
        oam_q: int = 1,
    ) -> None:
        if n_copies < 0:
            raise ConfigError('n_copies', f'must be nonnegative, got {n_copies}')
        if seed < 0:
            raise ConfigError('seed', f'must be nonnegative, got {seed}')

        for ensemble in (state_ensemble, aew_ensemble):
            if ensemble.dims != witness.dims:
                raise DimensionMismatchError(ensemble.dims, witness.dims)
        if optical_encoding and witness.dims != (2, 2):
            raise ConfigError('optical_encoding', f'needs two-qubit states, got dims {list(witness.dims)}')

        self.n_copies = n_copies
        self.seed = seed
        self.pipeline = Pipeline(pipeline)
        self.witness = witness
        self.state_ensemble = state_ensemble
        self.aew_ensemble = aew_ensemble
        self.variance_reduced = variance_reduced
        self.optical_encoding = optical_encoding
        self.oam_q = oam_q

    def _photons(self, ensemble: Ensemble) -> Ensemble:
        if not self.optical_encoding:
            return ensemble
        return Ensemble((entry.weight, encode_optically(entry.state, self.oam_q)) for entry in ensemble)

    @cached_property
    def pair_coincidence(self) -> np.ndarray:
        """p_c for every (witness member, state member) pair."""
        aew = self._photons(self.aew_ensemble)
        state = self._photons(self.state_ensemble)
        return np.array([
            [coincidence_pure(phi.state, psi.state).p_coincidence for psi in state]
            for phi in aew
        ])

    @cached_property
    def mixed_coincidence(self) -> float:
        return coincidence_mixed(self.state_ensemble.density(), self.witness.matrix).p_coincidence

    def describe(self) -> dict[str, Any]:
        return {
            'n_copies': self.n_copies,
            'seed': self.seed,
            'pipeline': str(self.pipeline),
            'variance_reduced': self.variance_reduced,
            'optical_encoding': self.optical_encoding,
            'oam_q': self.oam_q,
            'p_star': self.witness.p_star,
            'state_ensemble_size': len(self.state_ensemble),
            'aew_ensemble_size': len(self.aew_ensemble),
        }


def _interfering(
    pipeline: Pipeline,
    path_aew: np.ndarray | int,
    path_state: np.ndarray | int,
) -> tuple[np.ndarray, np.ndarray]:
    """Masks of the trials whose two photons meet at the upper and at the lower interferometer."""
    lower = np.logical_and(np.equal(path_aew, LOWER), np.equal(path_state, LOWER))
    if pipeline is Pipeline.TWO_INTERFEROMETERS:
        upper = np.logical_and(np.equal(path_aew, UPPER), np.equal(path_state, UPPER))
    else:
        upper = np.zeros_like(lower)
    return upper, lower


def _coincidence_probability(cfg: ExperimentConfig, i: np.ndarray | int, j: np.ndarray | int) -> float | RealVector:
    return cfg.mixed_coincidence if cfg.variance_reduced else cfg.pair_coincidence[i, j]


def run_trial(rng: np.random.Generator, cfg: ExperimentConfig) -> TrialOutcome:
    i = int(rng.choice(len(cfg.aew_ensemble), p=cfg.aew_ensemble.weights))
    j = int(rng.choice(len(cfg.state_ensemble), p=cfg.state_ensemble.weights))
    path_aew, path_state = (int(path) for path in rng.integers(0, 2, size=2))

    upper, lower = _interfering(cfg.pipeline, path_aew, path_state)
    if not (upper or lower):
        return TrialOutcome(Routing.DISCARD, coincidence=False)

    routing = Routing.UU if upper else Routing.LL
    return TrialOutcome(routing, coincidence=bool(rng.random() < _coincidence_probability(cfg, i, j)))


def simulate_block(cfg: ExperimentConfig, block: int, size: int) -> BlockCounts:
    """Batched ``run_trial`` over one block, driven by the block's own substream."""
    rng = block_generator(cfg.seed, block)

    i = rng.choice(len(cfg.aew_ensemble), size=size, p=cfg.aew_ensemble.weights)
    j = rng.choice(len(cfg.state_ensemble), size=size, p=cfg.state_ensemble.weights)
    path_aew, path_state = rng.integers(0, 2, size=(2, size))
    uniform = rng.random(size)

    upper, lower = _interfering(cfg.pipeline, path_aew, path_state)
    coincident = uniform < _coincidence_probability(cfg, i, j)
    n_used = int(upper.sum() + lower.sum())

    return BlockCounts(
        block=block,
        n_used=n_used,
        n_c_upper=int((coincident & upper).sum()),
        n_c_lower=int((coincident & lower).sum()),
        n_discarded=size - n_used,
    )


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None:
        return os.cpu_count() or 1

    try:
        threads = int(value)
    except ValueError as error:
        raise ConfigError(THREADS_ENV_VAR, f'must be a positive integer, got {value!r}') from error
    if threads < 1:
        raise ConfigError(THREADS_ENV_VAR, f'must be a positive integer, got {value!r}')
    return threads


class ExperimentRunner:
    """Runs the trials of a config in fixed-size blocks on a thread pool.

    Block b always consumes substream b of the seed, so the merged counts do
    not depend on the number of threads.
    """

    config: ExperimentConfig
    threads: int
    logger: logging.Logger

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        threads: int | None = None,
    ) -> None:
        self.config = config
        self.threads = threads or default_threads()
        self.logger = logging.getLogger(self.__class__.__name__)

    def blocks(self) -> list[tuple[int, int]]:
        full, rest = divmod(self.config.n_copies, TRIAL_BLOCK_SIZE)
        sizes = [TRIAL_BLOCK_SIZE] * full + ([rest] if rest else [])
        return list(enumerate(sizes))

    @time_it
    def run_blocks(self) -> list[BlockCounts]:
        blocks = self.blocks()
        self.logger.info(
            f'Running {self.config.n_copies} copies in {len(blocks)} blocks on {self.threads} threads '
            f'({self.config.pipeline})',
        )

        # both caches are filled once before the workers read them
        _ = self.config.pair_coincidence, self.config.mixed_coincidence

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            results = list(pool.map(lambda block: simulate_block(self.config, *block), blocks))

        for result in results:
            self.logger.debug(f'Block {result.block}: {result.n_used} used, {result.n_c_total} coincidences')
        return results

    def run(self) -> ExperimentCounts:
        return merge_counts(self.run_blocks())


def merge_counts(blocks: list[BlockCounts]) -> ExperimentCounts:
    return sum(
        (ExperimentCounts.model_validate(block, from_attributes=True) for block in blocks),
        start=ExperimentCounts(),
    )


def run_experiment(cfg: ExperimentConfig, *, threads: int | None = None) -> ExperimentCounts:
    return ExperimentRunner(cfg, threads=threads).run()


def _threshold_rate(p_star: float, d: int) -> float:
    """Coincidence probability at the witness boundary tr[rho W] = 0."""
    return (1 - p_star / d**2) / 2


def threshold_counts(n_copies: int, p_star: float, d: int = 2) -> float:
    return n_copies * _threshold_rate(p_star, d) / 4


def decide(
    counts: ExperimentCounts,
    p_star: float,
    d: int = 2,
    pipeline: Pipeline = Pipeline.TWO_INTERFEROMETERS,
) -> Decision:
    threshold = threshold_counts(counts.n_copies, p_star, d)
    if counts.coincidence_statistic(pipeline) > threshold + DECISION_GUARD * max(1.0, threshold):
        return Decision.ENTANGLED
    return Decision.NOT_DETECTED


def z_score(
    counts: ExperimentCounts,
    p_star: float,
    d: int = 2,
    pipeline: Pipeline = Pipeline.TWO_INTERFEROMETERS,
) -> float:
    """Distance of N_c above the threshold in units of its spread at the boundary."""
    fraction = pipeline.interfering_fraction
    boundary = fraction * _threshold_rate(p_star, d)
    spread = math.sqrt(counts.n_copies * boundary * (1 - boundary)) / (4 * fraction)
    excess = counts.coincidence_statistic(pipeline) - threshold_counts(counts.n_copies, p_star, d)

    if spread == 0:
        return math.copysign(math.inf, excess) if excess else 0.0
    return excess / spread


def estimate(
    counts: ExperimentCounts,
    p_star: float,
    d: int = 2,
    pipeline: Pipeline = Pipeline.TWO_INTERFEROMETERS,
) -> DetectionReport:
    n_copies = counts.n_copies
    if n_copies == 0 or counts.n_used == 0:
        raise ValidationError(details={'counts': 'at least one used copy is required'})

    fraction = pipeline.interfering_fraction
    statistic = counts.coincidence_statistic(pipeline)

    p_c_hat = 4 * statistic / n_copies
    f_ave_hat = 1 - 2 * p_c_hat
    witness_hat = reconstruct_expectation(f_ave_hat, p_star, d, check_range=False)

    rate = counts.recorded_coincidences(pipeline) / n_copies
    std_error = 2 * math.sqrt(rate * (1 - rate) / n_copies) / fraction / (1 - p_star)

    report = DetectionReport(
        n_copies=n_copies,
        n_c=statistic,
        p_c_hat=p_c_hat,
        f_ave_hat=f_ave_hat,
        witness_expectation_hat=witness_hat,
        std_error=std_error,
        threshold_counts=threshold_counts(n_copies, p_star, d),
        z_score=_finite(z_score(counts, p_star, d, pipeline)),
        decision=decide(counts, p_star, d, pipeline),
    )
    logger.info(
        f'N_c = {statistic:g} vs threshold {report.threshold_counts:g}: {report.decision} '
        f'(Tr[rho W] ~ {witness_hat:.4f} +/- {std_error:.4f})',
    )
    return report


def _finite(value: float) -> float:
    # reports reject non-finite floats
    return max(min(value, np.finfo(float).max), -np.finfo(float).max)
