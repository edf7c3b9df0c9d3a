from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

type ComplexPair = tuple[float, float]
type ComplexEntry = ComplexPair | float


class BaseSchema(BaseModel):
    model_config = ConfigDict(populate_by_name=True, from_attributes=True, allow_inf_nan=False)


class StateRecordSchema(BaseSchema):
    """Either a pure state (``amplitudes``) or an operator (``matrix``) on ``dims``."""

    dims: list[int] = Field(min_length=1)
    amplitudes: list[ComplexEntry] | None = None
    matrix: list[list[ComplexEntry]] | None = None

    @model_validator(mode='after')
    def exactly_one_representation(self) -> Self:
        if (self.amplitudes is None) == (self.matrix is None):
            msg = 'exactly one of amplitudes or matrix must be given'
            raise ValueError(msg)
        return self


class EnsembleEntrySchema(BaseSchema):
    weight: float = Field(ge=0)
    dims: list[int] = Field(min_length=1)
    amplitudes: list[ComplexEntry]


class ProductTermSchema(BaseSchema):
    weight: float = Field(ge=0)
    a: StateRecordSchema
    b: StateRecordSchema


class DecompositionSettingsSchema(BaseSchema):
    ensemble_size: int = Field(default=256, ge=1)
    restarts: int = Field(default=8, ge=1)
    seed: int = 0


class WitnessConfigSchema(StateRecordSchema):
    """A witness matrix, or a target state whose projector witness is built."""

    decompose: bool = False
    decomposition_settings: DecompositionSettingsSchema = DecompositionSettingsSchema()


class ExactConfigSchema(BaseSchema):
    rho: StateRecordSchema
    witness: StateRecordSchema
    decomposition: list[ProductTermSchema] | None = None
    find_decomposition: bool = False
    decomposition_settings: DecompositionSettingsSchema = DecompositionSettingsSchema()


class SimulateConfigSchema(BaseSchema):
    n_copies: int = Field(ge=0)
    seed: int | None = Field(default=None, ge=0)
    pipeline: Literal['two_interferometers', 'single_interferometer_dumped'] = 'two_interferometers'
    rho: StateRecordSchema | None = None
    rho_ensemble: list[EnsembleEntrySchema] | None = None
    witness: StateRecordSchema
    variance_reduced: bool = False
    optical_encoding: bool = False
    oam_q: int = 1
    threads: int | None = Field(default=None, ge=1)

    @model_validator(mode='after')
    def exactly_one_state(self) -> Self:
        if (self.rho is None) == (self.rho_ensemble is None):
            msg = 'exactly one of rho or rho_ensemble must be given'
            raise ValueError(msg)
        return self


class ElementRecordSchema(BaseSchema):
    kind: Literal['HWP', 'PBS', 'BS', 'HOLO', 'DETECT']
    name: str | None = None
    path: str | None = None
    angle: float | None = None
    paths: list[str] | None = None
    outputs: list[str] | None = None
    q: int | None = None
    polarization: Literal['H', 'V'] | None = None


class CircuitVerifyConfigSchema(BaseSchema):
    x: list[ComplexEntry] | None = None
    seed: int | None = Field(default=None, ge=0)
    q: int = 1
    output_path: Literal['c1', 'c2'] = 'c1'
    circuit: str | list[ElementRecordSchema] = 'quantum-join-fig4'


class WitnessReportSchema(BaseSchema):
    dims: list[int]
    lambda_min: float
    p_star: float
    p_star_bisection: float
    matrix: list[list[ComplexPair]]
    p_s: float
    mode: str
    decomposition_found: bool | None = None
    decomposition_residual: float | None = None
    decomposition: list[ProductTermSchema] | None = None


class ExactReportSchema(BaseSchema):
    witness_expectation: float
    overlap: float
    reconstructed_expectation: float
    p_coincidence: float
    p_star: float
    p_s: float
    locc_expectation: float | None = None
    locc_reconstructed_expectation: float | None = None


class CircuitStepSchema(BaseSchema):
    name: str
    probability: float
    terms: int


class CircuitReportSchema(BaseSchema):
    x: list[ComplexPair]
    probability: float
    fidelity: float
    q: int
    output_path: str
    branch_probability: float
    encoded_fidelity: float
    joined: str
    steps: list[CircuitStepSchema]
