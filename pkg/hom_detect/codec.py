"""JSON and CSV (de)serialisation of states, witnesses and reports.

Complex numbers travel as ``[re, im]`` pairs; bare reals are accepted on input.
"""
import csv
import io
from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np
import orjson
from pydantic import ValidationError as PydanticValidationError

from hom_detect.errors import ConsistencyError, ParseError, ValidationError
from hom_detect.quantum import DensityMatrix, Ensemble, PureState
from hom_detect.schema import (
    BaseSchema,
    ComplexEntry,
    ComplexPair,
    EnsembleEntrySchema,
    ProductTermSchema,
    StateRecordSchema,
)
from hom_detect.types import ComplexMatrix, ComplexVector
from hom_detect.witness import ProductTerm, Witness, projector_witness

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS


def encode_complex(value: complex) -> ComplexPair:
    value = complex(value)
    return (value.real, value.imag)


def decode_complex(value: ComplexEntry) -> complex:
    if isinstance(value, tuple | list):
        real, imag = value
        return complex(real, imag)
    return complex(value)


def encode_vector(vector: Iterable[complex]) -> list[ComplexPair]:
    return [encode_complex(value) for value in vector]


def encode_matrix(matrix: ComplexMatrix) -> list[list[ComplexPair]]:
    return [encode_vector(row) for row in matrix]


def decode_vector(values: Sequence[ComplexEntry]) -> ComplexVector:
    return np.array([decode_complex(value) for value in values], dtype=np.complex128)


def decode_matrix(rows: Sequence[Sequence[ComplexEntry]]) -> ComplexMatrix:
    if len({len(row) for row in rows}) > 1:
        raise ValidationError(details={'matrix': 'rows must have equal length'})
    return np.array([[decode_complex(value) for value in row] for row in rows], dtype=np.complex128)


def load_document(data: bytes | str) -> dict[str, Any]:
    try:
        document = orjson.loads(data)
    except orjson.JSONDecodeError as error:
        raise ParseError(details={'json': str(error)}) from error

    if not isinstance(document, dict):
        raise ParseError(details={'json': f'top level must be an object, got {type(document).__name__}'})
    return document


def load_schema[T: BaseSchema](schema: type[T], document: dict[str, Any]) -> T:
    try:
        return schema.model_validate(document)
    except PydanticValidationError as error:
        raise ValidationError(
            details={
                'schema': schema.__name__,
                'errors': [
                    {'loc': '.'.join(str(part) for part in item['loc']), 'msg': item['msg']}
                    for item in error.errors()
                ],
            },
            error_code='InvalidConfig',
        ) from error


def make_report[T: BaseSchema](schema: type[T], **fields: Any) -> T:  # noqa:ANN401
    """Build a report, treating non-finite or malformed values as an internal inconsistency."""
    try:
        return schema(**fields)
    except PydanticValidationError as error:
        raise ConsistencyError(details={'report': schema.__name__, 'errors': str(error)}) from error


def dump_json(report: BaseSchema) -> bytes:
    return orjson.dumps(report.model_dump(mode='json'), option=JSON_OPTIONS)


def dump_csv(rows: Sequence[BaseSchema]) -> bytes:
    buffer = io.StringIO()
    if rows:
        header = list(type(rows[0]).model_fields)
        writer = csv.DictWriter(buffer, fieldnames=header, lineterminator='\n')
        writer.writeheader()
        writer.writerows(row.model_dump(mode='json') for row in rows)
    return buffer.getvalue().encode('utf-8')


def state_from_record(record: StateRecordSchema) -> PureState | DensityMatrix:
    if record.amplitudes is not None:
        return PureState(decode_vector(record.amplitudes), record.dims)
    return DensityMatrix(decode_matrix(record.matrix or []), record.dims)


def density_from_record(record: StateRecordSchema) -> DensityMatrix:
    state = state_from_record(record)
    return state.density() if isinstance(state, PureState) else state


def state_record(state: PureState | DensityMatrix) -> StateRecordSchema:
    if isinstance(state, PureState):
        return StateRecordSchema(dims=list(state.dims), amplitudes=encode_vector(state.amplitudes))
    return StateRecordSchema(dims=list(state.dims), matrix=encode_matrix(state.matrix))


def witness_from_record(record: StateRecordSchema) -> Witness:
    """A witness matrix as given, or the projector witness of a target state."""
    if record.matrix is not None:
        return Witness(decode_matrix(record.matrix), record.dims)
    return projector_witness(PureState(decode_vector(record.amplitudes or []), record.dims))


def ensemble_from_records(entries: Sequence[EnsembleEntrySchema]) -> Ensemble:
    return Ensemble(
        (entry.weight, PureState(decode_vector(entry.amplitudes), entry.dims))
        for entry in entries
    )


def product_terms_from_records(records: Sequence[ProductTermSchema]) -> list[ProductTerm]:
    return [
        ProductTerm(record.weight, density_from_record(record.a), density_from_record(record.b))
        for record in records
    ]


def product_term_records(terms: Sequence[ProductTerm]) -> list[ProductTermSchema]:
    return [
        ProductTermSchema(weight=term.weight, a=state_record(term.a), b=state_record(term.b))
        for term in terms
    ]
