import logging
import sys
from typing import Any, Self

EXIT_SUCCESS = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_CONSISTENCY = 3


class BaseError(Exception):
    error_code: str
    details: dict[str, Any]
    log_level: int
    exit_code: int = EXIT_INTERNAL

    def __init__(
        self,
        *,
        error_code: str,
        details: dict[str, Any] | None = None,
        log_level: int = logging.WARNING,
    ) -> None:
        self.error_code = error_code
        self.log_level = log_level
        self.details = {
            'error_code': self.error_code,
            'details': details or {},
        }

    @property
    def is_fatal(self) -> bool:
        return self.log_level == logging.CRITICAL

    def __str__(self) -> str:
        return f'{self.error_code}: {self.details["details"]}'

    @classmethod
    def from_base_exception(
        cls,
        exception: BaseException,
        *args: list[str],
        **kwargs: dict[str, Any],
    ) -> Self:
        return cls(
            *args,
            details={
                'exception': exception.__class__.__name__,
                'exception_message': str(exception),
            },
            **kwargs,  # type:ignore[arg-type]
        )


class FatalError(BaseError):
    def __init__(
        self,
        error_code: str,
        details: dict[str, Any],
    ) -> None:
        super().__init__(
            error_code=error_code,
            details=details,
            log_level=logging.CRITICAL,
        )


class BracketError(FatalError):
    def __init__(
        self,
        lower: float,
        upper: float,
    ) -> None:
        super().__init__(
            error_code='BracketFailure',
            details={
                'lower': lower,
                'upper': upper,
                'bracket': 'feasibility must flip between the endpoints',
            },
        )


class ConsistencyError(BaseError):
    exit_code = EXIT_CONSISTENCY

    def __init__(
        self,
        details: dict[str, Any],
    ) -> None:
        super().__init__(
            error_code='ConsistencyError',
            details=details,
            log_level=logging.ERROR,
        )


def handle_error(
    logger: logging.Logger,
    error: BaseError,
    log_level: int,
    *,
    exit_if_fatal: bool = False,
) -> None:
    if exit_if_fatal and error.is_fatal:
        logger.error(error)
        logger.error('Exiting')
        sys.exit(error.exit_code)

    if log_level > error.log_level:
        return

    match error.log_level:
        case logging.CRITICAL:
            logger.critical(error)
        case logging.ERROR:
            logger.error(error)
        case logging.WARNING:
            logger.warning(error)
        case _:
            logger.warning(error)


class ValidationError(BaseError):
    exit_code = EXIT_VALIDATION

    def __init__(
        self,
        details: dict[str, Any],
        error_code: str = 'ValidationError',
    ) -> None:
        super().__init__(
            error_code=error_code,
            details=details,
        )


class ParseError(ValidationError):
    def __init__(
        self,
        details: dict[str, Any],
    ) -> None:
        super().__init__(
            error_code='ParseError',
            details=details,
        )


class ConfigError(ValidationError):
    def __init__(
        self,
        field: str,
        reason: str,
    ) -> None:
        super().__init__(
            error_code='ConfigError',
            details={field: reason},
        )


class DimensionMismatchError(ValidationError):
    def __init__(
        self,
        left: object,
        right: object,
    ) -> None:
        super().__init__(
            error_code='DimensionMismatch',
            details={
                'left': str(left),
                'right': str(right),
            },
        )


class NotHermitianError(ValidationError):
    def __init__(
        self,
        deviation: float,
    ) -> None:
        super().__init__(
            error_code='NotHermitian',
            details={'max_abs_deviation': deviation},
        )


class WrongTraceError(ValidationError):
    def __init__(
        self,
        trace: complex,
    ) -> None:
        super().__init__(
            error_code='WrongTrace',
            details={
                'trace': [trace.real, trace.imag],
                'expected': 1,
            },
        )


class NotPositiveError(ValidationError):
    def __init__(
        self,
        min_eigenvalue: float,
    ) -> None:
        super().__init__(
            error_code='NotPositive',
            details={'min_eigenvalue': min_eigenvalue},
        )


class NotNormalizedError(ValidationError):
    def __init__(
        self,
        norm: float,
    ) -> None:
        super().__init__(
            error_code='NotNormalized',
            details={
                'norm': norm,
                'expected': 1,
            },
        )


class NotAWitnessError(ValidationError):
    def __init__(
        self,
        min_eigenvalue: float,
    ) -> None:
        super().__init__(
            error_code='NotAWitness',
            details={
                'min_eigenvalue': min_eigenvalue,
                'not a witness': 'at least one negative eigenvalue is required',
            },
        )


class ProductTargetError(ValidationError):
    def __init__(
        self,
        largest_coefficient: float,
    ) -> None:
        super().__init__(
            error_code='ProductTarget',
            details={
                'largest_schmidt_coefficient': largest_coefficient,
                'product_target': 'a product state yields a trivial witness',
            },
        )


class SubsystemIndexError(ValidationError):
    def __init__(
        self,
        subsystem: int,
        subsystems: int,
    ) -> None:
        super().__init__(
            error_code='SubsystemIndex',
            details={
                'subsystem': subsystem,
                'available': subsystems,
            },
        )


class UnknownPathError(ValidationError):
    def __init__(
        self,
        path: str,
        known: list[str],
    ) -> None:
        super().__init__(
            error_code='UnknownPath',
            details={
                'path': path,
                'known_paths': known,
            },
        )


class BasisCollisionError(ValidationError):
    def __init__(
        self,
        q: int,
        photon_oam: int = 0,
    ) -> None:
        super().__init__(
            error_code='BasisCollision',
            details={
                'q': q,
                'photon_oam': photon_oam,
                'basis_collision': 'encoded oam must be nonzero and the photon must carry oam 0',
            },
        )


class MixedConditionalError(ValidationError):
    def __init__(
        self,
        branches: int,
    ) -> None:
        super().__init__(
            error_code='MixedConditional',
            details={
                'branches': branches,
                'mixed_conditional': 'unresolved detector leaves a mixed conditional state',
            },
        )


class UnknownCommandError(ValidationError):
    def __init__(
        self,
        command: str,
    ) -> None:
        super().__init__(
            error_code='UnknownCommand',
            details={'command': command},
        )


class CommandInternalError(BaseError):
    def __init__(
        self,
        details: dict[str, Any],
    ) -> None:
        super().__init__(
            error_code='InternalError',
            details=details,
            log_level=logging.ERROR,
        )


class UnknownPresetError(ValidationError):
    def __init__(
        self,
        preset: str,
        command: str,
    ) -> None:
        super().__init__(
            error_code='UnknownPreset',
            details={
                'preset': preset,
                'command': command,
            },
        )
