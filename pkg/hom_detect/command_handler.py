import logging
from collections.abc import Callable
from enum import StrEnum
from typing import Any, NamedTuple

from hom_detect.codec import dump_csv, dump_json, load_schema
from hom_detect.errors import (
    EXIT_SUCCESS,
    BaseError,
    CommandInternalError,
    ConfigError,
    UnknownCommandError,
)
from hom_detect.schema import BaseSchema

logger = logging.getLogger(__name__)


class OutputFormat(StrEnum):
    JSON = 'json'
    CSV = 'csv'


class CommandOptions(NamedTuple):
    seed: int | None = None
    output_format: OutputFormat = OutputFormat.JSON
    threads: int | None = None


class CommandResult:
    command: str
    report: BaseSchema | None
    rows: list[BaseSchema] | None
    error: BaseError | None

    def __init__(
        self,
        command: str,
        *,
        report: BaseSchema | None = None,
        rows: list[Any] | None = None,
        error: BaseError | None = None,
    ) -> None:
        self.command = command
        self.report = report
        self.rows = rows
        self.error = error

    @property
    def success(self) -> bool:
        return self.error is None

    @property
    def exit_code(self) -> int:
        return EXIT_SUCCESS if self.error is None else self.error.exit_code

    def dump(self, output_format: OutputFormat = OutputFormat.JSON) -> bytes:
        match output_format:
            case OutputFormat.JSON if self.report is not None:
                return dump_json(self.report)
            case OutputFormat.CSV if self.rows is not None:
                return dump_csv(self.rows)

        raise ConfigError('format', f'{output_format} output is not available for {self.command}')

    def __str__(self) -> str:
        return f'CommandResult[{'ok' if self.success else 'err'}] <{self.command}>'


def result_from_error(
    command: str,
    error: BaseError,
) -> CommandResult:
    return CommandResult(command, error=error)


type CommandFunction = Callable[[Any, CommandOptions], CommandResult]


class CommandHandler:
    commands: dict[str, CommandFunction]

    def __init__(self) -> None:
        self.commands = {}

    def add_command(
        self,
        command_name: str,
        func: CommandFunction,
    ) -> None:
        self.commands[command_name] = func

    def command(
        self,
        command_name: str,
    ) -> Callable[[CommandFunction], CommandFunction]:
        def decorator(func: CommandFunction) -> CommandFunction:
            self.add_command(
                command_name=command_name,
                func=func,
            )

            return func
        return decorator

    def handle(
        self,
        command_name: str,
        document: dict[str, Any],
        options: CommandOptions,
    ) -> CommandResult:
        command = self.commands.get(command_name)
        if not command:
            return result_from_error(command_name, UnknownCommandError(command_name))

        config_class = command.__annotations__.get('config')
        if not config_class:
            return result_from_error(
                command_name,
                CommandInternalError(
                    details={'config_argument': 'must be set in command function'},
                ),
            )

        try:
            config = load_schema(config_class, document)
            logger.debug(f'Running {command_name} with {config_class.__name__}')
            return command(config, options)
        except BaseError as error:
            return result_from_error(command_name, error)
        except Exception as error:  # noqa: BLE001
            return result_from_error(
                command_name,
                CommandInternalError.from_base_exception(error),
            )
