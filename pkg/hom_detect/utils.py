import logging
from datetime import UTC, datetime
from functools import wraps
from typing import Any

from rich.console import Console
from rich.logging import RichHandler

from hom_detect.types import SyncFunction

logger = logging.getLogger(__name__)


def time_it(
    function: SyncFunction,
) -> SyncFunction:
    @wraps(function)
    def wrapper(
        *args: Any,  # noqa:ANN401
        **kwargs: Any,  # noqa:ANN401
    ) -> Any:  # noqa:ANN401
        started_at = datetime.now(tz=UTC)
        result = function(*args, **kwargs)
        finished_at = datetime.now(tz=UTC)

        duration = (finished_at - started_at).total_seconds()
        logger.debug(f'[TIME] Function {function.__name__} finished in {duration:.3f} sec')

        return result
    return wrapper


def setup_rich_logging(level: int | str = logging.INFO) -> None:
    logging.basicConfig(
        level=level,
        datefmt='[%X]',
        format='%(message)s',
        handlers=[
            RichHandler(
                console=Console(stderr=True),
                omit_repeated_times=False,
                show_level=True,
                rich_tracebacks=True,
            ),
        ],
        force=True,
    )
