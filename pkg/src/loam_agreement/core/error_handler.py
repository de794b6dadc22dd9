"""
Error handling and logging setup

Exception hierarchy shared by every module, plus the handler that turns
exceptions into CLI exit codes and log lines.

Exit codes:
    0  success
    1  internal failure
    2  ingestion / design errors (bad CSV, unbalanced grid, ...)
    3  planning target not achievable
"""

import functools
import logging
import sys
import traceback
from typing import Any, Callable, Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
HANDLER_NAME = "loam_agreement.stderr"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INGESTION = 2
EXIT_NOT_ACHIEVABLE = 3


class LoamError(Exception):
    """Base class for all errors raised by loam_agreement."""
    pass


class IngestionError(LoamError):
    """Input data cannot be turned into a valid measurement grid."""
    pass


class UnbalancedDesign(IngestionError):
    """A subject/observer cell is missing or has the wrong replicate set."""
    pass


class DegenerateDesign(IngestionError):
    """a, b or c is not greater than one."""
    pass


class DuplicateCell(IngestionError):
    """The same (subject, observer, replicate) appears more than once."""
    pass


class NonFiniteValue(IngestionError):
    """A measurement is NaN or infinite."""
    pass


class MalformedRow(IngestionError):
    """A CSV row is missing fields or has unparsable content."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class MismatchedDesign(IngestionError):
    """Two grids of a paired study do not share design and labels."""
    pass


class DomainError(LoamError, ValueError):
    """A numeric argument lies outside its admissible domain."""
    pass


class NotAchievable(LoamError):
    """The requested CI width cannot be reached within the search cap."""

    def __init__(self, message: str, width_at_cap: float, cap: int):
        super().__init__(message)
        self.width_at_cap = width_at_cap
        self.cap = cap


class MonotonicityViolation(LoamError):
    """The projected width increased with the design size."""
    pass


class DegenerateResample(LoamError):
    """Too many bootstrap resamples had zero total sum of squares."""
    pass


def configure_logging(verbosity: int = 0, stream=None) -> logging.Logger:
    """
    Install the package-wide stderr handler.

    Args:
        verbosity: 0 = WARNING, 1 = INFO, 2+ = DEBUG, negative = ERROR
        stream: target stream, stderr by default

    Returns:
        The package root logger
    """
    if verbosity < 0:
        level = logging.ERROR
    elif verbosity == 0:
        level = logging.WARNING
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logger = logging.getLogger("loam_agreement")
    logger.setLevel(level)

    # The previous stream may already be closed; detach without flushing it.
    for old in [h for h in logger.handlers if h.get_name() == HANDLER_NAME]:
        logger.removeHandler(old)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.set_name(HANDLER_NAME)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)

    return logger


class ErrorHandler:
    """Maps exceptions raised by CLI commands to exit codes."""

    def __init__(self, logger: Optional[logging.Logger] = None, stderr=None):
        self.logger = logger or logging.getLogger("loam_agreement.cli")
        self.stderr = stderr
        self.error_count = 0

    @staticmethod
    def exit_code_for(exc: BaseException) -> int:
        if isinstance(exc, IngestionError):
            return EXIT_INGESTION
        if isinstance(exc, NotAchievable):
            return EXIT_NOT_ACHIEVABLE
        return EXIT_INTERNAL

    def handle(self, exc: BaseException) -> int:
        code = self.exit_code_for(exc)
        self.error_count += 1

        if code == EXIT_INTERNAL:
            self.logger.error(f"{type(exc).__name__}: {exc}\nTraceback: {traceback.format_exc()}")
        else:
            self.logger.info(f"{type(exc).__name__}: {exc}")

        print(f"{type(exc).__name__}: {exc}", file=self.stderr or sys.stderr)
        return code

    def guard(self, func: Callable[..., int]) -> Callable[..., int]:
        """
        Decorator: run a command handler, returning its exit code, or the
        mapped exit code when it raises.

        Example:
            @handler.guard
            def run_estimate(args) -> int:
                ...
        """
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> int:
            try:
                return func(*args, **kwargs)
            except Exception as e:  # noqa: BLE001
                return self.handle(e)

        return wrapper
