"""Custom exceptions and exit-code mapping."""

import logging
from pathlib import Path

from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class ForgeError(Exception):
    """Base class for every error raised by the toolkit."""

    pass


class ForgeValidationError(ForgeError, ValueError):
    """Raised when arguments or documents violate a contract."""

    pass


class ConfigError(ForgeValidationError):
    """Raised for malformed or unknown configuration (documents, flags)."""

    pass


class PipelineError(ForgeValidationError):
    """Raised when a pipeline cannot be parsed or evaluated."""

    def __init__(self, message: str, node_id: str | None = None):
        super().__init__(message)
        self.node_id = node_id


class DomainError(ForgeValidationError):
    """Raised when a query falls outside the domain of an operation."""

    pass


class ArtifactIOError(ForgeError, OSError):
    """Raised when an artifact cannot be read or written."""

    pass


class MalformedRecordError(ArtifactIOError):
    """Raised when a record in a text artifact cannot be parsed."""

    def __init__(self, path: Path | str, line: int, reason: str):
        super().__init__(f"{path}: line {line}: {reason}")
        self.path = Path(path)
        self.line = line
        self.reason = reason


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit code of the `forge` command."""
    if isinstance(exc, (ForgeValidationError, ValidationError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    logger.error(f"Unexpected error: {type(exc).__name__}: {exc}", exc_info=True)
    return EXIT_VALIDATION
