"""Error types and CLI error handling."""

import json
from typing import Any, Callable, Optional
from functools import wraps
import click
import structlog

logger = structlog.get_logger(__name__)

EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

class WorkbenchError(Exception):
    """Base exception for workbench errors."""

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

class DimensionError(WorkbenchError):
    """Raised when vector/matrix dimensions do not match."""
    pass

class RankDeficientError(WorkbenchError):
    """Raised when a generator matrix does not have full row rank."""
    pass

class CodeConstructionError(WorkbenchError):
    """Raised when a requested code or field cannot be built."""
    pass

class CodeFileError(WorkbenchError):
    """Raised when a code file violates the schema."""
    pass

class DomainError(WorkbenchError):
    """Raised when a numeric argument is outside its domain."""
    pass

class FitError(WorkbenchError):
    """Raised when the trade-off model cannot be fitted."""
    pass

class SearchError(WorkbenchError):
    """Raised when an SNR bracket cannot be established."""
    pass

class InfeasibleError(WorkbenchError):
    """Raised when a design problem has no feasible point."""

    def __init__(self, message: str, details: Optional[dict] = None, payload: Optional[dict] = None):
        super().__init__(message, details)
        self.payload = payload

def handle_cli_errors(func: Callable) -> Callable:
    """Decorator mapping workbench errors of a CLI command to exit codes.

    Infeasible problems print ``{"feasible": false, ...}`` on stdout and exit 2;
    other workbench errors print a message on stderr and exit 1.
    """

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except InfeasibleError as e:
            logger.warning("Problem infeasible", reason=e.message, **e.details)
            payload = {"feasible": False, "reason": e.message}
            if e.payload:
                payload.update(e.payload)
            click.echo(json.dumps(payload, sort_keys=True))
            raise click.exceptions.Exit(EXIT_INFEASIBLE)
        except WorkbenchError as e:
            logger.error("Command failed", error=e.message, **e.details)
            click.echo(f"Error: {e.message}", err=True)
            raise click.exceptions.Exit(EXIT_ERROR)

    return wrapper
