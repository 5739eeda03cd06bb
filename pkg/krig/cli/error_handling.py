"""
Centralized error handling for commands.

Library errors become their exit code with a one-line diagnostic; anything else is
logged with its traceback and reported as exit code 1.
"""

import logging
import traceback
from typing import Callable

from pydantic import ValidationError

from krig.errors import KrigError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID_INPUT = 2


def handle_errors(
    command: str, run: Callable[[], None], enable_error_logging: bool = True
) -> int:
    """
    Run a command and map its outcome to a process exit code.

    Args:
        command: Command name for log lines
        run: Zero-argument callable doing the work
        enable_error_logging: Whether to log full tracebacks of unexpected errors

    Returns:
        0 on success, the error's exit code for library errors, 1 otherwise
    """
    try:
        run()
        return EXIT_OK
    except KrigError as exc:
        logger.warning(f"🚨 {command}: {type(exc).__name__}: {exc.detail}")
        return exc.exit_code
    except ValidationError as exc:
        err = exc.errors()[0]
        logger.warning(f"🚨 {command}: invalid value for {err['loc']}: {err['msg']}")
        return EXIT_INVALID_INPUT
    except Exception as exc:
        logger.error(f"💥 Unexpected error in {command}: {exc}")
        if enable_error_logging:
            logger.error(f"📋 Full traceback:\n{traceback.format_exc()}")
        return EXIT_UNEXPECTED
