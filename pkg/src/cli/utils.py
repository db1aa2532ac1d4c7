import json
import logging
import sys
from functools import wraps

from src.errors import ValidationFailure, WmGameError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def exit_code_for(e: BaseException) -> int:
    if isinstance(e, ValidationFailure):
        return EXIT_VALIDATION
    return EXIT_RUNTIME

def emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))

def handle_exceptions(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            status = exit_code_for(e)
            if isinstance(e, WmGameError):
                logger.error(f"{func.__name__} failed: {e}")
                message = str(e)
            else:
                logger.error(f"Exception in {func.__name__}: {str(e)}", exc_info=True)
                message = "An unexpected error occurred"

            print(json.dumps({"error": message, "type": type(e).__name__}), file=sys.stderr)
            return status
    return wrapper
