"""
Fractal Lq Toolkit - Command Runner Support
Version: 1.0.0
"""

import functools
import logging
import sys

import pandas as pd

from utils.errors import FractalLqError

logger = logging.getLogger(__name__)


def command_runner(name: str):
    """Map toolkit errors raised by a runner to exit codes"""

    def decorate(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                return func(*args, **kwargs)
            except FractalLqError as e:
                logger.error(f"{name}: {e}")
                return e.exit_code
            except Exception as e:
                logger.exception(f"{name}: unexpected error: {e}")
                return 1

        wrapper.command_name = name
        return wrapper

    return decorate


def print_summary(frame: pd.DataFrame, title: str = None):
    """Summary table on standard output"""
    if title:
        sys.stdout.write(f"{title}\n")
    sys.stdout.write(frame.to_string(index=False) + "\n")
    sys.stdout.flush()
