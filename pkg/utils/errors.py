"""
Fractal Lq Toolkit - Error Types
Version: 1.0.0
"""

from typing import Optional


class FractalLqError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1


class ConfigError(FractalLqError):
    """Invalid settings, experiment config, or a scale cap exceeded"""

    exit_code = 2


class CapacityError(FractalLqError):
    """Atom, word or cell count above the configured capacity"""

    exit_code = 3

    def __init__(self, message: str, requested: Optional[int] = None, capacity: Optional[int] = None):
        super().__init__(message)
        self.requested = requested
        self.capacity = capacity


class BudgetError(FractalLqError):
    """Search node budget exhausted before the search completed"""

    exit_code = 4

    def __init__(self, message: str, best_so_far=None, nodes: int = 0):
        super().__init__(message)
        self.best_so_far = best_so_far
        self.nodes = nodes


class DomainError(FractalLqError, ValueError):
    """Argument outside the mathematical domain (e.g. q <= 1)"""


class ArgumentError(FractalLqError, ValueError):
    """Precondition violated by an argument"""


class RangeError(ArgumentError):
    """Location outside a declared window"""


class EmptyRestrictionError(FractalLqError):
    """Restriction to an interval carrying no mass"""


class DegenerateInputError(FractalLqError, ValueError):
    """Input too small for the requested quantity"""


class PreconditionError(FractalLqError):
    """Structural precondition (e.g. uniformity) not met"""


class DataError(FractalLqError, ValueError):
    """Sample data unusable for the requested fit or transform"""
