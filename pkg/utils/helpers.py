"""
Fractal Lq Toolkit - Helper Utilities
Version: 1.0.0
"""

import logging
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from utils.errors import DataError

logger = logging.getLogger(__name__)


def fit_line(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """
    Least-squares line through (x, y)

    Args:
        x: abscissae, at least two distinct values
        y: ordinates

    Returns:
        (slope, intercept, r_squared); a constant y fits perfectly with r_squared 1
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise DataError(f"need at least two paired points to fit a line (got {x.size})")
    if np.ptp(x) == 0:
        raise DataError("cannot fit a line through points with identical abscissae")

    if np.ptp(y) == 0:
        return 0.0, float(y[0]), 1.0

    result = stats.linregress(x, y)
    return float(result.slope), float(result.intercept), float(result.rvalue ** 2)


def top_half(values: Sequence) -> list:
    """The finer half of a scale range (the upper half of the list)"""
    values = list(values)
    return values[len(values) // 2:]


def near_rational(value: float, tolerance: float = 1e-12,
                  max_denominator: int = 10_000) -> Optional[Fraction]:
    """
    Continued-fraction check for a ratio that is probably rational

    Returns:
        The best approximation p/q with q <= max_denominator when it lies
        within tolerance of value, otherwise None
    """
    if not math.isfinite(value):
        return None
    approx = Fraction(value).limit_denominator(max_denominator)
    if abs(value - approx.numerator / approx.denominator) < tolerance:
        return approx
    return None


def warn_if_rational(label: str, value: float) -> bool:
    """Log a warning when an asserted-irrational ratio looks rational"""
    approx = near_rational(value)
    if approx is not None:
        logger.warning(f"{label} = {value!r} is within 1e-12 of {approx}; "
                       f"treating it as irrational is not justified numerically")
        return True
    return False


def _kronecker_alphas(dim: int) -> np.ndarray:
    # phi_d is the positive root of x^(d+1) = x + 1
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (dim + 1))
    return np.array([(1.0 / phi) ** (k + 1) % 1.0 for k in range(dim)])


def low_discrepancy(count: int, dim: int = 1, offset: float = 0.5) -> np.ndarray:
    """
    Deterministic Kronecker sequence in [0, 1)^dim

    Returns:
        Array of shape (count, dim)
    """
    alphas = _kronecker_alphas(dim)
    n = np.arange(1, count + 1, dtype=float)[:, None]
    return (offset + n * alphas[None, :]) % 1.0
