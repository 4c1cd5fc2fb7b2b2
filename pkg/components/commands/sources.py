"""
Fractal Lq Toolkit - Config Sources
Version: 1.0.0

Builders turning config descriptors into measures and models.
"""

import numpy as np

from services.dyadic_measure import AtomicMeasure, DyadicMeasure, uniform_measure
from services.models import model_from_dict
from utils.errors import ConfigError, FractalLqError

MEASURE_TYPES = ('atoms', 'uniform', 'dyadic')


def build_source(descriptor: dict):
    """Model, NonHomIFS, AtomicMeasure or DyadicMeasure from a descriptor"""
    kind = descriptor.get('type')
    try:
        if kind == 'atoms':
            return AtomicMeasure.from_json(descriptor, exact=descriptor.get('exact', False))
        if kind == 'uniform':
            return uniform_measure(descriptor['m'], descriptor.get('indices'),
                                   geometry=descriptor.get('geometry', 'line'))
        if kind == 'dyadic':
            return DyadicMeasure.from_json(descriptor)
        return model_from_dict(descriptor)
    except KeyError as e:
        raise ConfigError(f"source of type {kind!r} is missing {e}")
    except FractalLqError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid source: {e}")


def _digit_indices(digits, D: int, ell: int) -> np.ndarray:
    digits = np.unique(np.asarray(digits, dtype=np.int64))
    if digits.size == 0 or digits[0] < 0 or digits[-1] >= 1 << D:
        raise ConfigError(f"digits must be a nonempty subset of [0, {1 << D})")
    indices = np.zeros(1, dtype=np.int64)
    for _ in range(ell):
        indices = ((indices[:, None] << D) + digits[None, :]).ravel()
    return indices


def build_grid_measure(descriptor: dict, m: int, D: int, rng: np.random.Generator) -> DyadicMeasure:
    """
    2^-m measure on the circle from a witness descriptor

    Types: uniform (optionally on given indices), dirac, digits (base 2^D
    digit set at every level), entries ([index, mass] pairs), random
    (seeded uniform measure on `size` random points).
    """
    kind = descriptor.get('type')
    try:
        if kind == 'uniform':
            return uniform_measure(m, descriptor.get('indices'))
        if kind == 'dirac':
            return DyadicMeasure(m, [descriptor.get('index', 0)], [1.0])
        if kind == 'digits':
            return uniform_measure(m, _digit_indices(descriptor['digits'], D, m // D))
        if kind == 'entries':
            entries = descriptor['entries']
            masses = np.asarray([float(e[1]) for e in entries])
            return DyadicMeasure(m, [int(e[0]) for e in entries], masses / masses.sum())
        if kind == 'random':
            size = min(int(descriptor['size']), 1 << m)
            return uniform_measure(m, rng.choice(1 << m, size=size, replace=False))
    except KeyError as e:
        raise ConfigError(f"measure of type {kind!r} is missing {e}")
    raise ConfigError(f"unknown measure type {kind!r}")
