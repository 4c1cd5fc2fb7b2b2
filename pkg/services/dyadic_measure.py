"""
Fractal Lq Toolkit - Dyadic Measure Service
Version: 1.0.0

Finitely supported measures on the line (AtomicMeasure) and their
discretizations on the grid 2^-m Z (DyadicMeasure).
"""

import logging
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy import signal

from config.settings import settings
from utils.errors import (
    ArgumentError, CapacityError, ConfigError, DomainError,
    EmptyRestrictionError, RangeError,
)
from utils.exact import FieldElement, is_exact_number, parse_real, to_mpfr

logger = logging.getLogger(__name__)

GEOMETRIES = ('circle', 'line')


def _check_geometry(geometry: str) -> str:
    if geometry not in GEOMETRIES:
        raise ArgumentError(f"geometry must be one of {GEOMETRIES}, got {geometry!r}")
    return geometry


def _check_scale(m: int) -> int:
    if int(m) != m or m < 0:
        raise ArgumentError(f"scale must be a nonnegative integer, got {m!r}")
    if m > settings.SPARSE_SCALE_CAP:
        raise ConfigError(f"scale m={m} exceeds the sparse scale cap {settings.SPARSE_SCALE_CAP}")
    return int(m)


def _check_capacity(requested: int, what: str):
    if requested > settings.CAPACITY:
        raise CapacityError(
            f"{what} needs {requested} atoms, above the capacity {settings.CAPACITY}",
            requested=requested, capacity=settings.CAPACITY,
        )


class AtomicMeasure:
    """
    Finite list of (location, mass) with sorted, merged locations

    Float mode keeps locations in a float64 array and merges atoms closer
    than the merge tolerance. Exact mode keeps Fractions or number field
    elements and merges only true coincidences. ``overlaps`` counts the
    coincidences merged while building the measure.
    """

    __slots__ = ('_locations', '_masses', 'overlaps', 'exact')

    def __init__(self, locations, masses, overlaps: int = 0, exact: Optional[bool] = None):
        locations = list(locations) if not isinstance(locations, np.ndarray) else locations
        masses = np.asarray(masses, dtype=float).ravel()
        if len(locations) != masses.size:
            raise ArgumentError("locations and masses must have the same length")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise ArgumentError("atom masses must be finite and nonnegative")

        if exact is None:
            exact = masses.size > 0 and not isinstance(locations, np.ndarray) \
                and all(is_exact_number(v) for v in locations)

        keep = masses > 0
        if exact:
            self._init_exact([v for v, k in zip(locations, keep) if k], masses[keep], overlaps)
        else:
            locs = np.asarray([float(v) for v in locations] if not isinstance(locations, np.ndarray)
                              else locations, dtype=float).ravel()
            self._init_float(locs[keep], masses[keep], overlaps)

    def _init_float(self, locs: np.ndarray, masses: np.ndarray, overlaps: int):
        self.exact = False
        if locs.size == 0:
            self._locations = locs
            self._masses = masses
            self.overlaps = overlaps
            return

        order = np.argsort(locs, kind='stable')
        locs = locs[order]
        masses = masses[order]
        starts = np.concatenate(([0], np.flatnonzero(np.diff(locs) > settings.MERGE_TOLERANCE) + 1))
        self._locations = locs[starts]
        self._masses = np.add.reduceat(masses, starts)
        self.overlaps = overlaps + int(locs.size - starts.size)

    def _init_exact(self, locs: list, masses: np.ndarray, overlaps: int):
        self.exact = True
        merged: Dict = {}
        for loc, mass in zip(locs, masses):
            if isinstance(loc, int):
                loc = Fraction(loc)
            elif not isinstance(loc, (Fraction, FieldElement)):
                raise ArgumentError(f"exact mode needs rational or algebraic locations, got {loc!r}")
            merged[loc] = merged.get(loc, 0.0) + float(mass)
        keys = list(merged)
        if any(isinstance(k, FieldElement) for k in keys):
            keys.sort(key=to_mpfr)
        else:
            keys.sort()
        self._locations = tuple(keys)
        self._masses = np.array([merged[k] for k in keys], dtype=float)
        self.overlaps = overlaps + (len(locs) - len(keys))

    @classmethod
    def dirac(cls, location=0) -> 'AtomicMeasure':
        if isinstance(location, float):
            return cls(np.array([location]), [1.0])
        return cls([location], [1.0])

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple], exact: Optional[bool] = None) -> 'AtomicMeasure':
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [float(p[1]) for p in pairs], exact=exact)

    @property
    def locations(self):
        """Sorted locations: float array, or tuple of exact numbers"""
        return self._locations

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    def float_locations(self) -> np.ndarray:
        if self.exact:
            return np.array([float(v) for v in self._locations], dtype=float)
        return self._locations

    @property
    def total_mass(self) -> float:
        return float(self._masses.sum())

    def __len__(self):
        return int(self._masses.size)

    def support_bounds(self) -> Tuple[float, float]:
        locs = self.float_locations()
        if locs.size == 0:
            raise ArgumentError("empty measure has no support")
        return float(locs[0]), float(locs[-1])

    def to_float(self) -> 'AtomicMeasure':
        if not self.exact:
            return self
        return AtomicMeasure(self.float_locations(), self._masses, overlaps=self.overlaps, exact=False)

    def pairs(self):
        return list(zip(self._locations, self._masses.tolist()))

    def to_json(self) -> dict:
        if self.exact:
            atoms = [[str(v) if isinstance(v, Fraction) else float(v), m]
                     for v, m in zip(self._locations, self._masses.tolist())]
        else:
            atoms = [[float(v), m] for v, m in zip(self._locations.tolist(), self._masses.tolist())]
        return {'atoms': atoms}

    @classmethod
    def from_json(cls, data: dict, exact: bool = False) -> 'AtomicMeasure':
        """Atoms may carry exact text locations such as "1/3" """
        if 'atoms' not in data:
            raise ArgumentError("atomic measure JSON needs an 'atoms' list")
        locations = []
        masses = []
        for atom in data['atoms']:
            if len(atom) != 2:
                raise ArgumentError(f"atom must be [location, mass], got {atom!r}")
            loc = parse_real(atom[0])
            if exact:
                if not loc.is_exact:
                    raise ArgumentError(f"location {atom[0]!r} has no exact representation")
                locations.append(loc.exact())
            else:
                locations.append(loc.value)
            masses.append(float(parse_real(atom[1]).value))
        if exact:
            return cls(locations, masses, exact=True)
        return cls(np.array(locations, dtype=float), masses, exact=False)

    def __repr__(self):
        mode = 'exact' if self.exact else 'float'
        return f"AtomicMeasure({len(self)} atoms, {mode}, overlaps={self.overlaps})"


def _exact_factor(value):
    if isinstance(value, (int, Fraction, FieldElement)):
        return value
    return None


def affine_image(src: AtomicMeasure, scale, offset=0) -> AtomicMeasure:
    """Push src forward under x -> scale*x + offset"""
    if scale == 0:
        raise ArgumentError("affine_image needs a nonzero scale")

    exact_scale = _exact_factor(scale)
    exact_offset = _exact_factor(offset)
    if src.exact and exact_scale is not None and exact_offset is not None:
        locs = [exact_scale * v + exact_offset for v in src.locations]
        return AtomicMeasure(locs, src.masses, overlaps=src.overlaps, exact=True)

    locs = float(scale) * src.float_locations() + float(offset)
    return AtomicMeasure(locs, src.masses, overlaps=src.overlaps, exact=False)


def convolve_atoms(a: AtomicMeasure, b: AtomicMeasure) -> AtomicMeasure:
    """Distribution of x + y for independent x ~ a, y ~ b"""
    _check_capacity(len(a) * len(b), "atomic convolution")
    base_overlaps = a.overlaps + b.overlaps

    if a.exact and b.exact:
        locs = [x + y for x in a.locations for y in b.locations]
        masses = np.multiply.outer(a.masses, b.masses).ravel()
        return AtomicMeasure(locs, masses, overlaps=base_overlaps, exact=True)

    locs = np.add.outer(a.float_locations(), b.float_locations()).ravel()
    masses = np.multiply.outer(a.masses, b.masses).ravel()
    return AtomicMeasure(locs, masses, overlaps=base_overlaps, exact=False)


def renormalize(src: AtomicMeasure, bounds: Tuple) -> AtomicMeasure:
    """Map the interval bounds = (lo, hi) affinely onto [0, 1]"""
    lo, hi = bounds
    if hi == lo:
        return affine_image(src, 1, -lo)
    if isinstance(lo, (int, Fraction)) and isinstance(hi, (int, Fraction)):
        width = Fraction(hi) - Fraction(lo)
        return affine_image(src, 1 / width, -Fraction(lo) / width)
    width = float(hi) - float(lo)
    return affine_image(src, 1.0 / width, -float(lo) / width)


class DyadicMeasure:
    """
    Masses on the grid 2^-m Z

    Entries are kept as sorted unique integer indices with positive masses;
    circle geometry reduces indices mod 2^m. A dense copy is held when the
    occupancy exceeds 1/8 of the grid.
    """

    __slots__ = ('scale_m', 'geometry', '_indices', '_masses', '_dense')

    def __init__(self, scale_m: int, indices, masses, geometry: str = 'circle'):
        self.scale_m = _check_scale(scale_m)
        self.geometry = _check_geometry(geometry)

        indices = np.asarray(indices, dtype=np.int64).ravel()
        masses = np.asarray(masses, dtype=float).ravel()
        if indices.size != masses.size:
            raise ArgumentError("indices and masses must have the same length")
        if np.any(masses < 0):
            raise ArgumentError("dyadic masses must be nonnegative")

        if self.geometry == 'circle':
            indices = np.mod(indices, np.int64(1) << self.scale_m)

        keep = masses > 0
        indices, masses = indices[keep], masses[keep]
        if indices.size and np.any(np.diff(indices) <= 0):
            indices, inverse = np.unique(indices, return_inverse=True)
            masses = np.bincount(inverse.ravel(), weights=masses, minlength=indices.size)

        indices.setflags(write=False)
        masses.setflags(write=False)
        self._indices = indices
        self._masses = masses
        self._dense = None
        if self.occupancy_is_dense():
            self._dense = self._build_dense()

    def occupancy_is_dense(self) -> bool:
        if self.geometry != 'circle' or self.scale_m > settings.DENSE_SCALE_CAP:
            return False
        return self._indices.size * 8 > (1 << self.scale_m)

    @property
    def storage(self) -> str:
        return 'dense' if self._dense is not None else 'sparse'

    def _build_dense(self) -> np.ndarray:
        dense = np.zeros(1 << self.scale_m, dtype=float)
        dense[self._indices] = self._masses
        dense.setflags(write=False)
        return dense

    def to_dense(self) -> np.ndarray:
        """Full mass vector over [0, 2^m) (circle geometry)"""
        if self.geometry != 'circle':
            raise ArgumentError("dense vectors are defined for circle geometry only")
        if self.scale_m > settings.DENSE_SCALE_CAP:
            raise ConfigError(f"scale m={self.scale_m} exceeds the dense scale cap {settings.DENSE_SCALE_CAP}")
        if self._dense is None:
            return self._build_dense()
        return self._dense

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def total_mass(self) -> float:
        return float(self._masses.sum())

    @property
    def max_mass(self) -> float:
        return float(self._masses.max()) if self._masses.size else 0.0

    def __len__(self):
        return int(self._indices.size)

    def entries(self) -> Dict[int, float]:
        return dict(zip(self._indices.tolist(), self._masses.tolist()))

    def mass_at(self, index: int) -> float:
        pos = np.searchsorted(self._indices, index)
        if pos < self._indices.size and self._indices[pos] == index:
            return float(self._masses[pos])
        return 0.0

    def to_json(self) -> dict:
        return {
            'geometry': self.geometry,
            'scale_m': self.scale_m,
            'entries': [[i, m] for i, m in zip(self._indices.tolist(), self._masses.tolist())],
        }

    @classmethod
    def from_json(cls, data: dict) -> 'DyadicMeasure':
        missing = {'geometry', 'scale_m', 'entries'} - set(data)
        if missing:
            raise ArgumentError(f"dyadic measure JSON is missing {sorted(missing)}")
        entries = data['entries']
        return cls(
            data['scale_m'],
            [int(e[0]) for e in entries],
            [float(e[1]) for e in entries],
            geometry=data['geometry'],
        )

    def __repr__(self):
        return f"DyadicMeasure(m={self.scale_m}, {self.geometry}, {len(self)} entries, {self.storage})"


def uniform_measure(m: int, indices: Optional[Sequence[int]] = None, geometry: str = 'circle') -> DyadicMeasure:
    """Uniform probability on the given indices (all of [0, 2^m) by default)"""
    if indices is None:
        indices = np.arange(1 << _check_scale(m), dtype=np.int64)
    indices = np.unique(np.asarray(indices, dtype=np.int64))
    if indices.size == 0:
        raise ArgumentError("uniform measure needs at least one index")
    return DyadicMeasure(m, indices, np.full(indices.size, 1.0 / indices.size), geometry=geometry)


def discretize(src: AtomicMeasure, m: int, geometry: str = 'line',
               window: Tuple[float, float] = (0.0, 1.0)) -> DyadicMeasure:
    """
    Bin atoms into [j 2^-m, (j+1) 2^-m)

    Args:
        src: atomic measure
        m: scale
        geometry: 'circle' reduces locations mod 1; 'line' requires them in window
        window: closed interval the line locations must lie in

    Returns:
        DyadicMeasure at scale m
    """
    m = _check_scale(m)
    _check_geometry(geometry)
    locs = src.float_locations()

    if geometry == 'circle':
        locs = np.mod(locs, 1.0)
    else:
        lo, hi = float(window[0]), float(window[1])
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if locs.size and (locs[0] < lo - slack or locs[-1] > hi + slack):
            raise RangeError(
                f"atoms span [{locs[0]!r}, {locs[-1]!r}], outside the declared window [{lo}, {hi}]"
            )

    indices = np.floor(np.ldexp(locs, m)).astype(np.int64)
    return DyadicMeasure(m, indices, src.masses, geometry=geometry)


def lq_norm(dm: DyadicMeasure, q: float) -> float:
    """Sum of mass^q over the entries; the largest mass for q = inf"""
    if q == float('inf'):
        return dm.max_mass
    if not q > 1:
        raise DomainError(f"lq_norm needs q > 1, got {q}")
    return float(np.sum(dm.masses ** q))


def _aggregate(indices: np.ndarray, masses: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    uniq, inverse = np.unique(indices, return_inverse=True)
    return uniq, np.bincount(inverse.ravel(), weights=masses, minlength=uniq.size)


def _convolve_direct(a: DyadicMeasure, b: DyadicMeasure, modulus: Optional[int]):
    limit = max(1, settings.DIRECT_CONV_LIMIT)
    chunk = max(1, limit // max(1, len(b)))
    parts_idx = []
    parts_mass = []
    for start in range(0, len(a), chunk):
        ia = a.indices[start:start + chunk]
        ma = a.masses[start:start + chunk]
        idx = np.add.outer(ia, b.indices).ravel()
        if modulus is not None:
            idx = np.mod(idx, modulus)
        idx, mass = _aggregate(idx, np.multiply.outer(ma, b.masses).ravel())
        parts_idx.append(idx)
        parts_mass.append(mass)
    if len(parts_idx) == 1:
        return parts_idx[0], parts_mass[0]
    return _aggregate(np.concatenate(parts_idx), np.concatenate(parts_mass))


def _clamp_and_rescale(values: np.ndarray, target_mass: float) -> np.ndarray:
    values = np.where(values < settings.FFT_CLAMP, 0.0, values)
    total = values.sum()
    if total > 0:
        values *= target_mass / total
    return values


def convolve(a: DyadicMeasure, b: DyadicMeasure, geometry: Optional[str] = None) -> DyadicMeasure:
    """Distribution of index sums (mod 2^m in circle geometry)"""
    if a.scale_m != b.scale_m:
        raise ArgumentError(f"scale mismatch: {a.scale_m} vs {b.scale_m}")
    if a.geometry != b.geometry:
        raise ArgumentError(f"geometry mismatch: {a.geometry} vs {b.geometry}")
    geometry = _check_geometry(geometry or a.geometry)
    if geometry != a.geometry:
        raise ArgumentError(f"cannot convolve {a.geometry} measures in {geometry} geometry")

    m = a.scale_m
    target_mass = a.total_mass * b.total_mass
    if len(a) == 0 or len(b) == 0:
        return DyadicMeasure(m, [], [], geometry=geometry)

    work = len(a) * len(b)
    if work <= settings.DIRECT_CONV_LIMIT:
        logger.debug(f"direct convolution at m={m}: {len(a)} x {len(b)}")
        idx, mass = _convolve_direct(a, b, (1 << m) if geometry == 'circle' else None)
        return DyadicMeasure(m, idx, mass, geometry=geometry)

    if geometry == 'circle':
        n = 1 << m
        if n <= settings.FFT_MAX_LENGTH and m <= settings.DENSE_SCALE_CAP:
            logger.debug(f"circular FFT convolution at m={m}")
            values = sp_fft.irfft(sp_fft.rfft(a.to_dense()) * sp_fft.rfft(b.to_dense()), n=n)
            values = _clamp_and_rescale(values, target_mass)
            idx = np.flatnonzero(values)
            return DyadicMeasure(m, idx, values[idx], geometry=geometry)
    else:
        span_a = int(a.indices[-1] - a.indices[0]) + 1
        span_b = int(b.indices[-1] - b.indices[0]) + 1
        if span_a + span_b - 1 <= settings.FFT_MAX_LENGTH:
            logger.debug(f"linear FFT convolution at m={m}: spans {span_a}, {span_b}")
            da = np.zeros(span_a)
            da[a.indices - a.indices[0]] = a.masses
            db = np.zeros(span_b)
            db[b.indices - b.indices[0]] = b.masses
            values = _clamp_and_rescale(signal.fftconvolve(da, db), target_mass)
            idx = np.flatnonzero(values)
            return DyadicMeasure(m, idx + a.indices[0] + b.indices[0], values[idx], geometry=geometry)

    logger.debug(f"chunked direct convolution at m={m}: {len(a)} x {len(b)}")
    idx, mass = _convolve_direct(a, b, (1 << m) if geometry == 'circle' else None)
    return DyadicMeasure(m, idx, mass, geometry=geometry)


def restrict_normalize(dm: DyadicMeasure, s: int, j: int) -> DyadicMeasure:
    """Normalized restriction to the dyadic interval [j 2^-s, (j+1) 2^-s)"""
    if s < 0 or s > dm.scale_m:
        raise ArgumentError(f"interval scale s={s} must lie in [0, {dm.scale_m}]")
    selected = (dm.indices >> (dm.scale_m - s)) == j
    mass = dm.masses[selected]
    total = mass.sum()
    if total <= 0:
        raise EmptyRestrictionError(f"no mass on the dyadic interval (s={s}, j={j})")
    return DyadicMeasure(dm.scale_m, dm.indices[selected], mass / total, geometry=dm.geometry)


def coarsen(dm: DyadicMeasure, m_coarse: int) -> DyadicMeasure:
    """Re-bin onto the grid 2^-m_coarse Z"""
    if m_coarse < 0 or m_coarse > dm.scale_m:
        raise ArgumentError(f"coarse scale {m_coarse} must lie in [0, {dm.scale_m}]")
    if m_coarse == dm.scale_m:
        return dm
    idx, mass = _aggregate(dm.indices >> (dm.scale_m - m_coarse), dm.masses)
    return DyadicMeasure(m_coarse, idx, mass, geometry=dm.geometry)
