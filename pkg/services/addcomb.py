"""
Fractal Lq Toolkit - Additive Combinatorics Service
Version: 1.0.0

Sumsets, doubling and additive energy of 2^-m sets, the 2^D-ary branching
tree, the regularization pipeline (uniform subsets, collapsing, centering)
and the empirical inverse-theorem witness built from it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy import signal

from config.settings import settings
from services.dyadic_measure import DyadicMeasure, GEOMETRIES, convolve, lq_norm
from utils.errors import (
    ArgumentError, CapacityError, DegenerateInputError, DomainError, PreconditionError,
)

logger = logging.getLogger(__name__)

WITNESS_LABEL = ("empirical witness; the Balog-Szemeredi-Gowers and Bourgain "
                 "extraction steps are not implemented")
LEVEL_TOLERANCE = 1e-9


class DyadicSet:
    """Sorted distinct grid indices at scale 2^-m"""

    __slots__ = ('scale_m', 'geometry', '_indices')

    def __init__(self, scale_m: int, indices, geometry: str = 'circle'):
        if geometry not in GEOMETRIES:
            raise ArgumentError(f"geometry must be one of {GEOMETRIES}, got {geometry!r}")
        if int(scale_m) != scale_m or scale_m < 0:
            raise ArgumentError(f"scale must be a nonnegative integer, got {scale_m!r}")
        self.scale_m = int(scale_m)
        self.geometry = geometry
        indices = np.asarray(indices, dtype=np.int64).ravel()
        if geometry == 'circle':
            indices = np.mod(indices, np.int64(1) << self.scale_m)
        indices = np.unique(indices)
        indices.setflags(write=False)
        self._indices = indices

    @classmethod
    def from_measure(cls, dm: DyadicMeasure) -> 'DyadicSet':
        """Support of a dyadic measure"""
        return cls(dm.scale_m, dm.indices, geometry=dm.geometry)

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    def __len__(self):
        return int(self._indices.size)

    def __eq__(self, other):
        if not isinstance(other, DyadicSet):
            return NotImplemented
        return (self.scale_m == other.scale_m and self.geometry == other.geometry
                and np.array_equal(self._indices, other._indices))

    def __hash__(self):
        return hash((self.scale_m, self.geometry, self._indices.tobytes()))

    def translate(self, shift: int) -> 'DyadicSet':
        return DyadicSet(self.scale_m, self._indices + int(shift), geometry=self.geometry)

    def indicator(self) -> DyadicMeasure:
        """Unit masses on the set (not normalized)"""
        return DyadicMeasure(self.scale_m, self._indices, np.ones(self._indices.size), geometry=self.geometry)

    def to_json(self) -> dict:
        return {'scale_m': self.scale_m, 'geometry': self.geometry, 'indices': self._indices.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> 'DyadicSet':
        if 'scale_m' not in data or 'indices' not in data:
            raise ArgumentError("dyadic set JSON needs 'scale_m' and 'indices'")
        return cls(data['scale_m'], data['indices'], geometry=data.get('geometry', 'circle'))

    def __repr__(self):
        return f"DyadicSet(m={self.scale_m}, {self.geometry}, {len(self)} points)"


def _check_pair(a: DyadicSet, b: DyadicSet):
    if a.scale_m != b.scale_m:
        raise ArgumentError(f"scale mismatch: {a.scale_m} vs {b.scale_m}")
    if a.geometry != b.geometry:
        raise ArgumentError(f"geometry mismatch: {a.geometry} vs {b.geometry}")


def _check_levels(a: DyadicSet, D: int) -> int:
    if D < 1:
        raise ArgumentError(f"level width D must be positive (got {D})")
    if a.scale_m % D:
        raise ArgumentError(f"D={D} does not divide m={a.scale_m}")
    return a.scale_m // D


def _sum_squares(counts: np.ndarray) -> int:
    if counts.size and int(counts.max()) ** 2 * counts.size >= 2 ** 62:
        return int(sum(int(c) * int(c) for c in counts))
    return int(np.dot(counts, counts))


def representation(a: DyadicSet, b: DyadicSet) -> Tuple[np.ndarray, np.ndarray]:
    """Sums s with r(s) = #{(a, b): a + b = s} > 0, through indicator convolution"""
    _check_pair(a, b)
    if len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    conv = convolve(a.indicator(), b.indicator())
    counts = np.rint(conv.masses).astype(np.int64)
    keep = counts > 0
    return conv.indices[keep], counts[keep]


def sumset(a: DyadicSet, b: DyadicSet, geometry: Optional[str] = None) -> DyadicSet:
    """A + B (mod 2^m in circle geometry)"""
    _check_pair(a, b)
    if geometry is not None and geometry != a.geometry:
        raise ArgumentError(f"cannot add {a.geometry} sets in {geometry} geometry")
    sums, _ = representation(a, b)
    return DyadicSet(a.scale_m, sums, geometry=a.geometry)


def doubling(a: DyadicSet) -> float:
    """|A + A| / |A|"""
    if len(a) == 0:
        raise DegenerateInputError("doubling constant of an empty set")
    return len(sumset(a, a)) / len(a)


def additive_energy(a: DyadicSet, b: DyadicSet, method: str = 'auto') -> int:
    """
    Number of quadruples with a1 + b1 = a2 + b2

    Args:
        method: 'auto' (indicator convolution), 'fft' (dense transform of the
                indicators) or 'naive' (enumerated pair sums)
    """
    _check_pair(a, b)
    if len(a) == 0 or len(b) == 0:
        return 0
    if method == 'auto':
        return _sum_squares(representation(a, b)[1])
    if method == 'naive':
        if len(a) * len(b) > settings.CAPACITY:
            raise CapacityError("pair sums exceed the capacity",
                                requested=len(a) * len(b), capacity=settings.CAPACITY)
        sums = np.add.outer(a.indices, b.indices).ravel()
        if a.geometry == 'circle':
            sums = np.mod(sums, np.int64(1) << a.scale_m)
        _, counts = np.unique(sums, return_counts=True)
        return _sum_squares(counts.astype(np.int64))
    if method == 'fft':
        return _sum_squares(_fft_counts(a, b))
    raise ArgumentError(f"unknown energy method {method!r}")


def _fft_counts(a: DyadicSet, b: DyadicSet) -> np.ndarray:
    if a.geometry == 'circle':
        n = 1 << a.scale_m
        if n > settings.FFT_MAX_LENGTH:
            raise CapacityError(f"dense transform of length {n} exceeds the FFT limit",
                                requested=n, capacity=settings.FFT_MAX_LENGTH)
        da = np.zeros(n)
        da[a.indices] = 1.0
        db = np.zeros(n)
        db[b.indices] = 1.0
        values = sp_fft.irfft(sp_fft.rfft(da) * sp_fft.rfft(db), n=n)
    else:
        da = np.zeros(int(a.indices[-1] - a.indices[0]) + 1)
        da[a.indices - a.indices[0]] = 1.0
        db = np.zeros(int(b.indices[-1] - b.indices[0]) + 1)
        db[b.indices - b.indices[0]] = 1.0
        values = signal.fftconvolve(da, db)
    counts = np.rint(values).astype(np.int64)
    return counts[counts > 0]


# Branching trees

@dataclass
class LevelBranching:
    level: int
    uniform: bool
    minimum: int
    maximum: int
    histogram: Dict[int, int]

    @property
    def count(self) -> Optional[int]:
        return self.minimum if self.uniform else None


@dataclass
class BranchingProfile:
    D: int
    ell: int
    per_level: List[LevelBranching]

    @property
    def is_uniform(self) -> bool:
        return all(level.uniform for level in self.per_level)

    @property
    def R(self) -> Optional[List[int]]:
        """Offspring counts per level, None unless uniform"""
        if not self.is_uniform:
            return None
        return [level.minimum for level in self.per_level]

    def to_json(self) -> dict:
        return {
            'D': self.D,
            'ell': self.ell,
            'uniform': self.is_uniform,
            'levels': [{'s': lv.level, 'uniform': lv.uniform, 'min': lv.minimum, 'max': lv.maximum,
                        'histogram': {str(k): v for k, v in sorted(lv.histogram.items())}}
                       for lv in self.per_level],
        }


def _children(indices: np.ndarray, m: int, D: int, s: int):
    """Distinct level-(s+1) intervals and, for each, its parent position"""
    children = np.unique(indices >> (m - (s + 1) * D))
    parents, parent_of, counts = np.unique(children >> D, return_inverse=True, return_counts=True)
    return children, parents, parent_of.ravel(), counts


def branching(a: DyadicSet, D: int) -> BranchingProfile:
    """Offspring counts of the 2^D-ary tree over A at each level s in [0, ell)"""
    ell = _check_levels(a, D)
    m = a.scale_m
    levels = []
    for s in range(ell):
        if len(a) == 0:
            levels.append(LevelBranching(s, True, 0, 0, {}))
            continue
        _, _, _, counts = _children(a.indices, m, D, s)
        values, freq = np.unique(counts, return_counts=True)
        levels.append(LevelBranching(
            level=s,
            uniform=values.size == 1,
            minimum=int(values[0]),
            maximum=int(values[-1]),
            histogram={int(v): int(f) for v, f in zip(values, freq)},
        ))
    return BranchingProfile(D=D, ell=ell, per_level=levels)


def _branching_class(counts: np.ndarray) -> np.ndarray:
    # N in {1, 2} -> 0, N in [2^j + 1, 2^(j+1)] -> j
    return np.maximum(0, np.ceil(np.log2(counts)).astype(np.int64) - 1)


def extract_uniform(a: DyadicSet, D: int) -> DyadicSet:
    """
    (D, ell)-uniform subset with |A'| >= (2D)^-ell |A|

    Bottom-up dyadic pigeonholing: at level s the parents are grouped by
    offspring class, the largest class is kept (ties to the smallest class)
    and every kept parent retains its leftmost children, as many as the
    smallest offspring count in the class.
    """
    ell = _check_levels(a, D)
    m = a.scale_m
    indices = a.indices
    for s in range(ell - 1, -1, -1):
        if indices.size == 0:
            break
        children, parents, parent_of, counts = _children(indices, m, D, s)
        classes = _branching_class(counts)
        points_per_parent = np.bincount(
            np.searchsorted(parents, indices >> (m - s * D)), minlength=parents.size)
        class_sizes = np.bincount(classes, weights=points_per_parent)
        chosen = int(np.argmax(class_sizes))
        in_class = classes == chosen
        target = int(counts[in_class].min())

        first_child = np.searchsorted(children >> D, children >> D, side='left')
        rank = np.arange(children.size) - first_child
        kept = children[in_class[parent_of] & (rank < target)]
        indices = indices[np.isin(indices >> (m - (s + 1) * D), kept)]
        logger.debug(f"uniform extraction level {s}: class {chosen}, R={target}, {indices.size} points")
    return DyadicSet(m, indices, geometry=a.geometry)


def collapse(a: DyadicSet, D: int, levels: Iterable[int]) -> DyadicSet:
    """Keep only the leftmost child at each chosen level of a uniform set"""
    ell = _check_levels(a, D)
    if not branching(a, D).is_uniform:
        raise PreconditionError("collapse needs a (D, ell)-uniform set")
    levels = sorted(set(levels))
    if any(s < 0 or s >= ell for s in levels):
        raise ArgumentError(f"levels must lie in [0, {ell})")
    m = a.scale_m
    indices = a.indices
    for s in levels:
        children = np.unique(indices >> (m - (s + 1) * D))
        first_child = np.searchsorted(children >> D, children >> D, side='left')
        kept = children[np.arange(children.size) == first_child]
        indices = indices[np.isin(indices >> (m - (s + 1) * D), kept)]
    return DyadicSet(m, indices, geometry=a.geometry)


# Centering

@dataclass
class CenterResult:
    translation: int
    subset: DyadicSet
    shifted: DyadicSet
    shifts: List[int]


def _middle_half(values: np.ndarray, width: int) -> np.ndarray:
    offset = np.mod(values, width)
    return (offset >= width // 4) & (offset < 3 * width // 4)


def is_centered(a: DyadicSet, translation: int, D: int) -> bool:
    """y + x lies in the middle half of its 2^(-sD) interval for every y and level s"""
    ell = _check_levels(a, D)
    shifted = a.indices + int(translation)
    return all(bool(np.all(_middle_half(shifted, 1 << (a.scale_m - s * D)))) for s in range(ell))


def center(a: DyadicSet, D: int) -> CenterResult:
    """
    Translation x and subset A' with y + x in the middle half of each
    2^(-sD) interval, |A'| >= 3^-ell |A|

    Per level (finest first) the shift is one of 0, +w/4, -w/4 for the
    interval width w, chosen by the largest class of points it centers,
    ties preferring 0, then +, then -.
    """
    ell = _check_levels(a, D)
    if D < 2:
        raise ArgumentError("centering needs D >= 2")
    m = a.scale_m
    indices = a.indices
    x = 0
    shifts = [0] * ell
    for s in range(ell - 1, -1, -1):
        width = 1 << (m - s * D)
        offset = np.mod(indices + x, width)
        quarter = width // 4
        classes = [
            (0, (offset >= quarter) & (offset < 3 * quarter)),
            (quarter, offset < quarter),
            (-quarter, offset >= 3 * quarter),
        ]
        shift, mask = max(classes, key=lambda item: int(item[1].sum()))
        shifts[s] = shift
        x += shift
        indices = indices[mask]
    if a.geometry == 'circle':
        x %= 1 << m
    subset = DyadicSet(m, indices, geometry=a.geometry)
    return CenterResult(translation=x, subset=subset, shifted=subset.translate(x), shifts=shifts)


# Level sets and the witness pipeline

@dataclass
class LevelSet:
    """Dyadic mass level of a measure"""

    members: DyadicSet
    j: int
    reference: float
    lower: float
    upper: float
    fraction: float
    levels: Dict[int, float]
    within_bound: bool

    def to_json(self) -> dict:
        return {
            'j': self.j, 'size': len(self.members), 'reference': self.reference,
            'thresholds': [self.lower, self.upper], 'fraction': self.fraction,
            'levels': {str(k): v for k, v in sorted(self.levels.items())},
            'within_bound': self.within_bound,
        }


def dual_exponent(q: float) -> float:
    return q / (q - 1.0)


def level_sets(mu: DyadicMeasure, q: float, epsilon: float = 0.0, by: str = 'norm') -> LevelSet:
    """
    Split supp mu into levels 2^(-j-1) N < mu(x) <= 2^-j N and select one

    by='norm': N = ||mu||_q^q' and the level capturing most of sum mu^q;
    by='mass': N = 2^-m and the level capturing most mass.
    Ties go to the smallest j. within_bound reports j <= 2 epsilon q' m.
    """
    if not q > 1:
        raise DomainError(f"level sets need q > 1, got {q}")
    if by not in ('norm', 'mass'):
        raise ArgumentError(f"level selection must be 'norm' or 'mass', got {by!r}")
    if len(mu) == 0:
        raise DegenerateInputError("level sets of an empty measure")
    m = mu.scale_m
    masses = mu.masses
    power_sum = lq_norm(mu, q)
    if by == 'norm':
        reference = power_sum ** (1.0 / (q - 1.0))
        weights = masses ** q
    else:
        reference = 2.0 ** -m
        weights = masses
    j_values = np.floor(np.log2(reference / masses) + LEVEL_TOLERANCE).astype(np.int64)

    levels_present, inverse = np.unique(j_values, return_inverse=True)
    captured = np.bincount(inverse.ravel(), weights=weights) / weights.sum()
    best = int(np.argmax(captured))
    j = int(levels_present[best])
    members = DyadicSet(m, mu.indices[j_values == j], geometry=mu.geometry)
    return LevelSet(
        members=members, j=j, reference=float(reference),
        lower=float(reference * 2.0 ** (-j - 1)), upper=float(reference * 2.0 ** -j),
        fraction=float(captured[best]),
        levels={int(k): float(v) for k, v in zip(levels_present, captured)},
        within_bound=j <= 2 * epsilon * dual_exponent(q) * m,
    )


@dataclass
class Clause:
    name: str
    statement: str
    measured: object
    bound: object
    passes: bool
    kind: str

    def to_json(self) -> dict:
        return {'name': self.name, 'statement': self.statement, 'measured': self.measured,
                'bound': self.bound, 'pass': self.passes, 'kind': self.kind}


@dataclass
class WitnessReport:
    q: float
    D: int
    ell: int
    delta: float
    hypothesis_ratio: float
    implied_epsilon: float
    translation_a: int
    translation_b: int
    a: DyadicSet
    b: DyadicSet
    R_a: List[int]
    R_b: List[int]
    full_levels: List[int]
    clauses: List[Clause]
    label: str = WITNESS_LABEL
    diagnostics: Dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.passes for c in self.clauses)

    def clause(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            'label': self.label,
            'q': self.q, 'D': self.D, 'ell': self.ell, 'delta': self.delta,
            'hypothesis_ratio': self.hypothesis_ratio,
            'implied_epsilon': self.implied_epsilon,
            'translation_a': self.translation_a, 'translation_b': self.translation_b,
            'size_a': len(self.a), 'size_b': len(self.b),
            'R_a': self.R_a, 'R_b': self.R_b,
            'full_levels': self.full_levels,
            'clauses': [c.to_json() for c in self.clauses],
            'diagnostics': self.diagnostics,
        }


def _regular_subset(level: LevelSet, D: int, use_center: bool) -> Tuple[int, DyadicSet, DyadicSet]:
    """(translation, subset in original coordinates, uniform translated subset)"""
    members = level.members
    translation = 0
    if use_center:
        centered = center(members, D)
        translation = centered.translation
        members = centered.shifted
    uniform = extract_uniform(members, D)
    return translation, uniform.translate(-translation), uniform


def _masses_on(mu: DyadicMeasure, s: DyadicSet) -> np.ndarray:
    pos = np.searchsorted(mu.indices, s.indices)
    return mu.masses[pos]


def _ratio_clause(name: str, statement: str, masses: np.ndarray) -> Clause:
    ratio = float(masses.max() / masses.min()) if masses.size else 1.0
    return Clause(name, statement, ratio, 2.0, ratio <= 2.0 + LEVEL_TOLERANCE, 'construction')


def inverse_witness(mu: DyadicMeasure, nu: DyadicMeasure, q: float, D: int, delta: float,
                    center: bool = True, collapse_b: bool = False) -> WitnessReport:
    """
    Run level_sets, centering and uniform extraction on mu and nu and
    evaluate the structural clauses on the sets produced

    Args:
        center: translate and center both sets (halves full branching)
        collapse_b: collapse B at every level where A lacks full branching,
                    so the branching dichotomy holds by construction
    """
    if mu.scale_m != nu.scale_m:
        raise ArgumentError(f"scale mismatch: {mu.scale_m} vs {nu.scale_m}")
    if not q > 1:
        raise DomainError(f"inverse witness needs q > 1, got {q}")
    m = mu.scale_m
    if m % D:
        raise ArgumentError(f"D={D} does not divide m={m}")
    ell = m // D
    qd = dual_exponent(q)

    mu_power = lq_norm(mu, q)
    nu_power = lq_norm(nu, q)
    ratio = (lq_norm(convolve(mu, nu), q) / mu_power) ** (1.0 / q)
    implied_epsilon = -math.log2(ratio) / m if ratio > 0 else float('inf')

    level_a = level_sets(mu, q, by='norm')
    level_b = level_sets(nu, q, by='mass')
    translation_a, a_set, a_uniform = _regular_subset(level_a, D, center)
    translation_b, b_set, b_uniform = _regular_subset(level_b, D, center)
    R_a = branching(a_uniform, D).R
    full_threshold = 2.0 ** ((1.0 - delta) * D)
    full_levels = [s for s in range(ell) if R_a[s] >= full_threshold]
    if collapse_b:
        b_uniform = collapse(b_uniform, D, [s for s in range(ell) if s not in full_levels])
        b_set = b_uniform.translate(-translation_b)
    R_b = branching(b_uniform, D).R

    a_masses = _masses_on(mu, a_set)
    b_masses = _masses_on(nu, b_set)
    a_fraction = (float(np.sum(a_masses ** q)) / mu_power) ** (1.0 / q)
    b_mass = float(b_masses.sum())
    floor = 2.0 ** (-delta * m)

    dichotomy = [s for s in range(ell) if not (R_b[s] == 1 or R_a[s] >= full_threshold)]
    lower = math.log2(nu_power ** (-qd / q)) - delta * m
    upper = math.log2(mu_power ** (-qd / q)) + delta * m
    measured_vi = D * len(full_levels)

    clauses = [
        Clause('A-i', '||mu|_A||_q >= 2^(-delta m) ||mu||_q', a_fraction, floor, a_fraction >= floor, 'measured'),
        _ratio_clause('A-ii', 'mu(y) <= 2 mu(x) on A', a_masses),
        Clause('A-iii', 'A is (D, ell)-uniform', R_a, None, R_a is not None, 'construction'),
        Clause('A-iv', 'y + x in the middle half of D_sD(y + x) on A', translation_a, None,
               is_centered(a_set, translation_a, D) if center else False,
               'construction' if center else 'skipped'),
        Clause('B-i', 'nu(B) >= 2^(-delta m)', b_mass, floor, b_mass >= floor, 'measured'),
        _ratio_clause('B-ii', 'nu(y) <= 2 nu(x) on B', b_masses),
        Clause('B-iii', 'B is (D, ell)-uniform', R_b, None, R_b is not None, 'construction'),
        Clause('B-iv', 'y + x in the middle half of D_sD(y + x) on B', translation_b, None,
               is_centered(b_set, translation_b, D) if center else False,
               'construction' if center else 'skipped'),
        Clause('v', "R''_s = 1 or R'_s >= 2^((1 - delta) D)", dichotomy, [],
               not dichotomy, 'construction' if collapse_b else 'measured'),
        Clause('vi', "log ||nu||_q^-q' - delta m <= D |S| <= log ||mu||_q^-q' + delta m",
               measured_vi, [lower, upper], lower <= measured_vi <= upper, 'measured'),
    ]
    if not center:
        clauses = [c for c in clauses if c.kind != 'skipped']

    report = WitnessReport(
        q=q, D=D, ell=ell, delta=delta, hypothesis_ratio=ratio, implied_epsilon=implied_epsilon,
        translation_a=translation_a, translation_b=translation_b, a=a_set, b=b_set,
        R_a=R_a, R_b=R_b, full_levels=full_levels, clauses=clauses,
        diagnostics={'level_a': level_a.to_json(), 'level_b': level_b.to_json(),
                     'centered': center, 'collapsed_b': collapse_b},
    )
    logger.info(f"inverse witness m={m}, D={D}: ratio {ratio:.6g}, |A|={len(a_set)}, |B|={len(b_set)}, "
                f"{sum(c.passes for c in clauses)}/{len(clauses)} clauses pass")
    return report


# Sumset bounds and transfer

@dataclass
class SumsetBound:
    lhs: int
    rhs: float
    R_a: List[int]
    R_h: List[int]

    @property
    def passes(self) -> bool:
        return self.lhs >= self.rhs

    def to_json(self) -> dict:
        return {'lhs': self.lhs, 'rhs': self.rhs, 'R_a': self.R_a, 'R_h': self.R_h, 'pass': self.passes}


def sumset_bound_check(a: DyadicSet, h: DyadicSet, D: int) -> SumsetBound:
    """|A + H| >= 2^(-m/D) |H| prod_{s: R_s = 1} R'_s for uniform A (R') and H (R)"""
    _check_pair(a, h)
    ell = _check_levels(a, D)
    R_a = branching(a, D).R
    R_h = branching(h, D).R
    if R_a is None or R_h is None:
        raise PreconditionError("sumset bound needs (D, ell)-uniform sets")
    product = 1
    for r_h, r_a in zip(R_h, R_a):
        if r_h == 1:
            product *= r_a
    rhs = 2.0 ** -ell * len(h) * product
    return SumsetBound(lhs=len(sumset(a, h)), rhs=rhs, R_a=R_a, R_h=R_h)


@dataclass
class TransferCheck:
    kappa: float
    hypothesis: bool
    energy: int
    bound: float

    @property
    def passes(self) -> bool:
        return (not self.hypothesis) or self.energy >= self.bound * (1.0 - LEVEL_TOLERANCE)


def lq_transfer_check(a: DyadicSet, b: DyadicSet, q: float, kappa: Optional[float] = None) -> TransferCheck:
    """
    If ||1_A * 1_B||_q >= 2^(-kappa m) |A|^(1/q) |B| then
    ||1_A * 1_B||_2^2 >= 2^(-max(q, q') kappa m) |A| |B|^2

    kappa defaults to the smallest value for which the hypothesis holds.
    """
    if not q > 1:
        raise DomainError(f"transfer check needs q > 1, got {q}")
    _, counts = representation(a, b)
    if counts.size == 0:
        raise DegenerateInputError("transfer check needs nonempty sets")
    m = a.scale_m
    norm_q = float(np.sum(counts.astype(float) ** q)) ** (1.0 / q)
    scale = len(a) ** (1.0 / q) * len(b)
    tight = -math.log2(norm_q / scale) / m if m else 0.0
    if kappa is None:
        kappa = tight
    hypothesis = kappa >= tight - LEVEL_TOLERANCE
    bound = 2.0 ** (-max(q, dual_exponent(q)) * kappa * m) * len(a) * len(b) ** 2
    return TransferCheck(kappa=kappa, hypothesis=hypothesis, energy=_sum_squares(counts), bound=bound)


# Generators

def random_uniform_set(rng: np.random.Generator, D: int, ell: int, profile: Optional[Sequence[int]] = None,
                       geometry: str = 'line') -> DyadicSet:
    """Seeded (D, ell, R)-uniform set; R is drawn from [1, 2^D] when not given"""
    width = 1 << D
    if profile is None:
        profile = [int(r) for r in rng.integers(1, width + 1, size=ell)]
    if len(profile) != ell or any(r < 1 or r > width for r in profile):
        raise ArgumentError(f"profile must have {ell} entries in [1, {width}]")
    size = int(np.prod(profile, dtype=object))
    if size > settings.CAPACITY:
        raise CapacityError(f"uniform set of {size} points exceeds the capacity",
                            requested=size, capacity=settings.CAPACITY)
    nodes = np.zeros(1, dtype=np.int64)
    for r in profile:
        keys = rng.random((nodes.size, width))
        digits = np.sort(np.argsort(keys, axis=1)[:, :r], axis=1)
        nodes = ((nodes[:, None] << D) + digits).ravel()
    return DyadicSet(D * ell, nodes, geometry=geometry)


def random_set(rng: np.random.Generator, m: int, size: int, geometry: str = 'circle') -> DyadicSet:
    """Seeded uniformly random subset of [0, 2^m) with the given size"""
    size = min(size, 1 << m)
    return DyadicSet(m, rng.choice(1 << m, size=size, replace=False), geometry=geometry)
