"""
Fractal Lq Toolkit - Separation Service
Version: 1.0.0

Exponential separation diagnostics: the minimum of |P(lambda)| over
polynomials with coefficients in a finite set (branch-and-bound, exact,
interval or float), minimum atom gaps of generated stages, separation
profiles against lambda^(R n), and scans of the normalized log-minimum.
"""

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Sequence, Tuple

import gmpy2
import numpy as np
import pandas as pd

from config.settings import settings
from services.dyadic_measure import AtomicMeasure
from services.models import ConvolutionModel, Model, NonHomIFS, generate_nonhom, iter_stages
from utils.errors import ArgumentError, BudgetError, CapacityError, DegenerateInputError
from utils.exact import ExactReal, FieldElement, parse_real, to_mpfr

logger = logging.getLogger(__name__)

MODES = ('exact', 'interval', 'float')
BASE_PRECISION = 64
DOUBLE_PRECISION = 53
ESCALATED_PRECISION = 128
FLOAT_PRUNE_MARGIN = 1e-12


@dataclass
class PolyMinimum:
    """Result of a polynomial-minimum search"""

    value: object
    coefficients: Optional[Tuple]
    mode: str
    enclosure: Optional[Tuple[float, float]] = None
    nodes: int = 0
    exact_zero: bool = False

    def log2_rate(self, n: int) -> float:
        """(1/n) log2 of the minimum, -inf for an exact zero"""
        if self.exact_zero or self.value == 0:
            return float('-inf')
        return math.log2(float(self.value)) / n

    def to_json(self) -> dict:
        return {
            'value': str(self.value) if isinstance(self.value, Fraction) else float(self.value),
            'coefficients': [str(c) for c in self.coefficients] if self.coefficients else None,
            'mode': self.mode,
            'enclosure': list(self.enclosure) if self.enclosure else None,
            'nodes': self.nodes,
            'exact_zero': self.exact_zero,
        }


class _Found(Exception):
    """Exact zero reached; the search stops"""


class _PolySearch:
    """
    Depth-first branch-and-bound over c_0, ..., c_n

    Works on ints (integer-scaled rational lambda) or floats. A prefix is
    pruned when |partial| - c_max * tail[k + 1] - margin >= incumbent.
    """

    def __init__(self, coeffs: Sequence, weights: Sequence, margin, budget: int,
                 symmetric: bool, leaf_check=None):
        self.coeffs = list(coeffs)
        self.weights = list(weights)
        self.n = len(weights) - 1
        self.cmax = max(abs(c) for c in self.coeffs)
        tails = [0] * (self.n + 2)
        for i in range(self.n, -1, -1):
            tails[i] = tails[i + 1] + abs(self.weights[i])
        self.tails = tails
        self.margin = margin
        self.budget = budget
        self.symmetric = symmetric
        self.leaf_check = leaf_check
        self.incumbent = None
        self.witness = None
        self.nodes = 0
        self._lock = threading.Lock()

    def seed(self, value, witness):
        self.incumbent = value
        self.witness = witness

    def _offer(self, value, witness):
        with self._lock:
            if self.incumbent is None or value < self.incumbent:
                self.incumbent = value
                self.witness = witness

    def _count(self):
        with self._lock:
            self.nodes += 1
            if self.nodes > self.budget:
                raise BudgetError(
                    f"node budget {self.budget} exhausted",
                    best_so_far=self.incumbent, nodes=self.nodes,
                )

    def first_choices(self) -> List:
        return [c for c in self._ordered(0, 0) if not (self.symmetric and c < 0)]

    def _ordered(self, k: int, value) -> List:
        w = self.weights[k]
        return sorted(self.coeffs, key=lambda c: (abs(value + c * w), c))

    def run_from(self, c0):
        self._visit(0, 0, c0, (), False)

    def _visit(self, k: int, value, c, prefix: Tuple, nonzero: bool):
        self._count()
        value = value + c * self.weights[k]
        prefix = prefix + (c,)
        nonzero = nonzero or c != 0
        if k == self.n:
            if not nonzero:
                return
            size = abs(value)
            if self.leaf_check is not None:
                size = self.leaf_check(size, prefix)
            self._offer(size, prefix)
            if size == 0:
                raise _Found()
            return

        lower = abs(value) - self.cmax * self.tails[k + 1] - self.margin
        incumbent = self.incumbent
        if incumbent is not None and lower >= incumbent:
            return
        for child in self._ordered(k + 1, value):
            if self.symmetric and not nonzero and child < 0:
                continue
            self._visit(k + 1, value, child, prefix, nonzero)


def _parse_coefficients(coeff_set: Sequence) -> List[ExactReal]:
    coeffs = [parse_real(c) for c in coeff_set]
    unique = {}
    for c in coeffs:
        unique.setdefault(c.value if not c.is_rational else c.rational, c)
    if not unique or all(c.value == 0 for c in unique.values()):
        raise ArgumentError("coefficient set needs a nonzero element")
    return list(unique.values())


def _is_symmetric(values: Sequence) -> bool:
    return set(values) == {-v for v in values}


def _seed(coeffs: Sequence, weights: Sequence, n: int):
    """The monomial c_min lambda^n, available when 0 is a coefficient"""
    if 0 not in coeffs:
        return None, None
    smallest = min((c for c in coeffs if c != 0), key=lambda c: (abs(c), c < 0))
    return abs(smallest * weights[n]), (0,) * n + (smallest,)


def _run_search(search: _PolySearch, threads: int):
    choices = search.first_choices()
    try:
        if threads <= 1 or len(choices) <= 1:
            for c0 in choices:
                search.run_from(c0)
        else:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                future_to_choice = {executor.submit(search.run_from, c0): c0 for c0 in choices}
                for future in as_completed(future_to_choice):
                    future.result()
    except _Found:
        pass


def _search_rational(coeffs: List[Fraction], lam: Fraction, n: int, budget: int,
                     threads: int) -> PolyMinimum:
    denominator = 1
    for c in coeffs:
        denominator = lcm(denominator, c.denominator)
    ints = [int(c * denominator) for c in coeffs]
    p, q = lam.numerator, lam.denominator
    weights = [p ** i * q ** (n - i) for i in range(n + 1)]

    search = _PolySearch(ints, weights, 0, budget, _is_symmetric(ints))
    search.seed(*_seed(ints, weights, n))
    scale = denominator * q ** n
    try:
        _run_search(search, threads)
    except BudgetError as e:
        if e.best_so_far is not None:
            e.best_so_far = Fraction(e.best_so_far, scale)
        raise

    value = Fraction(search.incumbent, scale)
    witness = tuple(Fraction(c, denominator) for c in search.witness)
    return PolyMinimum(value=value, coefficients=witness, mode='exact', nodes=search.nodes,
                       exact_zero=value == 0)


def _search_float(coeffs: List[float], lam: float, n: int, budget: int, threads: int,
                  leaf_check=None, margin: float = FLOAT_PRUNE_MARGIN) -> _PolySearch:
    weights = [lam ** i for i in range(n + 1)]
    search = _PolySearch(coeffs, weights, margin, budget, _is_symmetric(coeffs), leaf_check)
    search.seed(*_seed(coeffs, weights, n))
    _run_search(search, threads)
    return search


def _lambda_bounds(lam: ExactReal, precision: int):
    """mpfr lower and upper bounds for lambda at the given precision"""
    if lam.is_rational:
        with gmpy2.context(precision=precision, round=gmpy2.RoundDown):
            lo = gmpy2.mpfr(gmpy2.mpq(lam.rational.numerator, lam.rational.denominator))
        with gmpy2.context(precision=precision, round=gmpy2.RoundUp):
            hi = gmpy2.mpfr(gmpy2.mpq(lam.rational.numerator, lam.rational.denominator))
        return lo, hi
    if lam.is_algebraic:
        center = lam.exact().to_mpfr(precision + 64)
    else:
        center = gmpy2.mpfr(repr(lam.value), precision + 64)
    with gmpy2.context(precision=precision):
        lo = gmpy2.next_below(gmpy2.mpfr(center))
        hi = gmpy2.next_above(gmpy2.mpfr(center))
        if not lam.is_exact:
            # float-only lambda carries its own rounding error
            radius = abs(gmpy2.mpfr(lam.value)) * gmpy2.mpfr(2) ** -52
            lo, hi = lo - radius, hi + radius
    return lo, hi


def _interval_product(a_lo, a_hi, b_lo, b_hi, precision: int):
    with gmpy2.context(precision=precision, round=gmpy2.RoundDown):
        lo = min(a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi)
    with gmpy2.context(precision=precision, round=gmpy2.RoundUp):
        hi = max(a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi)
    return lo, hi


def enclose_polynomial(coefficients: Sequence, lam: ExactReal, precision: int = BASE_PRECISION):
    """Directed-rounding enclosure [lo, hi] of sum c_i lambda^i"""
    lam_lo, lam_hi = _lambda_bounds(lam, precision)
    coeffs = [Fraction(c) if not isinstance(c, float) else Fraction(repr(c)) for c in coefficients]
    pow_lo = pow_hi = gmpy2.mpfr(1)
    total_lo = total_hi = gmpy2.mpfr(0)
    for i, c in enumerate(coeffs):
        if i > 0:
            pow_lo, pow_hi = _interval_product(pow_lo, pow_hi, lam_lo, lam_hi, precision)
        if c == 0:
            continue
        cq = gmpy2.mpq(c.numerator, c.denominator)
        low_pow, high_pow = (pow_lo, pow_hi) if c > 0 else (pow_hi, pow_lo)
        with gmpy2.context(precision=precision, round=gmpy2.RoundDown):
            total_lo = total_lo + cq * low_pow
        with gmpy2.context(precision=precision, round=gmpy2.RoundUp):
            total_hi = total_hi + cq * high_pow
    return total_lo, total_hi


def _certify(coefficients: Sequence, lam: ExactReal) -> Tuple[float, Tuple[float, float]]:
    """Lower bound on |P(lambda)| and the enclosure, escalating precision when it straddles 0"""
    lo, hi = enclose_polynomial(coefficients, lam, BASE_PRECISION)
    if lo <= 0 <= hi:
        logger.debug("enclosure straddles zero at 64 bits; escalating to 128 bits")
        lo, hi = enclose_polynomial(coefficients, lam, ESCALATED_PRECISION)
    if lo > 0:
        bound = lo
    elif hi < 0:
        bound = -hi
    else:
        bound = gmpy2.mpfr(0)
    # outward rounding to doubles keeps the enclosure valid
    with gmpy2.context(precision=DOUBLE_PRECISION, round=gmpy2.RoundDown):
        bound = float(gmpy2.mpfr(bound))
        lo = float(gmpy2.mpfr(lo))
    with gmpy2.context(precision=DOUBLE_PRECISION, round=gmpy2.RoundUp):
        hi = float(gmpy2.mpfr(hi))
    return bound, (lo, hi)


def _field_value(coefficients: Sequence, powers: Sequence[FieldElement]) -> FieldElement:
    total = powers[0] * 0
    for c, p in zip(coefficients, powers):
        if c:
            total = total + p * c
    return total


def min_poly_value(coeff_set: Sequence, lam, n: int, mode: str = 'exact',
                   budget: Optional[int] = None, threads: int = 1) -> PolyMinimum:
    """
    Minimum of |P(lambda)| over nonzero P of degree <= n with coefficients in coeff_set

    Args:
        coeff_set: finite set of reals (typically E - E for a digit set E)
        lam: lambda as a number or expression text
        n: degree bound, at least 1
        mode: 'exact' (rational result, or exact zero detection for algebraic
              lambda), 'interval' (certified enclosure) or 'float'
        budget: node budget (settings.NODE_BUDGET by default)
        threads: workers over the top-level coefficient choices

    Returns:
        PolyMinimum; BudgetError carries the best value found so far
    """
    if n < 1:
        raise ArgumentError(f"degree bound must be at least 1 (got {n})")
    if mode not in MODES:
        raise ArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    budget = settings.NODE_BUDGET if budget is None else budget
    lam = parse_real(lam)
    if not 0 < abs(lam.value) < 1:
        raise ArgumentError(f"lambda must satisfy 0 < |lambda| < 1 (got {lam.text})")
    coeffs = _parse_coefficients(coeff_set)
    rational_coeffs = all(c.is_rational for c in coeffs)

    if mode == 'exact' and not (lam.is_exact and rational_coeffs):
        logger.warning(f"lambda={lam.text} or the coefficients have no exact form; using interval mode")
        mode = 'interval'

    if mode == 'exact' and lam.is_rational:
        result = _search_rational([c.rational for c in coeffs], lam.rational, n, budget, threads)
        logger.debug(f"exact search n={n}: {result.nodes} nodes")
        return result

    floats = [c.value for c in coeffs]
    if mode == 'exact':
        # algebraic lambda: float pruning, exact zero test at near-zero leaves
        powers = [lam.exact() ** i for i in range(n + 1)]

        def leaf_check(size, prefix):
            if size < 1e-9:
                exact_coeffs = [coeffs[floats.index(c)].rational for c in prefix]
                if _field_value(exact_coeffs, powers).is_zero():
                    return 0
            return size

        search = _search_float(floats, lam.value, n, budget, threads, leaf_check)
        exact_coeffs = tuple(coeffs[floats.index(c)].rational for c in search.witness)
        if search.incumbent == 0:
            return PolyMinimum(value=0, coefficients=exact_coeffs, mode='exact',
                               nodes=search.nodes, exact_zero=True)
        value = abs(_field_value(exact_coeffs, powers))
        return PolyMinimum(value=float(value.to_mpfr()), coefficients=exact_coeffs, mode='exact',
                           nodes=search.nodes)

    search = _search_float(floats, lam.value, n, budget, threads)
    witness = tuple(search.witness)
    if mode == 'float':
        return PolyMinimum(value=float(search.incumbent), coefficients=witness, mode='float',
                           nodes=search.nodes)

    exact_witness = tuple(coeffs[floats.index(c)].rational if coeffs[floats.index(c)].is_rational
                          else c for c in witness)
    bound, enclosure = _certify(exact_witness, lam)
    return PolyMinimum(value=bound, coefficients=exact_witness, mode='interval', enclosure=enclosure,
                       nodes=search.nodes)


def exhaustive_min_poly_value(coeff_set: Sequence, lam, n: int) -> Fraction:
    """Brute-force minimum over all coefficient vectors (rational lambda, integer-scaled numpy)"""
    lam = parse_real(lam)
    if not lam.is_rational:
        raise ArgumentError("exhaustive enumeration needs a rational lambda")
    coeffs = [c.rational for c in _parse_coefficients(coeff_set)]
    if not all(c is not None for c in coeffs):
        raise ArgumentError("exhaustive enumeration needs rational coefficients")
    if len(coeffs) ** (n + 1) > settings.CAPACITY:
        raise CapacityError(f"{len(coeffs)}^{n + 1} polynomials exceed the capacity",
                            requested=len(coeffs) ** (n + 1), capacity=settings.CAPACITY)

    denominator = 1
    for c in coeffs:
        denominator = lcm(denominator, c.denominator)
    ints = [int(c * denominator) for c in coeffs]
    p, q = lam.rational.numerator, lam.rational.denominator
    weights = [p ** i * q ** (n - i) for i in range(n + 1)]
    dtype = np.int64 if max(abs(c) for c in ints) * sum(abs(w) for w in weights) < 2 ** 62 else object

    values = np.zeros(1, dtype=dtype)
    nonzero = np.zeros(1, dtype=bool)
    cvec = np.array(ints, dtype=dtype)
    cnz = cvec != 0
    for w in weights:
        values = (values[:, None] + cvec[None, :] * w).ravel()
        nonzero = (nonzero[:, None] | cnz[None, :]).ravel()
    best = int(np.abs(values[nonzero]).min())
    return Fraction(best, denominator * q ** n)


# Atom gaps and profiles

@dataclass(frozen=True)
class AtomGap:
    gap: object
    overlaps: int


def min_atom_gap(am: AtomicMeasure) -> AtomGap:
    """Smallest distance between distinct atoms, with the merged-coincidence count"""
    if len(am) < 2:
        raise DegenerateInputError("minimum gap needs at least two atoms")
    if am.exact:
        locs = am.locations
        gaps = [b - a for a, b in zip(locs, locs[1:])]
        if any(isinstance(g, FieldElement) for g in gaps):
            smallest = min(gaps, key=to_mpfr)
            if isinstance(smallest, FieldElement):
                gap = smallest.coords[0] if smallest.is_rational() else float(smallest.to_mpfr())
            else:
                gap = smallest
        else:
            gap = min(gaps)
        return AtomGap(gap=gap, overlaps=am.overlaps)
    return AtomGap(gap=float(np.min(np.diff(am.locations))), overlaps=am.overlaps)


@dataclass
class SeparationRow:
    n: int
    min_gap: float
    overlap_count: int
    threshold: float
    passes: bool


@dataclass
class SeparationProfile:
    """Per-stage gaps against lambda^(R n)"""

    per_n: List[SeparationRow]
    mode: str
    R: float
    n_max: int
    details: Dict = field(default_factory=dict)

    @property
    def first_failure(self) -> Optional[int]:
        for row in self.per_n:
            if not row.passes:
                return row.n
        return None

    @property
    def verdict(self) -> str:
        failure = self.first_failure
        if failure is None:
            return f"certified to n={self.n_max}"
        return f"fails at n={failure}"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{'n': r.n, 'gap': float(r.min_gap), 'threshold': r.threshold,
              'pass': r.passes, 'overlaps': r.overlap_count} for r in self.per_n],
            columns=['n', 'gap', 'threshold', 'pass', 'overlaps'],
        )

    def to_json(self) -> dict:
        return {
            'mode': self.mode,
            'R': self.R,
            'n_max': self.n_max,
            'verdict': self.verdict,
            'rows': [{'n': r.n, 'gap': str(r.min_gap) if isinstance(r.min_gap, Fraction) else float(r.min_gap),
                      'overlaps': r.overlap_count, 'threshold': r.threshold, 'pass': r.passes}
                     for r in self.per_n],
            'details': self.details,
        }


def _stage_gap(stage: AtomicMeasure, n: int, mode: str):
    if len(stage) < 2:
        return float('inf'), stage.overlaps
    measured = min_atom_gap(stage)
    if measured.overlaps > 0:
        return 0, measured.overlaps
    if mode == 'interval':
        radius = n * 2.0 ** -52 * float(np.max(np.abs(stage.float_locations())))
        return max(0.0, float(measured.gap) - 2 * radius), 0
    return measured.gap, 0


def separation_profile(model: Model, x, n_max: int, R: float, mode: str = 'exact') -> SeparationProfile:
    """
    Minimum atom gap of mu_{x,n} against lambda^(R n) for n = 1..n_max

    Exact mode merges only true coincidences (rational or algebraic lambda);
    interval mode widens float gaps by the accumulated rounding error.
    """
    if mode not in MODES:
        raise ArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    if n_max < 1:
        raise ArgumentError("n_max must be at least 1")
    exact = mode == 'exact'
    if exact and not model.exact_capable:
        logger.warning(f"{model!r} has no exact representation; profiling in interval mode")
        mode = 'interval'
        exact = False

    rows = []
    for n, stage in enumerate(iter_stages(model, x, n_max, exact=exact)):
        if n == 0:
            continue
        gap, overlaps = _stage_gap(stage, n, mode)
        threshold = model.lam ** (R * n)
        rows.append(SeparationRow(n=n, min_gap=gap, overlap_count=overlaps, threshold=threshold,
                                  passes=overlaps == 0 and float(gap) >= threshold))
    profile = SeparationProfile(per_n=rows, mode=mode, R=R, n_max=n_max)
    logger.info(f"separation profile for {model!r}: {profile.verdict}")
    return profile


def ifs_separation_profile(ifs: NonHomIFS, m_max: int, R: float) -> SeparationProfile:
    """
    For m = 1..m_max: min |t_u - t_v| over distinct u, v in the stopping set
    with lambda_u = lambda_v (pairs with different ratios count as 1),
    compared with 2^(-R m)
    """
    if m_max < 1:
        raise ArgumentError("m_max must be at least 1")
    exact = ifs.exact_capable
    rows = []
    for m in range(1, m_max + 1):
        stage = generate_nonhom(ifs, m, exact=exact, with_words=True)
        by_class: Dict[Tuple, List] = {}
        for key, offset in stage.cylinders:
            by_class.setdefault(key, []).append(offset)
        gap = 1.0
        overlaps = 0
        for offsets in by_class.values():
            if len(offsets) < 2:
                continue
            offsets = sorted(offsets)
            diffs = [b - a for a, b in zip(offsets, offsets[1:])]
            overlaps += sum(1 for d in diffs if d == 0)
            gap = min(gap, min(diffs))
        threshold = 2.0 ** (-R * m)
        rows.append(SeparationRow(n=m, min_gap=gap, overlap_count=overlaps, threshold=threshold,
                                  passes=overlaps == 0 and float(gap) >= threshold))
    return SeparationProfile(per_n=rows, mode='exact' if exact else 'float', R=R, n_max=m_max)


def superexp_scan(coeff_set: Sequence, lambda_grid: Sequence, n: int, mode: str = 'auto',
                  budget: Optional[int] = None) -> List[Tuple[float, float]]:
    """(lambda, (1/n) log2 min |P(lambda)|) over the grid; -inf marks an exact zero"""
    results = []
    for lam in lambda_grid:
        parsed = parse_real(lam)
        use = mode if mode != 'auto' else ('exact' if parsed.is_exact else 'float')
        minimum = min_poly_value(coeff_set, parsed, n, mode=use, budget=budget)
        results.append((parsed.value, minimum.log2_rate(n)))
    return results


def convolution_difference_minima(model: ConvolutionModel, x, n: int) -> Dict[str, float]:
    """
    Minimum atom differences of mu_{x,n} for the convolution model, split by type

    'delta1': |P1(l1)|, 'delta2': e^x' |P2(l2)|, 'mixed': |P1(l1) + e^x' P2(l2)|
    with P1, P2 both nonzero. Float only.
    """
    shift, n_prime = model.split_stage(x, n)
    first = _self_similar_stage(model.d1, model.lam, n)
    second = _self_similar_stage(model.d2, model.l2, n_prime) * math.exp(shift)
    if first.size ** 2 > settings.CAPACITY or second.size ** 2 > settings.CAPACITY:
        raise CapacityError("difference sets exceed the capacity", capacity=settings.CAPACITY)

    d1 = _positive_differences(first)
    d2 = _positive_differences(second)
    result = {
        'delta1': float(d1[0]) if d1.size else float('inf'),
        'delta2': float(d2[0]) if d2.size else float('inf'),
        'mixed': float('inf'),
    }
    if d1.size and d2.size:
        signed = np.concatenate((-d2[::-1], d2))
        targets = -d1
        pos = np.clip(np.searchsorted(signed, targets), 1, signed.size - 1)
        nearest = np.minimum(np.abs(signed[pos] - targets), np.abs(signed[pos - 1] - targets))
        result['mixed'] = float(nearest.min())
    return result


def _self_similar_stage(delta: AtomicMeasure, lam: float, n: int) -> np.ndarray:
    points = np.zeros(1)
    locs = delta.float_locations()
    for i in range(n):
        points = np.unique(np.add.outer(points, locs * lam ** i).ravel())
    return points


def _positive_differences(points: np.ndarray) -> np.ndarray:
    diffs = np.subtract.outer(points, points).ravel()
    return np.unique(diffs[diffs > settings.MERGE_TOLERANCE])


class SeparationService:
    """Separation searches with the configured budget and worker count"""

    def __init__(self, budget: Optional[int] = None, threads: Optional[int] = None):
        self.budget = budget or settings.NODE_BUDGET
        self.threads = threads or settings.THREADS

    def minima_by_degree(self, coeff_set: Sequence, lam, n_max: int, mode: str = 'exact',
                         budget: Optional[int] = None) -> List[Tuple[int, PolyMinimum]]:
        """min_poly_value for n = 1..n_max; BudgetError carries the rows finished so far"""
        rows = []
        for n in range(1, n_max + 1):
            try:
                rows.append((n, min_poly_value(coeff_set, lam, n, mode=mode,
                                               budget=budget or self.budget, threads=self.threads)))
            except BudgetError as e:
                e.best_so_far = {'n': n, 'best': e.best_so_far, 'completed': rows}
                raise
        return rows


# Singleton instance
_separation_service_instance = None


def get_separation_service() -> SeparationService:
    """Get or create separation service singleton"""
    global _separation_service_instance
    if _separation_service_instance is None:
        _separation_service_instance = SeparationService()
    return _separation_service_instance


separation_service = get_separation_service()
