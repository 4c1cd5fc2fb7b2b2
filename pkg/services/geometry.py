"""
Fractal Lq Toolkit - Geometry Service
Version: 1.0.0

Box-counting experiments: Cantor-set intersections under affine maps,
sumset covering counts, planar attractor covers and their slices, and
projections of planar measures.

All counts use closed epsilon-neighborhoods (outer covers), so every count
is an upper bound for the covering number it estimates.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from services.dyadic_measure import AtomicMeasure
from utils.errors import ArgumentError, CapacityError, DataError
from utils.exact import parse_real
from utils.helpers import fit_line, top_half

logger = logging.getLogger(__name__)

COVER_TOLERANCE = 1e-9
UNSTABLE_R2 = 0.9
RESOLUTION_FLOOR = 2.0 ** -40


def _capacity(requested: int, what: str):
    if requested > settings.CAPACITY:
        raise CapacityError(f"{what} needs {requested} cells, above the capacity {settings.CAPACITY}",
                            requested=requested, capacity=settings.CAPACITY)


def resolve_parameter(value) -> float:
    """A float from a number, an expression or a name such as "golden" """
    return parse_real(value).value


# One-dimensional cell sets

@dataclass
class CellSet1D:
    """Depth-n cylinder cells [i p^-n, (i + 1) p^-n] of a base-p digit set"""

    base: int
    depth: int
    indices: np.ndarray
    dimension: Optional[float] = None

    @property
    def scale(self) -> float:
        return float(self.base) ** -self.depth

    def __len__(self):
        return int(self.indices.size)

    def intervals(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = self.indices * self.scale
        return lo, lo + self.scale


def cantor_cells(base: int, digits: Sequence[int], depth: int) -> CellSet1D:
    """Left endpoints (in units of base^-depth) of all depth-n cylinders"""
    if base < 2:
        raise ArgumentError(f"base must be at least 2 (got {base})")
    digits = sorted(set(int(d) for d in digits))
    if not digits:
        raise ArgumentError("digit set must be nonempty")
    if digits[0] < 0 or digits[-1] >= base:
        raise ArgumentError(f"digits must lie in [0, {base})")
    if depth < 0:
        raise ArgumentError("depth must be nonnegative")
    _capacity(len(digits) ** depth, f"depth-{depth} Cantor cells")

    indices = np.zeros(1, dtype=np.int64)
    digit_array = np.asarray(digits, dtype=np.int64)
    for _ in range(depth):
        indices = (indices[:, None] * base + digit_array[None, :]).ravel()
    return CellSet1D(base=base, depth=depth, indices=np.sort(indices),
                     dimension=math.log(len(digits)) / math.log(base))


def _grid_range(lo: np.ndarray, hi: np.ndarray, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """Indices k of closed eps-cells [k eps, (k + 1) eps] meeting [lo, hi]"""
    k_lo = np.ceil(lo / eps - COVER_TOLERANCE).astype(np.int64) - 1
    k_hi = np.floor(hi / eps + COVER_TOLERANCE).astype(np.int64)
    return k_lo, k_hi


def _expand(k_lo: np.ndarray, k_hi: np.ndarray) -> np.ndarray:
    spans = k_hi - k_lo + 1
    total = int(spans.sum())
    _capacity(total, "cell cover")
    starts = np.repeat(k_lo, spans)
    offsets = np.arange(total) - np.repeat(np.cumsum(spans) - spans, spans)
    return np.unique(starts + offsets)


def _union_count(k_lo: np.ndarray, k_hi: np.ndarray) -> int:
    if k_lo.size == 0:
        return 0
    order = np.argsort(k_lo, kind='stable')
    lo, hi = k_lo[order], k_hi[order]
    reach = np.maximum.accumulate(hi)
    starts = np.concatenate(([True], lo[1:] > reach[:-1]))
    run_lo = lo[starts]
    run_hi = np.maximum.reduceat(hi, np.flatnonzero(starts))
    return int(np.sum(run_hi - run_lo + 1))


def cover_cells(cells: CellSet1D, t: float = 1.0, u: float = 0.0, eps: Optional[float] = None) -> np.ndarray:
    """Closed outer eps-cover of t * cells + u as sorted grid indices"""
    eps = cells.scale if eps is None else eps
    lo, hi = cells.intervals()
    a, b = t * lo + u, t * hi + u
    return _expand(*_grid_range(np.minimum(a, b), np.maximum(a, b), eps))


def box_count(cells: CellSet1D, eps: float, t: float = 1.0, u: float = 0.0) -> int:
    lo, hi = cells.intervals()
    a, b = t * lo + u, t * hi + u
    return _union_count(*_grid_range(np.minimum(a, b), np.maximum(a, b), eps))


def _check_resolution(cells: CellSet1D, eps: float):
    if cells.scale > eps * (1.0 + COVER_TOLERANCE):
        raise ArgumentError(f"cell scale {cells.scale:.3g} is coarser than eps={eps:.3g}")


def intersect_affine(a: CellSet1D, b: CellSet1D, t, u, eps: float) -> int:
    """Number of eps-cells meeting both the cover of A and the cover of t B + u"""
    t, u = resolve_parameter(t), resolve_parameter(u)
    if t == 0:
        raise ArgumentError("t must be nonzero")
    _check_resolution(a, eps)
    _check_resolution(b, eps)
    cover_a = cover_cells(a, 1.0, 0.0, eps)
    cover_b = cover_cells(b, t, u, eps)
    return int(np.intersect1d(cover_a, cover_b, assume_unique=True).size)


@dataclass
class ExponentFit:
    slope: float
    r2: float
    points: List[Tuple[float, int]]

    @property
    def stable(self) -> bool:
        return self.r2 >= UNSTABLE_R2

    def to_json(self) -> dict:
        return {'slope': self.slope, 'r2': self.r2, 'stable': self.stable,
                'points': [[e, n] for e, n in self.points]}


def exponent_fit(counts: Sequence[Tuple[float, int]], finest_half: bool = True) -> ExponentFit:
    """
    Slope of log N against log(1/eps)

    Args:
        counts: (eps, N) pairs with eps strictly decreasing, at least three
        finest_half: fit on the finest half of the scales only
    """
    counts = [(float(e), int(n)) for e, n in counts]
    if len(counts) < 3:
        raise DataError(f"exponent fit needs at least 3 scales (got {len(counts)})")
    eps = [e for e, _ in counts]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise DataError("eps values must be strictly decreasing")
    if any(n <= 0 for _, n in counts):
        raise DataError("covering counts must be positive")
    used = top_half(counts) if finest_half else counts
    slope, _, r2 = fit_line([-math.log(e) for e, _ in used], [math.log(n) for _, n in used])
    fit = ExponentFit(slope=slope, r2=r2, points=counts)
    if not fit.stable:
        logger.warning(f"exponent fit is unstable (r2={r2:.3f}); reporting slope {slope:.4f} without asserting it")
    return fit


@dataclass
class IntersectionScan:
    rows: List[Dict]
    fit: ExponentFit
    bound: float

    @property
    def non_increasing(self) -> bool:
        exponents = [r['exponent'] for r in self.rows]
        return all(b <= a + COVER_TOLERANCE for a, b in zip(exponents, exponents[1:]))

    def to_json(self) -> dict:
        return {'rows': self.rows, 'fit': self.fit.to_json(), 'bound': self.bound,
                'non_increasing': self.non_increasing}


def intersection_scan(base: int, digits: Sequence[int], t, u, depths: Sequence[int]) -> IntersectionScan:
    """Counts of A cap (t A + u) at eps = base^-n over the depths, with exponent fit"""
    rows = []
    dim = None
    for n in sorted(depths):
        cells = cantor_cells(base, digits, n)
        dim = cells.dimension
        eps = cells.scale
        count = intersect_affine(cells, cells, t, u, eps)
        exponent = math.log(count) / math.log(1.0 / eps) if count > 0 and n > 0 else float('nan')
        rows.append({'depth': n, 'eps': eps, 'count': count, 'exponent': exponent})
        logger.debug(f"intersection depth {n}: {count} cells")
    fit = exponent_fit([(r['eps'], r['count']) for r in rows])
    return IntersectionScan(rows=rows, fit=fit, bound=max(2.0 * dim - 1.0, 0.0))


def sumset_counts(a: CellSet1D, b: CellSet1D, eps_grid: Sequence[float]) -> List[Tuple[float, int]]:
    """Covering counts of A + B (sums of cylinder intervals) at each eps"""
    _capacity(len(a) * len(b), "sumset intervals")
    a_lo, _ = a.intervals()
    b_lo, _ = b.intervals()
    lo = np.add.outer(a_lo, b_lo).ravel()
    hi = lo + a.scale + b.scale
    counts = []
    for eps in eps_grid:
        if max(a.scale, b.scale) > eps * (1.0 + COVER_TOLERANCE):
            raise ArgumentError(f"eps={eps:.3g} is finer than the cell scales")
        counts.append((float(eps), _union_count(*_grid_range(lo, hi, eps))))
    return counts


def sumset_dimension(a: CellSet1D, b: CellSet1D, eps_grid: Sequence[float]) -> ExponentFit:
    """Box-dimension estimate of A + B from covering counts across scales"""
    return exponent_fit(sumset_counts(a, b, eps_grid))


# Planar sets

@dataclass
class CellSet2D:
    """
    Cells [i d, (i + 1) d] x [j d, (j + 1) d] with d = scale

    The covered set is the union of the cells dilated by `reach` cells on
    every side.
    """

    scale: float
    cells: np.ndarray
    reach: int = 0

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        self.cells = np.unique(cells, axis=0)
        if not 0 < self.scale <= 1:
            raise ArgumentError(f"cell scale must lie in (0, 1], got {self.scale}")

    def __len__(self):
        return int(self.cells.shape[0])

    def squares(self) -> Tuple[np.ndarray, np.ndarray]:
        """Lower-left and upper-right corners of the dilated cells"""
        lower = (self.cells - self.reach) * self.scale
        upper = (self.cells + 1 + self.reach) * self.scale
        return lower, upper

    def to_json(self) -> dict:
        return {'scale': self.scale, 'reach': self.reach, 'cells': self.cells.tolist()}


def _rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


def bounding_ball(lam: float, alpha: float, translations: np.ndarray) -> Tuple[np.ndarray, float]:
    """Center c and radius r with f_i(B(c, r)) inside B(c, r) for every map"""
    linear = lam * _rotation(alpha)
    fixed = np.linalg.solve(np.eye(2) - linear, translations.T).T
    c = fixed.mean(axis=0)
    drift = translations - (np.eye(2) - linear) @ c
    r = float(np.max(np.linalg.norm(drift, axis=1))) / (1.0 - lam)
    return c, r


def planar_attractor(lam, alpha, translations: Sequence[Sequence[float]], depth: int) -> CellSet2D:
    """
    Depth-n cylinder cover of the attractor of {lam R_alpha x + t_i}

    Cells have side lam^n; each cylinder contributes the cell holding the
    image of the first map's fixed point, and `reach` bounds how far the
    cylinder extends from it.
    """
    lam = resolve_parameter(lam)
    alpha = resolve_parameter(alpha)
    if not 0 < lam < 1:
        raise ArgumentError(f"lambda must lie in (0, 1), got {lam}")
    if depth < 0:
        raise ArgumentError("depth must be nonnegative")
    scale = lam ** depth
    if scale < RESOLUTION_FLOOR:
        raise ArgumentError(f"lam^n = {scale:.3g} is below the resolution floor 2^-40")
    t = np.asarray(translations, dtype=float).reshape(-1, 2)
    if t.shape[0] == 0:
        raise ArgumentError("at least one translation is needed")
    _capacity(t.shape[0] ** depth, f"depth-{depth} cylinders")

    linear = lam * _rotation(alpha)
    center, radius = bounding_ball(lam, alpha, t)
    anchor = np.linalg.solve(np.eye(2) - linear, t[0])

    points = anchor[None, :]
    for _ in range(depth):
        points = (points @ linear.T)[None, :, :] + t[:, None, :]
        points = points.reshape(-1, 2)
    cells = np.floor(points / scale + COVER_TOLERANCE).astype(np.int64)
    reach = math.ceil(float(np.linalg.norm(anchor - center)) + radius - COVER_TOLERANCE)
    logger.debug(f"planar attractor depth {depth}: {points.shape[0]} cylinders, reach {reach}")
    return CellSet2D(scale=scale, cells=cells, reach=reach)


def _line_frame(direction: Sequence[float]) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(d))
    if norm == 0:
        raise ArgumentError("direction must be nonzero")
    d = d / norm
    return np.array([-d[1], d[0]])


def _cells_near_line(cells: CellSet2D, normal: np.ndarray, offset: float, eps: float) -> np.ndarray:
    """eps-grid cells meeting the dilated cells and within eps of the line <p, normal> = offset"""
    lower, upper = cells.squares()
    # squares too far from the line cannot contribute
    center = (lower + upper) / 2.0
    half_diag = (upper[0, 0] - lower[0, 0]) * math.sqrt(2.0) / 2.0 if lower.size else 0.0
    near = np.abs(center @ normal - offset) <= eps * (1.0 + math.sqrt(2.0)) + half_diag
    lower, upper = lower[near], upper[near]
    if lower.size == 0:
        return np.zeros((0, 2), dtype=np.int64)

    kx_lo, kx_hi = _grid_range(lower[:, 0], upper[:, 0], eps)
    ky_lo, ky_hi = _grid_range(lower[:, 1], upper[:, 1], eps)
    span_x = int(np.max(kx_hi - kx_lo)) + 1
    span_y = int(np.max(ky_hi - ky_lo)) + 1
    _capacity(lower.shape[0] * span_x * span_y, "slice cover")

    candidates = []
    for dx in range(span_x):
        for dy in range(span_y):
            valid = (kx_lo + dx <= kx_hi) & (ky_lo + dy <= ky_hi)
            candidates.append(np.stack([kx_lo[valid] + dx, ky_lo[valid] + dy], axis=1))
    grid = np.unique(np.concatenate(candidates), axis=0)

    corners = np.stack([grid, grid + [1, 0], grid + [0, 1], grid + [1, 1]], axis=1) * eps
    projected = corners @ normal - offset
    meets = (projected.min(axis=1) <= eps * (1.0 + COVER_TOLERANCE)) & \
            (projected.max(axis=1) >= -eps * (1.0 + COVER_TOLERANCE))
    return grid[meets]


def slice_count(cells: CellSet2D, direction: Sequence[float], offset: float, eps: float) -> int:
    """
    eps-cells meeting both the covered set and the closed eps-neighborhood of
    the line {p : <p, n> = offset}, n the unit normal of direction
    """
    if eps < cells.scale * (1.0 - COVER_TOLERANCE):
        raise ArgumentError(f"eps={eps:.3g} is finer than the cell scale {cells.scale:.3g}")
    return int(_cells_near_line(cells, _line_frame(direction), resolve_parameter(offset), eps).shape[0])


@dataclass
class FiberBoundReport:
    rows: List[Dict]
    constant: float
    exponent: float

    @property
    def passes(self) -> bool:
        return all(r['pass'] for r in self.rows)

    def to_json(self) -> dict:
        return {'rows': self.rows, 'constant': self.constant, 'exponent': self.exponent, 'pass': self.passes}


def fiber_bound_check(cells: CellSet2D, direction: Sequence[float], offsets: Sequence[float],
                      eps_grid: Sequence[float], s: float, alpha_hat: float,
                      slack: float = 2.0) -> FiberBoundReport:
    """
    Fiber counts against C eps^-(s - alpha_hat), C fitted on the coarsest scale

    Each row holds the largest slice count over the offsets.
    """
    eps_grid = sorted(eps_grid, reverse=True)
    if not eps_grid:
        raise DataError("fiber bound needs at least one scale")
    exponent = s - alpha_hat
    counts = [max(slice_count(cells, direction, o, eps) for o in offsets) for eps in eps_grid]
    constant = slack * counts[0] * eps_grid[0] ** exponent
    rows = []
    for eps, count in zip(eps_grid, counts):
        bound = constant * eps ** -exponent
        rows.append({'eps': eps, 'count': count, 'bound': bound, 'pass': count <= bound})
    return FiberBoundReport(rows=rows, constant=constant, exponent=exponent)


# Planar measures and projections

@dataclass
class PlanarMeasure:
    points: np.ndarray
    masses: np.ndarray
    exact_points: Optional[list] = field(default=None, repr=False)

    def __len__(self):
        return int(self.masses.size)

    @classmethod
    def from_pairs(cls, pairs: Sequence) -> 'PlanarMeasure':
        """From [((x, y), mass), ...]; exact coordinates are kept when all are exact"""
        if not pairs:
            raise ArgumentError("planar measure needs at least one atom")
        coords = [tuple(p[0]) for p in pairs]
        masses = np.asarray([float(p[1]) for p in pairs])
        if np.any(masses < 0):
            raise ArgumentError("planar masses must be nonnegative")
        exact = None
        if all(isinstance(c, (int, Fraction)) for xy in coords for c in xy):
            exact = [(Fraction(x), Fraction(y)) for x, y in coords]
        points = np.asarray([[float(x), float(y)] for x, y in coords])
        return cls(points=points, masses=masses, exact_points=exact)

    def to_json(self) -> dict:
        return {'atoms': [[[float(x), float(y)], float(m)] for (x, y), m in zip(self.points, self.masses)]}


def product_measure(first: AtomicMeasure, second: AtomicMeasure) -> PlanarMeasure:
    """mu_1 x mu_2 as a planar measure (exact when both factors are)"""
    pairs = [((x, y), mx * my) for x, mx in first.pairs() for y, my in second.pairs()]
    return PlanarMeasure.from_pairs(pairs)


def project_measure(planar: PlanarMeasure, direction: Sequence) -> AtomicMeasure:
    """Push forward under p -> <direction, p>; coincident images merge"""
    if all(d == 0 for d in direction):
        raise ArgumentError("direction must be nonzero")
    if planar.exact_points is not None and all(isinstance(d, (int, Fraction)) for d in direction):
        dx, dy = (Fraction(d) for d in direction)
        locations = [x * dx + y * dy for x, y in planar.exact_points]
        return AtomicMeasure(locations, planar.masses, exact=True)
    d = np.asarray([resolve_parameter(v) for v in direction], dtype=float)
    return AtomicMeasure(planar.points @ d, planar.masses, exact=False)


def planar_stage_measure(lam, alpha, planar_delta: PlanarMeasure, depth: int) -> PlanarMeasure:
    """Stage-n planar measure: convolution of lam^i R_alpha^i images of the digit measure, i < n"""
    lam = resolve_parameter(lam)
    alpha = resolve_parameter(alpha)
    if not 0 < lam < 1:
        raise ArgumentError(f"lambda must lie in (0, 1), got {lam}")
    tolerance = settings.MERGE_TOLERANCE
    points = np.zeros((1, 2))
    masses = np.ones(1)
    for i in range(depth):
        step = (planar_delta.points @ (lam ** i * _rotation(alpha * i)).T)
        _capacity(points.shape[0] * step.shape[0], f"stage-{i + 1} planar atoms")
        points = (points[:, None, :] + step[None, :, :]).reshape(-1, 2)
        masses = np.multiply.outer(masses, planar_delta.masses).ravel()
        keys = np.round(points / tolerance).astype(np.int64)
        keys, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        masses = np.bincount(inverse.ravel(), weights=masses, minlength=keys.shape[0])
        points = points[first]
    return PlanarMeasure(points=points, masses=masses)
