"""
Fractal Lq Toolkit - Model Service
Version: 1.0.0

Models (X, T, Delta, lambda) generating dynamically driven self-similar
measures mu_{x,n} = *_{i<n} S_{lambda^i} Delta(T^i x), plus non-homogeneous
iterated function systems and their stopping-set measures.
"""

import logging
import math
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from services.dyadic_measure import (
    AtomicMeasure, affine_image, convolve_atoms,
)
from utils.errors import ArgumentError, CapacityError, DomainError
from utils.exact import ExactReal, parse_real
from utils.helpers import low_discrepancy, warn_if_rational

logger = logging.getLogger(__name__)

BOUNDARY_GAP = 1e-9
TWO_PI = 2.0 * math.pi


def atomic_lq(delta: AtomicMeasure, q: float) -> float:
    """Sum of mass^q over the atoms of a finitely supported measure"""
    return float(np.sum(delta.masses ** q))


def _parse_lambda(value, name: str = 'lambda') -> ExactReal:
    lam = parse_real(value)
    if not 0 < lam.value < 1:
        raise ArgumentError(f"{name} must lie in (0, 1), got {lam.text}")
    return lam


def _delta_from_json(data) -> AtomicMeasure:
    """Exact when every location parses exactly, float otherwise"""
    try:
        return AtomicMeasure.from_json(data, exact=True)
    except ArgumentError:
        return AtomicMeasure.from_json(data, exact=False)


def _check_probability(delta: AtomicMeasure, name: str):
    if len(delta) == 0:
        raise ArgumentError(f"{name} must have at least one atom")
    if abs(delta.total_mass - 1.0) > 1e-10:
        raise ArgumentError(f"{name} must be a probability measure (total mass {delta.total_mass})")


def _spread_samples(count: int, dim: int, periods: Sequence[float],
                    near_boundary) -> List[np.ndarray]:
    """Low-discrepancy points of the box, skipping points close to a piece boundary"""
    samples = []
    batch = max(2 * count, 16)
    offset = 0.5
    while len(samples) < count:
        for point in low_discrepancy(batch, dim, offset=offset) * np.asarray(periods, dtype=float):
            if not near_boundary(point):
                samples.append(point)
                if len(samples) == count:
                    break
        offset += 0.1234567
    return samples


class Model(ABC):
    """A model (X, T, Delta, lambda) with closed-form orbits"""

    type_tag = ''

    def __init__(self, lam: ExactReal):
        self._lam = lam

    @property
    def lam(self) -> float:
        return self._lam.value

    @property
    def lam_exact(self):
        return self._lam.exact()

    @property
    @abstractmethod
    def state_space(self) -> dict:
        """Descriptor of X and of the invariant measure"""

    @abstractmethod
    def orbit(self, x, n: int):
        """T^n x"""

    @abstractmethod
    def delta(self, x, exact: bool = False) -> AtomicMeasure:
        """Delta(x)"""

    @abstractmethod
    def support_bounds(self) -> Tuple[float, float]:
        """An interval containing the support of every Delta(x)"""

    @abstractmethod
    def mean_log_norm(self, q: float) -> float:
        """Closed form of the integral of log ||Delta(x)||_q^q over the invariant measure"""

    @abstractmethod
    def to_dict(self) -> dict:
        pass

    def default_state(self):
        return 0.0

    def normalize_state(self, x):
        return x

    def near_boundary(self, x) -> bool:
        return False

    def sample_states(self, count: int) -> list:
        return [self.default_state()] * count

    @property
    def exact_capable(self) -> bool:
        return False

    def measure_support_bounds(self) -> Tuple[float, float]:
        """Interval containing every mu_x (and every finite stage)"""
        lo, hi = self.support_bounds()
        return min(0.0, lo / (1.0 - self.lam)), max(0.0, hi / (1.0 - self.lam))

    def stage_for_scale(self, m: int) -> int:
        """Stage n whose scale lambda^n is closest to 2^-m in log terms"""
        return int(round(m * math.log(2.0) / -math.log(self.lam)))

    def scale_for_stage(self, n: int) -> int:
        """Smallest m with 2^-m <= lambda^n"""
        return max(0, int(math.ceil(n * -math.log2(self.lam) - 1e-9)))

    def birkhoff_log_norm(self, q: float, samples: int, x=None) -> float:
        """Orbit average of log ||Delta(T^i x)||_q^q, skipping points near piece boundaries"""
        x = self.default_state() if x is None else self.normalize_state(x)
        total = 0.0
        used = 0
        for i in range(samples):
            point = self.orbit(x, i)
            if self.near_boundary(point):
                continue
            total += math.log(atomic_lq(self.delta(point), q))
            used += 1
        if used == 0:
            raise ArgumentError("every orbit point fell on a piece boundary")
        return total / used

    def __repr__(self):
        return f"{type(self).__name__}(lambda={self._lam.text})"


class SelfSimilarModel(Model):
    """One-point state space: homogeneous self-similar measures"""

    type_tag = 'selfsimilar'

    def __init__(self, delta: AtomicMeasure, lam):
        super().__init__(_parse_lambda(lam))
        _check_probability(delta, 'delta')
        self._delta = delta
        self._float_delta = delta.to_float()

    @property
    def state_space(self) -> dict:
        return {'kind': 'trivial', 'invariant_measure': 'point mass'}

    def orbit(self, x, n: int):
        return x

    def delta(self, x, exact: bool = False) -> AtomicMeasure:
        return self._delta if exact else self._float_delta

    def support_bounds(self) -> Tuple[float, float]:
        return self._delta.support_bounds()

    def mean_log_norm(self, q: float) -> float:
        return math.log(atomic_lq(self._delta, q))

    @property
    def exact_capable(self) -> bool:
        return self._delta.exact and self._lam.is_exact

    def to_dict(self) -> dict:
        return {'type': self.type_tag, 'delta': self._delta.to_json(), 'lambda': self._lam.text}


class ConvolutionModel(Model):
    """
    Rotation by a1 on [0, a2), a_i = -log l_i, with
    Delta(x) = Delta1 * S_{e^x} Delta2 on [0, a1) and Delta1 on [a1, a2)
    """

    type_tag = 'convolution'

    def __init__(self, d1: AtomicMeasure, l1, d2: AtomicMeasure, l2, asserted_irrational: bool = True):
        l1 = _parse_lambda(l1, 'l1')
        l2 = _parse_lambda(l2, 'l2')
        if not l2.value < l1.value:
            raise ArgumentError(f"convolution model needs 0 < l2 < l1 < 1 (got l1={l1.text}, l2={l2.text})")
        _check_probability(d1, 'd1')
        _check_probability(d2, 'd2')
        super().__init__(l1)
        self._l2 = l2
        self.d1 = d1.to_float()
        self.d2 = d2.to_float()
        self._d1_source = d1
        self._d2_source = d2
        self.step = -math.log(l1.value)
        self.period = -math.log(l2.value)
        self.asserted_irrational = asserted_irrational
        self.ratio_looks_rational = warn_if_rational('log l2 / log l1', self.period / self.step)

    @property
    def l2(self) -> float:
        return self._l2.value

    @property
    def state_space(self) -> dict:
        return {'kind': 'circle', 'period': self.period, 'step': self.step,
                'invariant_measure': 'normalized Lebesgue'}

    def normalize_state(self, x):
        return float(x) % self.period

    def orbit(self, x, n: int):
        return (float(x) + math.fmod(n * self.step, self.period)) % self.period

    def delta(self, x, exact: bool = False) -> AtomicMeasure:
        x = float(x)
        if x < self.step:
            return convolve_atoms(self.d1, affine_image(self.d2, math.exp(x)))
        return self.d1

    def split_stage(self, x, n: int) -> Tuple[float, int]:
        """
        (x', n') with mu_{x,n} = (*_{i<n} S_{l1^i} Delta1) * S_{e^x'} (*_{j<n'} S_{l2^j} Delta2)

        n' counts the i < n with T^i x in [0, a1); x' is x, or x - a2 when x >= a1.
        """
        x = self.normalize_state(x)
        n_prime = sum(1 for i in range(n) if self.orbit(x, i) < self.step)
        return (x if x < self.step else x - self.period), n_prime

    def near_boundary(self, x) -> bool:
        x = float(x)
        return min(abs(x), abs(x - self.step), abs(self.period - x)) < BOUNDARY_GAP

    def sample_states(self, count: int) -> list:
        return [float(p[0]) for p in _spread_samples(count, 1, [self.period],
                                                     lambda p: self.near_boundary(p[0]))]

    def support_bounds(self) -> Tuple[float, float]:
        lo1, hi1 = self.d1.support_bounds()
        lo2, hi2 = self.d2.support_bounds()
        lo = lo1 + min(0.0, lo2, lo2 / self.lam)
        hi = hi1 + max(0.0, hi2, hi2 / self.lam)
        return lo, hi

    def mean_log_norm(self, q: float) -> float:
        return math.log(atomic_lq(self.d1, q)) + (self.step / self.period) * math.log(atomic_lq(self.d2, q))

    def to_dict(self) -> dict:
        return {
            'type': self.type_tag,
            'delta1': self._d1_source.to_json(), 'lambda1': self._lam.text,
            'delta2': self._d2_source.to_json(), 'lambda2': self._l2.text,
        }


class MultiConvolutionModel(Model):
    """
    Torus model for S-scaled convolutions of k self-similar measures

    lambdas ascend, a_j = -log lambda_j. The state is x in prod_{j<k} [0, a_j)
    and T adds a_k in every coordinate. With J(x) = {j : x_j < a_k},
    Delta(x) = (*_{j in J} S_{e^{x_j}} Delta_j) * Delta_k and lambda = lambda_k.
    """

    type_tag = 'multiconvolution'

    def __init__(self, deltas: Sequence[AtomicMeasure], lambdas: Sequence, asserted_irrational: bool = True):
        if len(deltas) != len(lambdas):
            raise ArgumentError("deltas and lambdas must have the same length")
        if len(deltas) < 2:
            raise ArgumentError(f"multi-convolution needs k >= 2 factors (got {len(deltas)})")
        lams = [_parse_lambda(v, f'lambda[{i}]') for i, v in enumerate(lambdas)]
        if any(b.value <= a.value for a, b in zip(lams, lams[1:])):
            raise ArgumentError("lambdas must be strictly increasing")
        for i, d in enumerate(deltas):
            _check_probability(d, f'deltas[{i}]')
        super().__init__(lams[-1])
        self._lams = lams
        self._sources = list(deltas)
        self.deltas = [d.to_float() for d in deltas]
        self.k = len(deltas)
        self.periods = [-math.log(lam.value) for lam in lams[:-1]]
        self.step = -math.log(lams[-1].value)
        self.asserted_irrational = asserted_irrational
        self.ratio_looks_rational = any(
            warn_if_rational(f'log lambda[{j}] / log lambda[{self.k - 1}]', p / self.step)
            for j, p in enumerate(self.periods)
        )

    @property
    def state_space(self) -> dict:
        return {'kind': 'torus', 'dimension': self.k - 1, 'periods': list(self.periods),
                'step': self.step, 'invariant_measure': 'normalized Lebesgue'}

    def default_state(self):
        return tuple(0.0 for _ in self.periods)

    def normalize_state(self, x):
        if np.isscalar(x):
            x = [x] * (self.k - 1)
        if len(x) != self.k - 1:
            raise ArgumentError(f"state must have {self.k - 1} coordinates")
        return tuple(float(v) % p for v, p in zip(x, self.periods))

    def orbit(self, x, n: int):
        shift = n * self.step
        return tuple((float(v) + math.fmod(shift, p)) % p for v, p in zip(x, self.periods))

    def delta(self, x, exact: bool = False) -> AtomicMeasure:
        result = self.deltas[-1]
        for j, v in enumerate(x):
            if v < self.step:
                result = convolve_atoms(affine_image(self.deltas[j], math.exp(v)), result)
        return result

    def near_boundary(self, x) -> bool:
        return any(min(abs(v), abs(v - self.step), abs(p - v)) < BOUNDARY_GAP
                   for v, p in zip(x, self.periods))

    def sample_states(self, count: int) -> list:
        return [tuple(float(v) for v in p)
                for p in _spread_samples(count, self.k - 1, self.periods, self.near_boundary)]

    def support_bounds(self) -> Tuple[float, float]:
        lo, hi = self.deltas[-1].support_bounds()
        for d in self.deltas[:-1]:
            dlo, dhi = d.support_bounds()
            lo += min(0.0, dlo, dlo / self.lam)
            hi += max(0.0, dhi, dhi / self.lam)
        return lo, hi

    def mean_log_norm(self, q: float) -> float:
        total = math.log(atomic_lq(self.deltas[-1], q))
        for d, p in zip(self.deltas[:-1], self.periods):
            total += (self.step / p) * math.log(atomic_lq(d, q))
        return total

    def to_dict(self) -> dict:
        return {
            'type': self.type_tag,
            'deltas': [d.to_json() for d in self._sources],
            'lambdas': [lam.text for lam in self._lams],
        }


class ProjectionModel(Model):
    """
    Projections of a planar self-similar measure with rotation alpha

    The state is an angle theta; T rotates by -alpha and Delta(theta) is the
    image of the planar digit measure under y -> <(cos theta, sin theta), y>.
    """

    type_tag = 'projection'

    def __init__(self, planar_delta: Sequence, lam, alpha, asserted_irrational: bool = True):
        super().__init__(_parse_lambda(lam))
        points = []
        masses = []
        for entry in planar_delta:
            (tx, ty), mass = entry
            points.append((float(parse_real(tx).value), float(parse_real(ty).value)))
            masses.append(float(parse_real(mass).value))
        if not points:
            raise ArgumentError("planar delta needs at least one atom")
        self.points = np.asarray(points, dtype=float)
        self.point_masses = np.asarray(masses, dtype=float)
        if abs(self.point_masses.sum() - 1.0) > 1e-10 or np.any(self.point_masses <= 0):
            raise ArgumentError("planar delta masses must be positive and sum to 1")
        self._alpha = parse_real(alpha)
        self.alpha = self._alpha.value
        self.asserted_irrational = asserted_irrational
        self.ratio_looks_rational = self.alpha != 0 and warn_if_rational('alpha / pi', self.alpha / math.pi)

    @property
    def state_space(self) -> dict:
        return {'kind': 'circle', 'period': TWO_PI, 'step': -self.alpha,
                'invariant_measure': 'normalized Lebesgue'}

    def normalize_state(self, x):
        if not np.isscalar(x):
            vx, vy = (float(v) for v in x)
            if vx == 0 and vy == 0:
                raise ArgumentError("direction vector must be nonzero")
            x = math.atan2(vy, vx)
        return float(x) % TWO_PI

    def orbit(self, x, n: int):
        return (float(x) - math.fmod(n * self.alpha, TWO_PI)) % TWO_PI

    def delta(self, x, exact: bool = False) -> AtomicMeasure:
        theta = float(x)
        locs = self.points @ np.array([math.cos(theta), math.sin(theta)])
        return AtomicMeasure(locs, self.point_masses, exact=False)

    def sample_states(self, count: int) -> list:
        return [float(p[0]) for p in _spread_samples(count, 1, [TWO_PI], lambda p: False)]

    def support_bounds(self) -> Tuple[float, float]:
        radius = float(np.max(np.hypot(self.points[:, 0], self.points[:, 1])))
        return -radius, radius

    def mean_log_norm(self, q: float) -> float:
        # distinct planar atoms project injectively for all but finitely many directions
        _, inverse = np.unique(self.points, axis=0, return_inverse=True)
        merged = np.bincount(inverse.ravel(), weights=self.point_masses)
        return math.log(float(np.sum(merged ** q)))

    def to_dict(self) -> dict:
        return {
            'type': self.type_tag,
            'planar_delta': [[[float(x), float(y)], float(w)]
                             for (x, y), w in zip(self.points.tolist(), self.point_masses.tolist())],
            'lambda': self._lam.text,
            'alpha': self._alpha.text,
        }


class SkipModel(Model):
    """
    Split a model along the residues of the time index mod k

    keep='non_multiples' runs on X x Z/k with Delta'(x, 0) = delta_0 and
    Delta'(x, j) = Delta(x) otherwise; keep='multiples' runs T^k with
    contraction lambda^k. The stage kn of the base model is the convolution
    of the two skip stages.
    """

    type_tag = 'skip'
    KEEP_MODES = ('multiples', 'non_multiples')

    def __init__(self, base: Model, k: int, keep: str):
        if int(k) != k or k < 2:
            raise ArgumentError(f"skip model needs an integer k >= 2 (got {k})")
        if keep not in self.KEEP_MODES:
            raise ArgumentError(f"keep must be one of {self.KEEP_MODES}, got {keep!r}")
        self.base = base
        self.k = int(k)
        self.keep = keep
        if keep == 'multiples':
            base_exact = base.lam_exact
            self._power = base_exact ** self.k if base_exact is not None else None
            if isinstance(self._power, Fraction):
                lam = parse_real(self._power)
            else:
                lam = ExactReal(text=f"({base._lam.text})**{self.k}", value=base.lam ** self.k)
            super().__init__(lam)
        else:
            super().__init__(base._lam)
            self._power = None

    @property
    def lam_exact(self):
        if self.keep == 'multiples':
            return self._power
        return self.base.lam_exact

    @property
    def state_space(self) -> dict:
        if self.keep == 'multiples':
            return {'kind': 'power', 'base': self.base.state_space, 'power': self.k}
        return {'kind': 'product', 'base': self.base.state_space, 'order': self.k,
                'invariant_measure': 'base measure x uniform on Z/k'}

    def default_state(self):
        if self.keep == 'multiples':
            return self.base.default_state()
        return (self.base.default_state(), 0)

    def normalize_state(self, x):
        if self.keep == 'multiples':
            return self.base.normalize_state(x)
        if isinstance(x, tuple) and len(x) == 2 and isinstance(x[1], (int, np.integer)) \
                and not isinstance(x[1], bool):
            return (self.base.normalize_state(x[0]), int(x[1]) % self.k)
        return (self.base.normalize_state(x), 0)

    def orbit(self, x, n: int):
        if self.keep == 'multiples':
            return self.base.orbit(x, self.k * n)
        point, j = x
        return (self.base.orbit(point, n), (j + n) % self.k)

    def delta(self, x, exact: bool = False) -> AtomicMeasure:
        if self.keep == 'multiples':
            return self.base.delta(x, exact)
        point, j = x
        if j == 0:
            return AtomicMeasure.dirac(Fraction(0) if exact else 0.0)
        return self.base.delta(point, exact)

    def near_boundary(self, x) -> bool:
        if self.keep == 'multiples':
            return self.base.near_boundary(x)
        return self.base.near_boundary(x[0])

    def sample_states(self, count: int) -> list:
        base_samples = self.base.sample_states(count)
        if self.keep == 'multiples':
            return base_samples
        return [(s, i % self.k) for i, s in enumerate(base_samples)]

    def support_bounds(self) -> Tuple[float, float]:
        lo, hi = self.base.support_bounds()
        if self.keep == 'multiples':
            return lo, hi
        return min(0.0, lo), max(0.0, hi)

    def mean_log_norm(self, q: float) -> float:
        base = self.base.mean_log_norm(q)
        if self.keep == 'multiples':
            return base
        return base * (self.k - 1) / self.k

    @property
    def exact_capable(self) -> bool:
        return self.base.exact_capable

    def to_dict(self) -> dict:
        return {'type': self.type_tag, 'base': self.base.to_dict(), 'k': self.k, 'keep': self.keep}


# Constructors

def make_selfsimilar(delta: AtomicMeasure, lam) -> SelfSimilarModel:
    return SelfSimilarModel(delta, lam)


def make_convolution(d1: AtomicMeasure, l1, d2: AtomicMeasure, l2) -> ConvolutionModel:
    return ConvolutionModel(d1, l1, d2, l2)


def make_multi_convolution(deltas: Sequence[AtomicMeasure], lambdas: Sequence) -> MultiConvolutionModel:
    return MultiConvolutionModel(deltas, lambdas)


def make_projection(planar_delta: Sequence, lam, alpha) -> ProjectionModel:
    return ProjectionModel(planar_delta, lam, alpha)


def make_skip(base: Model, k: int, keep: str) -> SkipModel:
    return SkipModel(base, k, keep)


# Generation

def _use_exact(model: Model, exact: bool) -> bool:
    if exact and not model.exact_capable:
        logger.warning(f"{model!r} has no exact representation; generating in float mode")
        return False
    return exact


def iter_stages(model: Model, x, n: int, exact: bool = False) -> Iterator[AtomicMeasure]:
    """Yield mu_{x,0}, ..., mu_{x,n}"""
    if n < 0:
        raise ArgumentError(f"stage must be nonnegative, got {n}")
    exact = _use_exact(model, exact)
    x = model.normalize_state(x)
    lam = model.lam_exact if exact else model.lam

    stage = AtomicMeasure.dirac(Fraction(0) if exact else 0.0)
    yield stage
    scale = Fraction(1) if exact else 1.0
    for i in range(n):
        piece = affine_image(model.delta(model.orbit(x, i), exact), scale, 0)
        stage = convolve_atoms(stage, piece)
        logger.debug(f"stage {i + 1}: {len(stage)} atoms, {stage.overlaps} overlaps")
        yield stage
        scale = scale * lam


def generate_atoms(model: Model, x, n: int, exact: bool = False) -> AtomicMeasure:
    """mu_{x,n} = *_{i<n} S_{lambda^i} Delta(T^i x)"""
    stage = None
    for stage in iter_stages(model, x, n, exact):
        pass
    return stage


def theoretical_dimension(model: Model, q: float, x_samples: int = 2000, method: str = 'auto') -> float:
    """
    min( integral of log ||Delta||_q^q / ((q - 1) log lambda), 1 )

    method='closed' uses the model's closed form, 'birkhoff' an orbit
    average over x_samples points; 'auto' prefers the closed form.
    """
    if not q > 1:
        raise DomainError(f"theoretical_dimension needs q > 1, got {q}")
    if method not in ('auto', 'closed', 'birkhoff'):
        raise ArgumentError(f"unknown method {method!r}")

    if method == 'birkhoff':
        integral = model.birkhoff_log_norm(q, x_samples)
    else:
        integral = model.mean_log_norm(q)
    return min(integral / ((q - 1.0) * math.log(model.lam)), 1.0)


# Non-homogeneous IFS

@dataclass(frozen=True)
class RatioClass:
    ratio: float
    count: int
    mass: float


@dataclass
class NonHomStage:
    """Stopping-set measure mu_m with its contraction-ratio classes"""

    m: int
    measure: AtomicMeasure
    words: Optional[List[Tuple[int, ...]]]
    classes: List[RatioClass] = field(default_factory=list)
    # (ratio class key, t_u) per word, in word order
    cylinders: Optional[List[Tuple[Tuple[int, float], object]]] = None

    @property
    def class_count(self) -> int:
        return len(self.classes)

    @property
    def word_count(self) -> int:
        return sum(c.count for c in self.classes)


class NonHomIFS:
    """Maps x -> lambda_i x + t_i with probability weights p_i"""

    type_tag = 'nonhom'

    def __init__(self, maps: Sequence[Tuple], weights: Sequence):
        if len(maps) == 0 or len(maps) != len(weights):
            raise ArgumentError("IFS needs one weight per map and at least one map")
        self._ratios = [parse_real(r) for r, _ in maps]
        self._translations = [parse_real(t) for _, t in maps]
        self._weights = [parse_real(p) for p in weights]
        for r in self._ratios:
            if r.value == 0 or abs(r.value) >= 1:
                raise ArgumentError(f"contraction ratios must satisfy 0 < |lambda| < 1 (got {r.text})")
        if any(p.value <= 0 for p in self._weights):
            raise ArgumentError("IFS weights must be strictly positive")
        if abs(sum(p.value for p in self._weights) - 1.0) > 1e-10:
            raise ArgumentError("IFS weights must sum to 1")

    @property
    def ratios(self) -> List[float]:
        return [r.value for r in self._ratios]

    @property
    def translations(self) -> List[float]:
        return [t.value for t in self._translations]

    @property
    def weights(self) -> List[float]:
        return [p.value for p in self._weights]

    @property
    def exact_capable(self) -> bool:
        return all(v.is_rational for v in self._ratios + self._translations)

    def is_homogeneous(self) -> bool:
        return len(set(self.ratios)) == 1

    def to_dict(self) -> dict:
        return {
            'type': self.type_tag,
            'maps': [[r.text, t.text] for r, t in zip(self._ratios, self._translations)],
            'weights': [p.text for p in self._weights],
        }

    def __repr__(self):
        return f"NonHomIFS({len(self._ratios)} maps)"


def _ratio_key(size: float) -> Tuple[int, float]:
    return (1 if size > 0 else -1, round(math.log2(abs(size)), 9))


def generate_nonhom(ifs: NonHomIFS, m: int, exact: bool = False, with_words: bool = False) -> NonHomStage:
    """
    Enumerate the stopping set: words u with |lambda_u| <= 2^-m < |lambda_{u^-}|

    Words are tuples of 1-based map indices; t_{ui} = t_u + lambda_u t_i.
    """
    if m < 0:
        raise ArgumentError(f"m must be nonnegative, got {m}")
    if exact and not ifs.exact_capable:
        logger.warning("IFS has irrational parameters; enumerating in float mode")
        exact = False

    threshold = 2.0 ** -m * (1 + 1e-12)
    ratios = ifs.ratios
    weights = ifs.weights
    if exact:
        exact_ratios = [r.rational for r in ifs._ratios]
        exact_trans = [t.rational for t in ifs._translations]
        root = ((), Fraction(1), Fraction(0), 1.0, 1.0)
    else:
        exact_ratios = ratios
        exact_trans = ifs.translations
        root = ((), 1.0, 0.0, 1.0, 1.0)

    stopped = []
    frontier = deque([root])
    while frontier:
        word, ratio, offset, mass, size = frontier.popleft()
        if abs(size) <= threshold:
            stopped.append((word, ratio, offset, mass, size))
            if len(stopped) > settings.CAPACITY:
                raise CapacityError(
                    f"stopping set at m={m} exceeds the capacity {settings.CAPACITY}",
                    requested=len(stopped), capacity=settings.CAPACITY,
                )
            continue
        for i, (r, t, p) in enumerate(zip(exact_ratios, exact_trans, weights), start=1):
            frontier.append((word + (i,), ratio * r, offset + ratio * t, mass * p, size * ratios[i - 1]))
        if len(frontier) + len(stopped) > settings.CAPACITY:
            raise CapacityError(
                f"word tree at m={m} exceeds the capacity {settings.CAPACITY}",
                requested=len(frontier) + len(stopped), capacity=settings.CAPACITY,
            )

    offsets = [s[2] for s in stopped]
    masses = [s[3] for s in stopped]
    if exact:
        measure = AtomicMeasure(offsets, masses, exact=True)
    else:
        measure = AtomicMeasure(np.asarray(offsets, dtype=float), masses, exact=False)

    grouped: Dict[Tuple[int, float], List] = {}
    keys = []
    for _, _, _, mass, size in stopped:
        key = _ratio_key(size)
        keys.append(key)
        entry = grouped.setdefault(key, [size, 0, 0.0])
        entry[1] += 1
        entry[2] += mass
    classes = [RatioClass(ratio=v[0], count=v[1], mass=v[2])
               for _, v in sorted(grouped.items(), key=lambda kv: (kv[0][1], kv[0][0]))]

    words = [s[0] for s in stopped] if with_words else None
    cylinders = list(zip(keys, offsets)) if with_words else None
    logger.debug(f"stopping set m={m}: {len(stopped)} words, {len(classes)} ratio classes")
    return NonHomStage(m=m, measure=measure, words=words, classes=classes, cylinders=cylinders)


def symbolic_tau(ifs: NonHomIFS, q: float, m: int) -> float:
    """-log2( sum over the stopping set of p_u^q ) / m"""
    if not q > 1:
        raise DomainError(f"symbolic_tau needs q > 1, got {q}")
    if m < 1:
        raise ArgumentError("symbolic_tau needs m >= 1")
    # p_u over words, not over merged atoms
    return -math.log2(_word_mass_power_sum(ifs, m, q)) / m


def _word_mass_power_sum(ifs: NonHomIFS, m: int, q: float) -> float:
    threshold = 2.0 ** -m * (1 + 1e-12)
    total = 0.0
    visited = 0
    stack = [(1.0, 1.0)]
    while stack:
        size, mass = stack.pop()
        if abs(size) <= threshold:
            total += mass ** q
            visited += 1
            if visited > settings.CAPACITY:
                raise CapacityError(
                    f"stopping set at m={m} exceeds the capacity {settings.CAPACITY}",
                    requested=visited, capacity=settings.CAPACITY,
                )
            continue
        for r, p in zip(ifs.ratios, ifs.weights):
            stack.append((size * r, mass * p))
    return total


# Serialization

def model_from_dict(data: dict):
    """Build a Model (or NonHomIFS) from its JSON descriptor"""
    if not isinstance(data, dict) or 'type' not in data:
        raise ArgumentError("model descriptor needs a 'type' field")
    kind = data['type']
    try:
        if kind == 'selfsimilar':
            return make_selfsimilar(_delta_from_json(data['delta']), data['lambda'])
        if kind == 'convolution':
            return make_convolution(_delta_from_json(data['delta1']), data['lambda1'],
                                    _delta_from_json(data['delta2']), data['lambda2'])
        if kind == 'multiconvolution':
            return make_multi_convolution([_delta_from_json(d) for d in data['deltas']], data['lambdas'])
        if kind == 'projection':
            return make_projection(data['planar_delta'], data['lambda'], data.get('alpha', 0))
        if kind == 'skip':
            return make_skip(model_from_dict(data['base']), data['k'], data['keep'])
        if kind == 'nonhom':
            return NonHomIFS([tuple(mp) for mp in data['maps']], data['weights'])
    except KeyError as e:
        raise ArgumentError(f"model descriptor of type {kind!r} is missing {e}")
    raise ArgumentError(f"unknown model type {kind!r}")
