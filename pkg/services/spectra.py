"""
Fractal Lq Toolkit - Spectrum Service
Version: 1.0.0

Empirical and theoretical L^q spectra, the tau-tilde equation of
non-homogeneous IFS, Legendre transforms, Frostman exponents and the
sub-multiplicativity (cocycle) diagnostics of the norm sequence.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize

from config.settings import settings
from services.dyadic_measure import (
    AtomicMeasure, DyadicMeasure, coarsen, discretize, lq_norm, renormalize,
)
from services.models import Model, NonHomIFS, atomic_lq, iter_stages, theoretical_dimension
from utils.errors import ArgumentError, DataError, DomainError
from utils.helpers import fit_line, top_half

logger = logging.getLogger(__name__)

Source = Union[Model, DyadicMeasure, AtomicMeasure]

SPECTRUM_COLUMNS = ['q', 'm', 'tau_single', 'tau_regression', 'dimension', 'theoretical']


def _check_q(q: float, name: str = 'q'):
    if not q > 1:
        raise DomainError(f"{name} must exceed 1, got {q}")


@dataclass
class SpectrumReport:
    """Per-scale and regression estimates of tau(q)"""

    q: float
    per_scale: List[Tuple[int, float]]
    raw_sums: List[float]
    regression_tau: float
    theoretical_tau: Optional[float] = None
    fit_r2: float = 1.0

    @property
    def lq_dimension(self) -> float:
        return self.regression_tau / (self.q - 1.0)

    @property
    def theoretical_dimension(self) -> Optional[float]:
        if self.theoretical_tau is None:
            return None
        return self.theoretical_tau / (self.q - 1.0)

    def rows(self) -> List[Dict]:
        return [
            {
                'q': self.q,
                'm': m,
                'tau_single': value,
                'tau_regression': self.regression_tau,
                'dimension': self.lq_dimension,
                'theoretical': self.theoretical_tau,
            }
            for m, value in self.per_scale
        ]

    def to_json(self) -> dict:
        return {
            'q': self.q,
            'per_scale': [[m, v] for m, v in self.per_scale],
            'raw_sums': list(self.raw_sums),
            'regression_tau': self.regression_tau,
            'lq_dimension': self.lq_dimension,
            'theoretical_tau': self.theoretical_tau,
            'fit_r2': self.fit_r2,
        }


def reports_to_frame(reports: Sequence[SpectrumReport]) -> pd.DataFrame:
    """CSV layout: q, m, tau_single, tau_regression, dimension, theoretical"""
    rows = [row for report in reports for row in report.rows()]
    return pd.DataFrame(rows, columns=SPECTRUM_COLUMNS)


def summary_frame(reports: Sequence[SpectrumReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [{'q': r.q, 'tau': r.regression_tau, 'dimension': r.lq_dimension,
          'theoretical': r.theoretical_dimension, 'r2': r.fit_r2} for r in reports],
        columns=['q', 'tau', 'dimension', 'theoretical', 'r2'],
    )


def _check_scale_range(m_min: int, m_max: int):
    if not 4 <= m_min < m_max:
        raise ArgumentError(f"scale range needs 4 <= m_min < m_max (got {m_min}, {m_max})")
    if m_max > settings.SPARSE_SCALE_CAP:
        raise ArgumentError(f"m_max={m_max} exceeds the scale cap {settings.SPARSE_SCALE_CAP}")


def scale_measures(source: Source, scales: Sequence[int], x=None) -> Dict[int, DyadicMeasure]:
    """
    The discretization mu^(m) of the source at every requested scale

    Models are generated stage by stage, renormalized onto [0, 1] and
    discretized in line geometry; a DyadicMeasure is coarsened.
    """
    scales = sorted(set(int(m) for m in scales))
    if isinstance(source, DyadicMeasure):
        if scales[-1] > source.scale_m:
            raise ArgumentError(f"cannot refine a measure at scale {source.scale_m} to m={scales[-1]}")
        return {m: coarsen(source, m) for m in scales}

    if isinstance(source, AtomicMeasure):
        normalized = renormalize(source, source.support_bounds())
        return {m: discretize(normalized, m, 'line') for m in scales}

    if not isinstance(source, Model):
        raise ArgumentError(f"unsupported spectrum source {type(source).__name__}")

    model = source
    x = model.default_state() if x is None else x
    bounds = model.measure_support_bounds()
    wanted: Dict[int, List[int]] = {}
    for m in scales:
        wanted.setdefault(model.stage_for_scale(m), []).append(m)

    result = {}
    n_max = max(wanted)
    for n, stage in enumerate(iter_stages(model, x, n_max)):
        if n in wanted:
            normalized = renormalize(stage, bounds)
            for m in wanted[n]:
                result[m] = discretize(normalized, m, 'line')
    logger.debug(f"scale measures for {model!r}: stages up to {n_max}")
    return result


def report_from_measures(measures: Dict[int, DyadicMeasure], q: float,
                         theoretical_tau: Optional[float] = None) -> SpectrumReport:
    scales = sorted(measures)
    raw = [lq_norm(measures[m], q) for m in scales]
    values = [-math.log2(s) for s in raw]
    per_scale = [(m, v / m) for m, v in zip(scales, values)]

    fit_scales = top_half(scales)
    fit_values = top_half(values)
    slope, _, r2 = fit_line(fit_scales, fit_values)
    return SpectrumReport(q=q, per_scale=per_scale, raw_sums=raw, regression_tau=slope,
                          theoretical_tau=theoretical_tau, fit_r2=r2)


def _theoretical_tau(source: Source, q: float) -> Optional[float]:
    if isinstance(source, Model):
        return (q - 1.0) * theoretical_dimension(source, q)
    return None


def empirical_tau(source: Source, q: float, m_min: int, m_max: int, x=None) -> SpectrumReport:
    """
    Estimate tau(q) from -log2 sum_I mu(I)^q over scales m_min..m_max

    For models, scale m uses the stage n = round(m log 2 / log(1/lambda)).
    The regression slope is fitted over the finer half of the scales.
    """
    _check_q(q)
    _check_scale_range(m_min, m_max)
    measures = scale_measures(source, range(m_min, m_max + 1), x=x)
    return report_from_measures(measures, q, _theoretical_tau(source, q))


def theoretical_tau_homogeneous(delta: AtomicMeasure, lam: float, q: float) -> float:
    """(q - 1) min( log ||Delta||_q^q / ((q - 1) log lambda), 1 )"""
    _check_q(q)
    lam = float(lam)
    if not 0 < lam < 1:
        raise ArgumentError(f"lambda must lie in (0, 1), got {lam}")
    dimension = math.log(atomic_lq(delta, q)) / ((q - 1.0) * math.log(lam))
    return (q - 1.0) * min(dimension, 1.0)


def lq_dimension_profile(source: Source, q_grid: Sequence[float], m_min: int, m_max: int,
                         x=None, tolerance: float = 1e-6) -> Tuple[List[SpectrumReport], bool]:
    """Reports over a q-grid and whether D(mu, q) is non-increasing in q"""
    reports = spectrum_service.run_grid(source, q_grid, m_min, m_max, x=x)
    dims = [r.lq_dimension for r in reports]
    monotone = all(b <= a + tolerance for a, b in zip(dims, dims[1:]))
    return reports, monotone


# tau-tilde

@dataclass(frozen=True)
class TauTilde:
    tau: float
    dimension: float
    residual: float


def tau_tilde(ifs: NonHomIFS, q: float) -> TauTilde:
    """Unique root of sum_i p_i^q |lambda_i|^-tau = 1"""
    _check_q(q)
    weights = np.asarray(ifs.weights, dtype=float) ** q
    logs = -np.log(np.abs(np.asarray(ifs.ratios, dtype=float)))

    def excess(tau: float) -> float:
        return float(np.sum(weights * np.exp(tau * logs))) - 1.0

    def slope(tau: float) -> float:
        return float(np.sum(weights * logs * np.exp(tau * logs)))

    if excess(0.0) >= 0:
        return TauTilde(tau=0.0, dimension=0.0, residual=abs(excess(0.0)))

    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2.0
    tau = optimize.brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    residual = abs(excess(tau))
    for _ in range(5):
        candidate = tau - excess(tau) / slope(tau)
        candidate_residual = abs(excess(candidate))
        if candidate_residual >= residual:
            break
        tau, residual = candidate, candidate_residual

    return TauTilde(tau=tau, dimension=min(tau / (q - 1.0), 1.0), residual=residual)


# Legendre transform

@dataclass
class LegendreResult:
    alpha: float
    value: float
    q_star: float
    boundary: bool
    alpha_grid: List[Tuple[float, float]] = field(default_factory=list)


def legendre(tau_samples: Sequence[Tuple[float, float]], alpha: float,
             tolerance: float = 1e-6) -> LegendreResult:
    """
    Discrete Legendre transform inf_q (alpha q - tau(q)) over the sample grid

    ``boundary`` is set when the infimum is attained only at an end of the
    grid; ``alpha_grid`` holds the finite-difference derivative tau'(q).
    """
    samples = sorted((float(q), float(t)) for q, t in tau_samples)
    if len(samples) < 8:
        raise DataError(f"Legendre transform needs at least 8 samples (got {len(samples)})")
    qs = np.array([s[0] for s in samples])
    taus = np.array([s[1] for s in samples])
    if np.any(np.diff(qs) <= 0):
        raise DataError("q samples must be distinct")

    chords = np.diff(taus) / np.diff(qs)
    if np.any(np.diff(chords) > tolerance):
        worst = int(np.argmax(np.diff(chords)))
        raise DataError(f"tau samples are not concave near q={qs[worst + 1]}")

    values = alpha * qs - taus
    best = int(np.argmin(values))
    interior_min = values[1:-1].min()
    boundary = best in (0, len(qs) - 1) and interior_min > values[best] + 1e-12

    derivative = np.gradient(taus, qs)
    return LegendreResult(
        alpha=alpha,
        value=float(values[best]),
        q_star=float(qs[best]),
        boundary=bool(boundary),
        alpha_grid=list(zip(qs.tolist(), derivative.tolist())),
    )


# Frostman exponent

@dataclass
class FrostmanReport:
    per_scale: List[Tuple[int, float]]
    slope: float
    r2: float

    @staticmethod
    def implied_bound(q: float, s: float) -> float:
        """Frostman exponent implied by D(mu, q) > s"""
        _check_q(q)
        return (1.0 - 1.0 / q) * s

    def max_mass_bound_holds(self, q: float, s: float, slack: float = 0.05) -> bool:
        """max_I mu(I) <= 2^(-m (1 - 1/q) s (1 - slack)) at the finest scale"""
        m, exponent = self.per_scale[-1]
        return exponent * m >= m * self.implied_bound(q, s) * (1.0 - slack) - 1e-12


def frostman_exponent(source: Union[Source, Dict[int, DyadicMeasure]], m_min: int = 4,
                      m_max: int = 20, x=None) -> FrostmanReport:
    """-log2(max_I mu(I)) / m per scale, and the slope of -log2 max against m"""
    if isinstance(source, dict):
        measures = source
    else:
        measures = scale_measures(source, range(m_min, m_max + 1), x=x)
    scales = sorted(measures)
    if len(scales) < 2:
        raise DataError("Frostman exponent needs at least two scales")
    values = [-math.log2(measures[m].max_mass) for m in scales]
    slope, _, r2 = fit_line(top_half(scales) if len(scales) >= 4 else scales,
                            top_half(values) if len(scales) >= 4 else values)
    return FrostmanReport(per_scale=[(m, v / m) for m, v in zip(scales, values)], slope=slope, r2=r2)


# Cocycle diagnostics

@dataclass
class CocycleReport:
    q: float
    n_grid: List[int]
    phi: Dict[int, float]
    defects: np.ndarray
    max_defect: float
    growth_slope: float

    def to_json(self) -> dict:
        return {
            'q': self.q,
            'n_grid': list(self.n_grid),
            'phi': {str(n): v for n, v in sorted(self.phi.items())},
            'defects': self.defects.tolist(),
            'max_defect': self.max_defect,
            'growth_slope': self.growth_slope,
        }


def _state_key(state) -> str:
    return repr(state)


def cocycle_check(model: Model, x, q: float, n_grid: Sequence[int]) -> CocycleReport:
    """
    Defects log2 phi_{n+n'}(x) - log2 phi_n(x) - log2 phi_{n'}(T^n x)

    phi_n(y) = ||mu_{y,n}^(m(n))||_q^q with m(n) the smallest m such that
    2^-m <= lambda^n, measured after renormalizing onto [0, 1].
    """
    _check_q(q)
    n_grid = sorted(set(int(n) for n in n_grid))
    if not n_grid or n_grid[0] < 1:
        raise ArgumentError("cocycle grid needs positive stage indices")

    x = model.normalize_state(x)
    bounds = model.measure_support_bounds()
    cache: Dict[Tuple[str, int], float] = {}

    def phi_series(state, n_max: int):
        key = _state_key(state)
        missing = [n for n in range(n_max + 1) if (key, n) not in cache]
        if missing:
            for n, stage in enumerate(iter_stages(model, state, n_max)):
                if (key, n) not in cache:
                    dm = discretize(renormalize(stage, bounds), model.scale_for_stage(n), 'line')
                    cache[(key, n)] = lq_norm(dm, q)

    top = n_grid[-1]
    phi_series(x, 2 * top)
    for n in n_grid:
        phi_series(model.orbit(x, n), top)

    x_key = _state_key(x)
    defects = np.zeros((len(n_grid), len(n_grid)))
    for i, n in enumerate(n_grid):
        shifted = _state_key(model.orbit(x, n))
        for j, n2 in enumerate(n_grid):
            defects[i, j] = (math.log2(cache[(x_key, n + n2)]) - math.log2(cache[(x_key, n)])
                             - math.log2(cache[(shifted, n2)]))

    row_max = defects.max(axis=1)
    growth = fit_line(n_grid, row_max)[0] if len(n_grid) >= 2 else 0.0
    phi = {n: cache[(x_key, n)] for n in range(2 * top + 1)}
    return CocycleReport(q=q, n_grid=n_grid, phi=phi, defects=defects,
                         max_defect=float(defects.max()), growth_slope=growth)


class SpectrumService:
    """Runs spectrum estimates over q-grids"""

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.THREADS

    def run_grid(self, source: Source, q_grid: Sequence[float], m_min: int, m_max: int,
                 x=None, threads: Optional[int] = None) -> List[SpectrumReport]:
        """
        SpectrumReports for every q in the grid, ordered by q

        The scale measures are computed once and shared by every q.
        """
        for q in q_grid:
            _check_q(q)
        _check_scale_range(m_min, m_max)
        measures = scale_measures(source, range(m_min, m_max + 1), x=x)
        workers = threads or self.threads

        reports: Dict[float, SpectrumReport] = {}
        if workers <= 1:
            for q in q_grid:
                reports[q] = report_from_measures(measures, q, _theoretical_tau(source, q))
        else:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                future_to_q = {
                    executor.submit(report_from_measures, measures, q, _theoretical_tau(source, q)): q
                    for q in q_grid
                }
                for future in as_completed(future_to_q):
                    reports[future_to_q[future]] = future.result()

        return [reports[q] for q in sorted(reports)]


# Singleton instance
_spectrum_service_instance = None


def get_spectrum_service() -> SpectrumService:
    """Get or create spectrum service singleton"""
    global _spectrum_service_instance
    if _spectrum_service_instance is None:
        _spectrum_service_instance = SpectrumService()
    return _spectrum_service_instance


spectrum_service = get_spectrum_service()
