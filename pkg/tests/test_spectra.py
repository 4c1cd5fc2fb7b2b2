"""
Tests for services.spectra
"""

import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from services.dyadic_measure import AtomicMeasure, DyadicMeasure, uniform_measure
from services.models import NonHomIFS, make_convolution, make_selfsimilar
from services.spectra import (
    SPECTRUM_COLUMNS, FrostmanReport, cocycle_check, empirical_tau, frostman_exponent,
    legendre, lq_dimension_profile, reports_to_frame, spectrum_service, summary_frame,
    tau_tilde, theoretical_tau_homogeneous,
)
from storage.artifact_store import GoldenStore
from utils.errors import ArgumentError, DataError, DomainError

CANTOR_DIM = math.log(2) / math.log(3)
GOLDEN_DIR = Path(__file__).parent / 'golden'


def weighted_binary():
    return make_selfsimilar(AtomicMeasure([Fraction(0), Fraction(1)], [0.75, 0.25]), '1/2')


def tau_weighted(q: float, p: float = 0.75) -> float:
    return -math.log2(p ** q + (1 - p) ** q)


def tau_weighted_slope(q: float, p: float = 0.75) -> float:
    total = p ** q + (1 - p) ** q
    return -(p ** q * math.log(p) + (1 - p) ** q * math.log(1 - p)) / (total * math.log(2))


class TestEmpiricalTau:
    def test_uniform_measure(self):
        report = empirical_tau(uniform_measure(14), 2.0, 4, 14)
        for _, value in report.per_scale:
            assert value == pytest.approx(1.0)
        assert report.lq_dimension == pytest.approx(1.0)

    def test_single_atom(self):
        report = empirical_tau(DyadicMeasure(14, [5], [1.0]), 3.0, 4, 14)
        assert report.regression_tau == 0.0
        assert all(value == 0.0 for _, value in report.per_scale)

    @pytest.mark.parametrize('q', [1.5, 2.0, 4.0])
    def test_middle_thirds(self, middle_thirds, q):
        report = empirical_tau(middle_thirds, q, 4, 20)
        assert report.lq_dimension == pytest.approx(CANTOR_DIM, abs=0.02)
        assert report.theoretical_dimension == pytest.approx(CANTOR_DIM)

    def test_weighted_binary(self):
        report = empirical_tau(weighted_binary(), 2.0, 4, 14)
        assert report.lq_dimension == pytest.approx(math.log2(1.6), abs=0.03)

    @pytest.mark.slow
    def test_convolution_model_fills_the_line(self):
        # base-3 and base-4 digits {0, 2}: dimensions log 2 / log 3 and 1/2 add past 1
        digits = AtomicMeasure([Fraction(0), Fraction(2)], [0.5, 0.5])
        model = make_convolution(digits, '1/3', digits, '1/4')
        dims = [empirical_tau(model, 2.0, 4, 18, x=x).lq_dimension for x in model.sample_states(5)]
        assert float(np.median(dims)) == pytest.approx(1.0, abs=0.05)

    def test_per_scale_range_and_monotone_sums(self, rng):
        indices = rng.choice(1 << 12, size=300, replace=False)
        masses = rng.random(300)
        mu = DyadicMeasure(12, indices, masses / masses.sum())
        for q in (1.01, 2.0, 6.0):
            report = empirical_tau(mu, q, 4, 12)
            for _, value in report.per_scale:
                assert -1e-9 <= value <= q - 1 + 1e-9
            assert all(b <= a + 1e-15 for a, b in zip(report.raw_sums, report.raw_sums[1:]))

    def test_near_one_is_small(self, middle_thirds):
        report = empirical_tau(middle_thirds, 1.01, 4, 12)
        assert 0.0 <= report.regression_tau <= 0.01 + 1e-9

    def test_domain_and_range(self, middle_thirds):
        with pytest.raises(DomainError):
            empirical_tau(middle_thirds, 1.0, 4, 10)
        with pytest.raises(ArgumentError):
            empirical_tau(middle_thirds, 2.0, 3, 10)
        with pytest.raises(ArgumentError):
            empirical_tau(middle_thirds, 2.0, 8, 8)

    def test_frame_columns(self, middle_thirds):
        reports = spectrum_service.run_grid(middle_thirds, [2.0, 3.0], 4, 8)
        frame = reports_to_frame(reports)
        assert list(frame.columns) == SPECTRUM_COLUMNS
        assert len(frame) == 2 * 5
        assert list(summary_frame(reports)['q']) == [2.0, 3.0]


class TestRunGrid:
    def test_thread_count_does_not_change_results(self, middle_thirds):
        grid = [3.0, 1.5, 2.0, 8.0]
        single = spectrum_service.run_grid(middle_thirds, grid, 4, 10, threads=1)
        pooled = spectrum_service.run_grid(middle_thirds, grid, 4, 10, threads=4)
        assert [r.q for r in single] == sorted(grid)
        assert [r.to_json() for r in single] == [r.to_json() for r in pooled]

    def test_dimension_profile_is_non_increasing(self, middle_thirds):
        reports, monotone = lq_dimension_profile(middle_thirds, [1.5, 2.0, 4.0, 8.0], 4, 12)
        assert monotone
        assert len(reports) == 4


class TestTheoreticalTau:
    def test_full_dimension_endpoint(self):
        delta = AtomicMeasure(np.array([0.0, 1.0]), [0.5, 0.5])
        assert theoretical_tau_homogeneous(delta, 0.5, 3.0) == pytest.approx(2.0)

    def test_three_atoms(self):
        delta = AtomicMeasure(np.array([0.0, 1.0, 2.0]), [1 / 3, 1 / 3, 1 / 3])
        assert theoretical_tau_homogeneous(delta, 0.25, 2.0) == pytest.approx(math.log(3) / math.log(4))

    def test_weighted(self):
        delta = AtomicMeasure(np.array([0.0, 1.0]), [0.75, 0.25])
        assert theoretical_tau_homogeneous(delta, 0.5, 2.0) == pytest.approx(math.log2(1.6))

    def test_domain(self):
        with pytest.raises(DomainError):
            theoretical_tau_homogeneous(AtomicMeasure.dirac(0.0), 0.5, 0.5)


class TestTauTilde:
    def test_homogeneous(self):
        ifs = NonHomIFS([('1/3', 0), ('1/3', '2/3')], ['1/2', '1/2'])
        root = tau_tilde(ifs, 2.0)
        assert root.tau == pytest.approx(CANTOR_DIM, abs=1e-10)
        assert root.dimension == pytest.approx(CANTOR_DIM, abs=1e-10)

    def test_quadratic(self):
        ifs = NonHomIFS([('1/2', 0), ('1/4', '1/2')], ['1/2', '1/2'])
        assert tau_tilde(ifs, 2.0).tau == pytest.approx(math.log2((math.sqrt(17) - 1) / 2), abs=1e-10)

    def test_random_residuals(self, rng):
        for _ in range(100):
            k = int(rng.integers(2, 6))
            weights = rng.dirichlet(np.ones(k))
            weights[-1] = 1.0 - weights[:-1].sum()
            ratios = rng.uniform(0.05, 0.9, size=k)
            ifs = NonHomIFS([(float(r), 0.0) for r in ratios], [float(w) for w in weights])
            q = float(rng.uniform(1.1, 6.0))
            root = tau_tilde(ifs, q)
            excess = sum(p ** q * r ** -root.tau for p, r in zip(ifs.weights, ifs.ratios)) - 1.0
            assert abs(excess) < 1e-12
            assert root.residual < 1e-12


class TestLegendre:
    GRID = [float(q) for q in range(1, 11)]

    def test_linear_spectrum_at_slope(self):
        s = 0.6
        result = legendre([(q, s * (q - 1)) for q in self.GRID], s)
        assert result.value == pytest.approx(s)
        assert not result.boundary

    def test_linear_spectrum_off_slope_is_boundary(self):
        s = 0.6
        result = legendre([(q, s * (q - 1)) for q in self.GRID], s + 0.5)
        assert result.boundary
        assert result.q_star == 1.0

    def test_identity_at_interior_q(self):
        grid = [1.5 + i / 100 for i in range(251)]
        samples = [(q, tau_weighted(q)) for q in grid]
        q0 = 2.5
        alpha = tau_weighted_slope(q0)
        result = legendre(samples, alpha)
        assert result.value == pytest.approx(q0 * alpha - tau_weighted(q0), abs=1e-4)
        assert result.q_star == pytest.approx(q0, abs=0.011)
        assert not result.boundary
        derivative = dict(result.alpha_grid)
        nearest = min(derivative, key=lambda q: abs(q - q0))
        assert derivative[nearest] == pytest.approx(alpha, abs=1e-4)

    def test_non_concave(self):
        with pytest.raises(DataError):
            legendre([(q, q * q) for q in self.GRID], 1.0)

    def test_too_few_samples(self):
        with pytest.raises(DataError):
            legendre([(q, q - 1) for q in self.GRID[:5]], 1.0)


class TestFrostman:
    def test_uniform(self):
        report = frostman_exponent(uniform_measure(12), 4, 12)
        assert all(value == pytest.approx(1.0) for _, value in report.per_scale)

    def test_single_atom(self):
        report = frostman_exponent(DyadicMeasure(12, [0], [1.0]), 4, 12)
        assert all(value == 0.0 for _, value in report.per_scale)

    def test_middle_thirds(self, middle_thirds):
        report = frostman_exponent(middle_thirds, 4, 20)
        assert report.per_scale[-1][1] == pytest.approx(CANTOR_DIM, abs=0.05)

    def test_consistent_with_lq_dimension(self, middle_thirds):
        q, s = 2.0, 0.6
        assert empirical_tau(middle_thirds, q, 4, 16).lq_dimension > s
        report = frostman_exponent(middle_thirds, 4, 16)
        assert report.max_mass_bound_holds(q, s)
        assert FrostmanReport.implied_bound(q, s) == pytest.approx(0.3)


class TestCocycle:
    def test_single_atom_has_no_defect(self):
        model = make_selfsimilar(AtomicMeasure([Fraction(0)], [1.0]), '1/2')
        report = cocycle_check(model, None, 2.0, range(1, 7))
        assert report.max_defect == 0.0
        assert all(v == 1.0 for v in report.phi.values())

    def test_middle_thirds_defects_stay_bounded(self, middle_thirds):
        report = cocycle_check(middle_thirds, None, 2.0, range(1, 9))
        assert report.defects.shape == (8, 8)
        assert report.max_defect <= 0.5
        assert report.growth_slope <= 0.01

    @pytest.mark.slow
    def test_middle_thirds_against_golden(self, middle_thirds):
        report = cocycle_check(middle_thirds, None, 2.0, range(1, 13))
        golden = GoldenStore(GOLDEN_DIR).check_or_record('cocycle_middle_thirds',
                                                         {'max_defect': report.max_defect})
        assert report.max_defect <= golden['max_defect'] + 0.5
        assert report.growth_slope <= 0.01

    def test_positive_grid_required(self, middle_thirds):
        with pytest.raises(ArgumentError):
            cocycle_check(middle_thirds, None, 2.0, [0, 1])
