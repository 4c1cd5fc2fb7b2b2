"""
Tests for services.addcomb
"""

import numpy as np
import pytest

from services.addcomb import (
    DyadicSet, additive_energy, branching, center, collapse, doubling, extract_uniform,
    inverse_witness, is_centered, level_sets, lq_transfer_check, random_set, random_uniform_set,
    sumset, sumset_bound_check,
)
from services.dyadic_measure import DyadicMeasure, uniform_measure
from utils.errors import ArgumentError, DomainError, PreconditionError


def line_set(m, indices):
    return DyadicSet(m, indices, geometry='line')


class TestDyadicSet:
    def test_circle_indices_wrap(self):
        assert DyadicSet(3, [9, 1, 17]).indices.tolist() == [1]

    def test_json_and_measure_support(self):
        a = line_set(5, [3, 1, 7])
        assert DyadicSet.from_json(a.to_json()) == a
        dm = DyadicMeasure(5, [1, 3, 7], [0.2, 0.3, 0.5], geometry='line')
        assert DyadicSet.from_measure(dm) == a


class TestSumsAndEnergy:
    @pytest.mark.parametrize('method', ['auto', 'naive', 'fft'])
    def test_two_point_energy(self, method):
        a = line_set(4, [0, 1])
        assert additive_energy(a, a, method=method) == 6

    def test_methods_agree_on_random_sets(self):
        rng = np.random.default_rng(5)
        for trial in range(200):
            geometry = ('circle', 'line')[trial % 2]
            m = int(rng.integers(4, 11))
            a = random_set(rng, m, int(rng.integers(1, 65)), geometry=geometry)
            b = random_set(rng, m, int(rng.integers(1, 65)), geometry=geometry)
            fft = additive_energy(a, b, method='fft')
            assert fft == additive_energy(a, b, method='naive')
            assert fft == additive_energy(a, b)
            assert len(a) * len(b) <= fft <= len(a) * len(b) * min(len(a), len(b))

    def test_sumset(self):
        assert sumset(line_set(4, [0, 1]), line_set(4, [0, 2])).indices.tolist() == [0, 1, 2, 3]
        assert sumset(DyadicSet(3, [7]), DyadicSet(3, [1])).indices.tolist() == [0]

    def test_doubling_of_a_progression(self):
        assert doubling(line_set(6, range(10))) == pytest.approx(1.9)

    def test_mismatched_scales(self):
        with pytest.raises(ArgumentError):
            sumset(line_set(4, [0]), line_set(5, [0]))
        with pytest.raises(ArgumentError):
            additive_energy(line_set(4, [0]), line_set(4, [0]), method='guess')


class TestBranching:
    def test_full_interval(self):
        profile = branching(line_set(4, range(16)), 2)
        assert profile.is_uniform
        assert profile.R == [4, 4]

    def test_generated_profile(self, rng):
        a = random_uniform_set(rng, 2, 3, profile=[1, 3, 4])
        assert len(a) == 12
        assert branching(a, 2).R == [1, 3, 4]

    def test_non_uniform(self):
        profile = branching(line_set(4, [0, 1, 2, 5]), 2)
        assert not profile.is_uniform
        assert profile.R is None
        assert profile.per_level[1].histogram == {1: 1, 3: 1}

    def test_levels_must_divide_scale(self):
        with pytest.raises(ArgumentError):
            branching(line_set(5, [0]), 2)

    def test_bad_profile(self, rng):
        with pytest.raises(ArgumentError):
            random_uniform_set(rng, 2, 2, profile=[5, 1])

    @pytest.mark.slow
    def test_collapse_meets_the_product_bound(self):
        rng = np.random.default_rng(31)
        for trial in range(500):
            D = 2 + trial % 2
            ell = int(rng.integers(1, 6))
            a = random_uniform_set(rng, D, ell)
            R = branching(a, D).R
            levels = [s for s in range(ell) if rng.random() < 0.5]
            collapsed = collapse(a, D, levels)
            assert branching(collapsed, D).R == [1 if s in levels else r for s, r in enumerate(R)]
            assert len(collapsed) * int(np.prod([R[s] for s in levels], dtype=np.int64)) == len(a)

    def test_collapse(self, rng):
        a = random_uniform_set(rng, 2, 2, profile=[4, 4])
        assert branching(collapse(a, 2, [0]), 2).R == [1, 4]
        with pytest.raises(PreconditionError):
            collapse(line_set(4, [0, 1, 2, 5]), 2, [0])


class TestExtractUniform:
    @pytest.mark.slow
    def test_uniform_subset_of_guaranteed_size(self):
        rng = np.random.default_rng(8)
        for trial in range(500):
            D = 2 + trial % 2
            ell = int(rng.integers(1, 7))
            a = random_set(rng, D * ell, int(rng.integers(1, 2000)), geometry='line')
            extracted = extract_uniform(a, D)
            assert branching(extracted, D).is_uniform
            assert np.all(np.isin(extracted.indices, a.indices))
            assert len(extracted) >= (2 * D) ** -ell * len(a)

    def test_uniform_input_is_kept(self, rng):
        a = random_uniform_set(rng, 2, 3, profile=[2, 3, 1])
        assert extract_uniform(a, 2) == a


class TestCenter:
    @pytest.mark.slow
    def test_centered_subset(self):
        rng = np.random.default_rng(100)
        for trial in range(500):
            D = 2 + trial % 2
            ell = int(rng.integers(1, 7))
            a = random_set(rng, D * ell, int(rng.integers(1, 2000)))
            result = center(a, D)
            assert is_centered(result.subset, result.translation, D)
            assert np.all(np.isin(result.subset.indices, a.indices))
            assert len(result.subset) >= 3.0 ** -ell * len(a)
            assert len(result.shifts) == ell

    def test_full_interval_needs_no_shift(self):
        result = center(DyadicSet(6, range(64)), 2)
        assert result.translation == 0
        assert len(result.subset) == 64 // 2 ** 3

    def test_level_width_at_least_two(self):
        with pytest.raises(ArgumentError):
            center(DyadicSet(4, range(16)), 1)


class TestLevelSets:
    @pytest.fixture
    def two_level(self):
        indices = np.arange(208)
        masses = np.concatenate((np.full(8, 0.1), np.full(200, 0.001)))
        return DyadicMeasure(10, indices, masses)

    def test_norm_level(self, two_level):
        level = level_sets(two_level, 2.0)
        assert len(level.members) == 8
        assert level.fraction == pytest.approx(0.08 / 0.0802)
        assert level.lower < 0.1 <= level.upper
        assert level.within_bound

    def test_mass_level(self, two_level):
        level = level_sets(two_level, 2.0, by='mass')
        assert level.members.indices.tolist() == list(range(8))
        assert level.fraction == pytest.approx(0.8)

    def test_domain(self, two_level):
        with pytest.raises(DomainError):
            level_sets(two_level, 1.0)
        with pytest.raises(ArgumentError):
            level_sets(two_level, 2.0, by='count')


class TestInverseWitness:
    def test_uniform_measures_pass_every_clause(self):
        mu = uniform_measure(8)
        report = inverse_witness(mu, mu, 2.0, 2, 0.5)
        assert report.ell == 4
        assert report.hypothesis_ratio == pytest.approx(1.0)
        assert report.implied_epsilon == pytest.approx(0.0)
        assert report.R_a == [2, 2, 2, 2]
        assert report.full_levels == [0, 1, 2, 3]
        assert len(report.clauses) == 10
        assert report.all_pass
        assert report.clause('vi').measured == 8
        assert report.clause('A-i').measured == pytest.approx(0.25)

    def test_without_centering(self):
        mu = uniform_measure(8)
        report = inverse_witness(mu, mu, 2.0, 2, 0.5, center=False)
        assert report.R_a == [4, 4, 4, 4]
        assert {c.name for c in report.clauses}.isdisjoint({'A-iv', 'B-iv'})
        assert report.to_json()['label'] == report.label

    def test_collapse_enforces_dichotomy(self, rng):
        a = random_uniform_set(rng, 2, 4, profile=[4, 1, 4, 1], geometry='circle')
        mu = DyadicMeasure(8, a.indices, np.full(len(a), 1.0 / len(a)))
        report = inverse_witness(mu, mu, 2.0, 2, 0.1, center=False, collapse_b=True)
        assert report.clause('v').passes
        assert report.full_levels == [0, 2]
        assert report.R_b == [4, 1, 4, 1]

    def test_argument_checks(self):
        with pytest.raises(ArgumentError):
            inverse_witness(uniform_measure(8), uniform_measure(6), 2.0, 2, 0.1)
        with pytest.raises(ArgumentError):
            inverse_witness(uniform_measure(8), uniform_measure(8), 2.0, 3, 0.1)
        with pytest.raises(DomainError):
            inverse_witness(uniform_measure(8), uniform_measure(8), 1.0, 2, 0.1)


class TestSumsetBound:
    def test_full_sets(self):
        full = line_set(4, range(16))
        bound = sumset_bound_check(full, full, 2)
        assert bound.lhs == 31
        assert bound.rhs == pytest.approx(4.0)
        assert bound.passes

    def test_complementary_profiles(self, rng):
        a = random_uniform_set(rng, 2, 2, profile=[4, 1])
        h = random_uniform_set(rng, 2, 2, profile=[1, 4])
        bound = sumset_bound_check(a, h, 2)
        assert bound.rhs == pytest.approx(4.0)
        assert bound.passes

    @pytest.mark.slow
    def test_random_uniform_pairs(self):
        rng = np.random.default_rng(12)
        for trial in range(200):
            D = (2, 3)[trial % 2]
            ell = 12 // D
            a = random_uniform_set(rng, D, ell)
            h = random_uniform_set(rng, D, ell)
            bound = sumset_bound_check(a, h, D)
            assert bound.passes, bound.to_json()

    def test_needs_uniform_sets(self):
        with pytest.raises(PreconditionError):
            sumset_bound_check(line_set(4, [0, 1, 2, 5]), line_set(4, range(16)), 2)


class TestTransfer:
    def test_tight_kappa_passes(self, rng):
        a = random_set(rng, 10, 80)
        b = random_set(rng, 10, 50)
        check = lq_transfer_check(a, b, 2.0)
        assert check.hypothesis
        assert check.passes

    def test_zero_kappa_fails_hypothesis(self, rng):
        a = random_set(rng, 10, 80)
        b = random_set(rng, 10, 50)
        check = lq_transfer_check(a, b, 2.0, kappa=0.0)
        assert not check.hypothesis
        assert check.passes
