"""
Tests for services.models
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from services.dyadic_measure import AtomicMeasure, affine_image, convolve_atoms
from services.models import (
    NonHomIFS, generate_atoms, generate_nonhom, iter_stages, make_convolution,
    make_multi_convolution, make_projection, make_selfsimilar, make_skip, model_from_dict,
    symbolic_tau, theoretical_dimension,
)
from services.spectra import tau_tilde
from utils.errors import ArgumentError, DomainError
from tests.conftest import two_point

GASKET = [[[0, 0], '1/3'], [[0, 1], '1/3'], [[1, 0], '1/3']]


def float_stage(delta: AtomicMeasure, lam: float, n: int) -> AtomicMeasure:
    stage = AtomicMeasure.dirac(0.0)
    for i in range(n):
        stage = convolve_atoms(stage, affine_image(delta.to_float(), lam ** i))
    return stage


def assert_same_atoms(a: AtomicMeasure, b: AtomicMeasure, exact: bool = False):
    assert len(a) == len(b)
    if exact:
        assert a.locations == b.locations
    else:
        np.testing.assert_allclose(a.float_locations(), b.float_locations(), atol=1e-12)
    np.testing.assert_allclose(a.masses, b.masses, atol=1e-12)


class TestSelfSimilar:
    def test_stage_zero_is_dirac(self, middle_thirds):
        stage = generate_atoms(middle_thirds, None, 0)
        assert len(stage) == 1 and stage.masses.tolist() == [1.0]

    def test_middle_thirds_stage_two(self, middle_thirds):
        stage = generate_atoms(middle_thirds, None, 2, exact=True)
        assert stage.locations == (Fraction(0), Fraction(1, 3), Fraction(1), Fraction(4, 3))
        assert stage.masses.tolist() == [0.25] * 4

    def test_lambda_one_rejected(self):
        with pytest.raises(ArgumentError):
            make_selfsimilar(two_point(), 1)

    def test_mass_is_one(self, bernoulli_golden):
        for stage in iter_stages(bernoulli_golden, None, 12):
            assert stage.total_mass == pytest.approx(1.0, abs=1e-10)

    def test_golden_overlaps_are_detected_exactly(self, bernoulli_golden):
        stages = list(iter_stages(bernoulli_golden, None, 4, exact=True))
        assert stages[2].overlaps == 0
        assert stages[3].overlaps > 0

    def test_named_golden_lambda(self, bernoulli_golden):
        model = make_selfsimilar(two_point(-1, 1), 'golden')
        assert model.lam == pytest.approx((math.sqrt(5) - 1) / 2)
        assert model.exact_capable
        stages = list(iter_stages(model, None, 4, exact=True))
        reference = iter_stages(bernoulli_golden, None, 4, exact=True)
        assert [s.overlaps for s in stages] == [s.overlaps for s in reference]
        assert stages[3].overlaps > 0

    def test_self_similarity_relation(self, bernoulli_half):
        n, n_prime = 3, 4
        lam = bernoulli_half.lam_exact
        whole = generate_atoms(bernoulli_half, None, n + n_prime, exact=True)
        head = generate_atoms(bernoulli_half, None, n, exact=True)
        tail = generate_atoms(bernoulli_half, None, n_prime, exact=True)
        assert_same_atoms(whole, convolve_atoms(head, affine_image(tail, lam ** n)), exact=True)

    def test_dimension_closed_form(self, middle_thirds, bernoulli_half):
        for q in (1.5, 2.0, 4.0):
            assert theoretical_dimension(middle_thirds, q) == pytest.approx(math.log(2) / math.log(3))
            assert theoretical_dimension(bernoulli_half, q) == pytest.approx(1.0)

    def test_dimension_domain(self, middle_thirds):
        with pytest.raises(DomainError):
            theoretical_dimension(middle_thirds, 1.0)

    def test_stage_and_scale(self, middle_thirds, bernoulli_half):
        assert middle_thirds.stage_for_scale(10) == 6
        assert middle_thirds.scale_for_stage(6) == 10
        assert bernoulli_half.stage_for_scale(7) == 7
        assert bernoulli_half.scale_for_stage(7) == 7


class TestConvolutionModel:
    @pytest.fixture
    def model(self):
        return make_convolution(two_point(), '1/2', two_point(), '1/3')

    def test_ordering(self):
        with pytest.raises(ArgumentError):
            make_convolution(two_point(), '1/3', two_point(), '1/3')

    def test_pieces(self, model):
        inside = model.delta(0.2)
        assert len(inside) == 4
        np.testing.assert_allclose(inside.float_locations(), sorted([0, 1, math.exp(0.2), 1 + math.exp(0.2)]))
        outside = model.delta(0.9)
        assert outside.float_locations().tolist() == [0.0, 1.0]

    def test_closed_form_orbit(self, model):
        x = 0.3
        for n in (1, 7, 100):
            expected = (x + n * model.step) % model.period
            assert model.orbit(x, n) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize('x', [0.0, 0.3, 0.8])
    def test_stage_factorizes(self, model, x):
        n = 6
        x_prime, n_prime = model.split_stage(x, n)
        first = float_stage(model.d1, model.lam, n)
        second = float_stage(model.d2, model.l2, n_prime)
        expected = convolve_atoms(first, affine_image(second, math.exp(x_prime)))
        assert_same_atoms(generate_atoms(model, x, n), expected)

    def test_dimension_caps_at_one(self):
        model = make_convolution(two_point(), '1/3', two_point(), '1/4')
        assert theoretical_dimension(model, 2.0) == 1.0

    def test_birkhoff_matches_closed_form(self):
        weighted = AtomicMeasure(np.array([0.0, 1.0]), [0.75, 0.25])
        model = make_convolution(weighted, '1/3', weighted, '1/4')
        closed = model.mean_log_norm(2.0)
        assert model.birkhoff_log_norm(2.0, 4000) == pytest.approx(closed, rel=1e-2)

    def test_rational_ratio_warns(self, caplog):
        model = make_convolution(two_point(), '1/2', two_point(), '1/4')
        assert model.ratio_looks_rational
        assert 'rational' in caplog.text

    def test_samples_avoid_boundaries(self, model):
        states = model.sample_states(50)
        assert len(states) == 50
        assert not any(model.near_boundary(x) for x in states)


class TestMultiConvolution:
    def test_torus_dimension(self):
        model = make_multi_convolution([two_point()] * 3, ['1/5', '1/3', '1/2'])
        assert model.state_space['dimension'] == 2

    def test_needs_two_factors(self):
        with pytest.raises(ArgumentError):
            make_multi_convolution([two_point()], ['1/2'])

    def test_origin_convolves_everything(self):
        deltas = [two_point(0, 1), two_point(0, 2), two_point(0, 5)]
        model = make_multi_convolution(deltas, ['1/5', '1/3', '1/2'])
        expected = convolve_atoms(convolve_atoms(deltas[0].to_float(), deltas[1].to_float()), deltas[2].to_float())
        assert_same_atoms(generate_atoms(model, model.default_state(), 1), expected)

    def test_two_factors_agree_with_convolution_model(self):
        a = AtomicMeasure(np.array([0.0, 1.0]), [0.5, 0.5])
        b = AtomicMeasure(np.array([0.0, 2.0]), [0.5, 0.5])
        multi = make_multi_convolution([b, a], ['1/3', '1/2'])
        single = make_convolution(a, '1/2', b, '1/3')
        for n in range(5):
            assert_same_atoms(generate_atoms(multi, 0.4, n), generate_atoms(single, 0.4, n))


class TestProjection:
    def test_axis_direction_is_self_similar(self):
        model = make_projection(GASKET, '1/3', 0)
        first_coordinates = AtomicMeasure(np.array([0.0, 0.0, 1.0]), [1 / 3, 1 / 3, 1 / 3])
        reference = make_selfsimilar(first_coordinates, '1/3')
        assert_same_atoms(generate_atoms(model, (1, 0), 4), generate_atoms(reference, None, 4))

    def test_delta_is_projected_digits(self):
        model = make_projection(GASKET, '1/3', 0)
        delta = model.delta(math.pi / 4)
        c = math.sqrt(0.5)
        np.testing.assert_allclose(delta.float_locations(), [0.0, c])
        np.testing.assert_allclose(delta.masses, [1 / 3, 2 / 3])


class TestSkipModel:
    def test_multiples_of_bernoulli(self, bernoulli_half):
        skip = make_skip(bernoulli_half, 2, 'multiples')
        assert skip.lam_exact == Fraction(1, 4)
        reference = make_selfsimilar(two_point(-1, 1), '1/4')
        assert_same_atoms(generate_atoms(skip, None, 3, exact=True),
                          generate_atoms(reference, None, 3, exact=True), exact=True)

    @pytest.mark.parametrize('k', [2, 3])
    def test_stagewise_identity(self, middle_thirds, k):
        non_multiples = make_skip(middle_thirds, k, 'non_multiples')
        multiples = make_skip(middle_thirds, k, 'multiples')
        for n in (1, 2, 3):
            base = generate_atoms(middle_thirds, None, k * n, exact=True)
            split = convolve_atoms(generate_atoms(non_multiples, None, k * n, exact=True),
                                   generate_atoms(multiples, None, n, exact=True))
            assert_same_atoms(base, split, exact=True)

    def test_k_one_rejected(self, middle_thirds):
        with pytest.raises(ArgumentError):
            make_skip(middle_thirds, 1, 'multiples')

    def test_non_multiples_dimension(self, middle_thirds):
        skip = make_skip(middle_thirds, 3, 'non_multiples')
        expected = (2 / 3) * math.log(2) / math.log(3)
        assert theoretical_dimension(skip, 2.0) == pytest.approx(expected)


class TestNonHomogeneous:
    def test_stopping_set_words(self):
        ifs = NonHomIFS([('1/2', 0), ('1/4', '1/2')], ['1/2', '1/2'])
        stage = generate_nonhom(ifs, 2, with_words=True)
        assert sorted(stage.words) == [(1, 1), (1, 2), (2,)]
        assert stage.class_count == 2
        assert stage.measure.total_mass == pytest.approx(1.0)

    def test_homogeneous_word_length(self):
        ifs = NonHomIFS([('1/3', 0), ('1/3', '2/3')], ['1/2', '1/2'])
        stage = generate_nonhom(ifs, 5, with_words=True)
        assert {len(w) for w in stage.words} == {4}
        assert stage.word_count == 16

    def test_exact_translations(self):
        ifs = NonHomIFS([('1/2', 0), ('1/4', '1/2')], ['1/2', '1/2'])
        stage = generate_nonhom(ifs, 2, exact=True)
        assert stage.measure.locations == (Fraction(0), Fraction(1, 4), Fraction(1, 2))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ArgumentError):
            NonHomIFS([('1/2', 0), ('1/4', 1)], [0.5, 0.4])

    def test_symbolic_tau_brackets_root(self):
        ifs = NonHomIFS([('1/2', 0), ('1/4', '1/2')], ['1/2', '1/2'])
        root = tau_tilde(ifs, 2.0).tau
        assert root == pytest.approx(math.log2((math.sqrt(17) - 1) / 2), abs=1e-10)
        for m in (4, 8, 12):
            value = symbolic_tau(ifs, 2.0, m)
            assert root - 1e-9 <= value <= root + root * 2 / m + 1e-9

    def test_ratio_classes_grow_polynomially(self):
        ifs = NonHomIFS([('1/2', 0), ('1/3', '1/2')], ['1/2', '1/2'])
        counts = [generate_nonhom(ifs, m).class_count for m in (4, 8, 16)]
        assert counts[0] <= counts[1] <= counts[2] <= 17 ** 2


class TestDescriptors:
    def test_round_trip_every_type(self, middle_thirds):
        descriptors = [
            middle_thirds.to_dict(),
            make_convolution(two_point(), '1/2', two_point(), '1/3').to_dict(),
            make_multi_convolution([two_point()] * 2, ['1/3', '1/2']).to_dict(),
            make_projection(GASKET, '1/3', '0.5').to_dict(),
            make_skip(middle_thirds, 2, 'non_multiples').to_dict(),
            NonHomIFS([('1/2', 0), ('1/4', '1/2')], ['1/2', '1/2']).to_dict(),
        ]
        for descriptor in descriptors:
            rebuilt = model_from_dict(descriptor)
            assert rebuilt.to_dict() == descriptor

    def test_unknown_type(self):
        with pytest.raises(ArgumentError):
            model_from_dict({'type': 'mystery'})

    def test_missing_field(self):
        with pytest.raises(ArgumentError):
            model_from_dict({'type': 'selfsimilar', 'lambda': '1/3'})
