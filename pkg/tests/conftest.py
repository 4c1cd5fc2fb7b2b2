"""
Fractal Lq Toolkit - Shared Test Fixtures
"""

from fractions import Fraction

import numpy as np
import pytest

from config.settings import settings
from services.dyadic_measure import AtomicMeasure
from services.models import make_selfsimilar
from storage.artifact_store import ArtifactStore

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def two_point(a=0, b=1) -> AtomicMeasure:
    """Exact (delta_a + delta_b) / 2"""
    return AtomicMeasure([Fraction(a), Fraction(b)], [0.5, 0.5], exact=True)


@pytest.fixture
def middle_thirds():
    return make_selfsimilar(two_point(0, 1), '1/3')


@pytest.fixture
def bernoulli_half():
    return make_selfsimilar(two_point(-1, 1), '1/2')


@pytest.fixture
def bernoulli_golden():
    return make_selfsimilar(two_point(-1, 1), '(sqrt(5)-1)/2')


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def artifact_dir(tmp_path):
    return tmp_path / 'out'


@pytest.fixture
def store(artifact_dir):
    return ArtifactStore(artifact_dir)


@pytest.fixture
def override_settings(monkeypatch):
    """Set attributes on the shared settings object for one test"""

    def apply(**values):
        for name, value in values.items():
            monkeypatch.setattr(settings, name, value)

    return apply
