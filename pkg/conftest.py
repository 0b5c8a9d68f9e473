"""
Shared fixtures for the test suite
"""

from fractions import Fraction

import numpy as np
import pytest

from exact_geometry import convex_hull
from tropical import TropicalPolynomial, parse_tropical


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: grid experiments that take several seconds")


@pytest.fixture
def rng():
    return np.random.default_rng(20231)


@pytest.fixture
def simplex():
    return convex_hull([(0, 0), (1, 0), (0, 1)])


@pytest.fixture
def square():
    return convex_hull([(0, 0), (1, 0), (0, 1), (1, 1)])


@pytest.fixture
def line():
    return parse_tropical("max(0, x1, x2)", 2)


@pytest.fixture
def shifted_line():
    return parse_tropical("max(0, x1 - 1, x2 - 2)", 2)


@pytest.fixture
def conic():
    # coefficients from a strictly convex quadratic: unimodular dual triangulation
    return parse_tropical("max(0, x1 - 1, x2 - 1, 2*x1 - 4, x1 + x2 - 3, 2*x2 - 4)", 2)


def random_polynomial(rng, n, size=6, span=2, coefficient_range=5):
    """Tropical polynomial with up to `size` distinct exponents in [0, span]^n and integer coefficients"""
    exponents = set()
    while len(exponents) < size:
        exponents.add(tuple(int(a) for a in rng.integers(0, span + 1, size=n)))
    terms = [(alpha, Fraction(int(rng.integers(-coefficient_range, coefficient_range + 1))))
             for alpha in sorted(exponents)]
    return TropicalPolynomial.from_terms(terms, n)
