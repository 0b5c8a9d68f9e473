"""
Tests for indicators of Lelong-class functions, Theta polytopes, residual masses
and Newton numbers
"""

from fractions import Fraction
from math import factorial

import numpy as np
import pytest
import sympy

from conftest import random_polynomial
from errors import InputError, RangeError
from exact_geometry import volume
from grids import GridFunction, cube
from indicators import (Indicator, LelongFunction, domination_constant, lelong_bound, newton_number,
                        recession_indicator, residual_mass, sup_formula_indicator, theta_polytope)
from tropical import evaluate, parse_tropical

F = Fraction


def tropical_line_values(points):
    return np.maximum(0.0, np.maximum(points[..., 0], points[..., 1]))


def test_indicator_of_polynomial_is_its_support(line):
    psi = recession_indicator(line)
    assert psi.gradients == ((0, 0), (0, 1), (1, 0))
    assert psi((2, -1)) == 2
    assert psi((-1, -1)) == 0
    assert recession_indicator(LelongFunction.from_polynomial(line), (5, 5)) == psi


def test_indicator_helpers():
    psi = Indicator.from_gradients([(-1, 0), (0, -1)])
    assert psi((1, 1)) == -1
    assert psi.plus((1, 1)) == 0
    assert psi.scaled(2).gradients == ((-2, 0), (0, -2))
    assert np.allclose(psi.evaluate_points(np.array([[1.0, 2.0], [-3.0, 0.0]])), [-1.0, 3.0])
    with pytest.raises(RangeError):
        psi.scaled(0)
    with pytest.raises(RangeError):
        Indicator.from_gradients([])


def test_numerical_indicator_of_a_callable():
    f = LelongFunction.from_callable(tropical_line_values, 2, (1.5, 0.0))
    psi = recession_indicator(f)
    assert psi.converged
    assert psi.gradients == ((0, 0), (0, 1), (1, 0))


def test_numerical_indicator_away_from_the_origin():
    f = LelongFunction.from_callable(tropical_line_values, 2, (1.5, 0.0))
    psi = recession_indicator(f, (1, 2))
    assert psi.gradients == ((0, 0), (0, 1), (1, 0))


def test_numerical_indicator_of_grid_samples():
    u = GridFunction.from_function(lambda p: np.maximum(p[..., 0], 0) + np.maximum(p[..., 1], 0), cube(4, 2), 33)
    f = LelongFunction.from_grid(u, (2.0, 0.0))
    psi = recession_indicator(f)
    assert psi.gradients == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert residual_mass(psi, 2).value == 2


def test_grid_growth_bound_is_checked():
    u = GridFunction.from_function(lambda p: np.sum(p ** 2, axis=-1), cube(2, 2), 9)
    with pytest.raises(InputError):
        LelongFunction.from_grid(u, (0.0, 0.1))


def test_theta_polytopes():
    assert theta_polytope(Indicator.from_gradients([(1, 0), (0, 1)])).vertices == ((0, 0), (0, 1), (1, 0))
    assert volume(theta_polytope(Indicator.from_gradients([(-1, 0), (0, -1)]))) == F(1, 2)
    assert theta_polytope(Indicator.from_gradients([(2, 2)])).dim == 1


def test_residual_mass_of_the_line(line):
    psi = recession_indicator(line)
    assert residual_mass(psi, 2) == (1, 'atom')
    assert residual_mass(psi, 1) == (0, 'fan')
    with pytest.raises(RangeError):
        residual_mass(psi, 3)


def test_residual_mass_is_normalized_theta_volume(rng):
    for n in (2, 3):
        for _ in range(10):
            gradients = {tuple(int(x) for x in rng.integers(-2, 3, size=n)) for _ in range(6)}
            psi = Indicator.from_gradients(gradients)
            assert residual_mass(psi, n).value == factorial(n) * volume(theta_polytope(psi))


def test_flat_theta_has_no_atom():
    psi = Indicator.from_gradients([(0, 0), (1, 1)])
    assert residual_mass(psi, 2).value == 0


def test_newton_number_readings_disagree_on_the_line(line):
    result = newton_number(line, (0, 0), 2)
    assert result.value == 1
    assert result.residual == 1
    assert result.literal == sympy.oo
    assert result.divergent
    assert not result.agree
    assert newton_number(line, (0, 0), 2, mode='literal').value == sympy.oo


def test_newton_number_readings_agree_on_a_thin_theta():
    f = parse_tropical("max(0, x1)", 3)
    result = newton_number(f, (0, 0, 0), 1)
    assert result.residual == 0
    assert result.literal == 0
    assert result.agree


def test_newton_number_mode_is_checked(line):
    with pytest.raises(RangeError):
        newton_number(line, (0, 0), 2, mode='both')


def test_domination_constant_of_polynomials(rng):
    for _ in range(10):
        f = random_polynomial(rng, 2)
        x = tuple(F(int(a), 3) for a in rng.integers(-6, 7, size=2))
        C = domination_constant(f, x)
        assert C == evaluate(f, x)
        psi = recession_indicator(f)
        for _ in range(10):
            t = tuple(F(int(a), 2) for a in rng.integers(-20, 21, size=2))
            assert evaluate(f, t) <= psi(tuple(a - b for a, b in zip(t, x))) + C


def test_fitted_domination_constant():
    f = LelongFunction.from_callable(tropical_line_values, 2, (1.5, 0.0))
    samples = np.random.default_rng(5).uniform(-3, 3, size=(200, 2))
    assert domination_constant(f, (0, 0), samples) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(InputError):
        domination_constant(f, (0, 0))


def test_lelong_bounds(line):
    assert lelong_bound(recession_indicator(line)) == (1, 0)
    assert lelong_bound(Indicator.from_gradients([(-2, 1), (0, 0)])) == (3, 0)


def test_sup_formula_matches_the_indicator(line):
    psi = recession_indicator(line)
    for y in [(1, 2), (1, 1), (3, 0)]:
        assert sup_formula_indicator(line, (0, 0), y) == pytest.approx(float(psi(y)))
    with pytest.raises(RangeError):
        sup_formula_indicator(line, (0, 0), (-1, 1))


def test_theta_is_dual_to_the_positive_part(rng):
    for n in (2, 3):
        for _ in range(3):
            gradients = {tuple(int(x) for x in rng.integers(-3, 4, size=n)) for _ in range(5)}
            psi = Indicator.from_gradients(gradients)
            theta = theta_polytope(psi)
            for _ in range(200):
                t = tuple(F(int(a), 7) for a in rng.integers(-20, 21, size=n))
                support = max(sum(a * b for a, b in zip(v, t)) for v in theta.vertices)
                assert support == psi.plus(t)
