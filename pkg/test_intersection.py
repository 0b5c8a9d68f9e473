"""
Tests for stable intersections of tropical hypersurfaces and their masses
"""

from fractions import Fraction

import pytest

from conftest import random_polynomial
from errors import DimensionMismatchError, RangeError
from exact_geometry import mixed_volume, volume
from intersection import cycles_equal, intersection_mass, stable_intersection
from tropical import check_balancing, hypersurface, newton_polytope, parse_tropical

F = Fraction


def test_two_lines_meet_once(line, shifted_line):
    C = stable_intersection(line, shifted_line)
    assert C.points() == [((1, 1), 1)]
    assert intersection_mass(C) == 1


def test_self_intersection_of_line(line):
    C = stable_intersection(line, line)
    assert C.points() == [((0, 0), 1)]


def test_single_factor_is_the_hypersurface(line):
    C = stable_intersection(line)
    assert C.codim == 1
    assert C.complex == hypersurface(line).complex


def test_masses_of_lines_and_conics(line, shifted_line, conic):
    other_conic = parse_tropical("max(0, x1 + 1, x2 - 2, 2*x1 - 1, x1 + x2, 2*x2 - 3)", 2)
    assert intersection_mass(stable_intersection(line, shifted_line)) == 1
    assert intersection_mass(stable_intersection(line, conic)) == 2
    assert intersection_mass(stable_intersection(conic, other_conic)) == 4
    assert intersection_mass(stable_intersection(conic, conic)) == 4


def test_empty_factor_gives_empty_cycle(line):
    constant = parse_tropical("max(3)", 2)
    C = stable_intersection(line, constant)
    assert len(C.cells) == 0


def test_intersection_validation(line):
    with pytest.raises(DimensionMismatchError):
        stable_intersection(line, parse_tropical("max(0, x1)", 1))
    with pytest.raises(RangeError):
        stable_intersection(line, line, line)
    with pytest.raises(RangeError):
        intersection_mass(stable_intersection(line))


def test_result_independent_of_displacement(line, conic):
    first = stable_intersection(line, conic, seed=1)
    second = stable_intersection(line, conic, seed=2)
    assert cycles_equal(first, second)


def test_curve_in_space_is_balanced():
    f = parse_tropical("max(0, x1, x2, x3)", 3)
    g = parse_tropical("max(0, x1 - 1, x2 + 1, x3 - 2)", 3)
    C = stable_intersection(f, g)
    assert C.complex.dim == 1
    assert check_balancing(C.complex).balanced
    assert all(cell.weight > 0 for cell in C.cells)


def test_self_intersection_of_plane_curve_in_space_matches_generic_one():
    f = parse_tropical("max(0, x1, x2, x3)", 3)
    g = parse_tropical("max(0, x1 - 1, x2 + 1, x3 - 2)", 3)
    h = parse_tropical("max(0, x1 + 2, x2 - 1, x3 + 1)", 3)
    assert intersection_mass(stable_intersection(f, g, h)) == 1
    assert intersection_mass(stable_intersection(f, f, f)) == 1


def test_bernstein_identity_in_the_plane(rng):
    checked = 0
    while checked < 20:
        f, g = random_polynomial(rng, 2), random_polynomial(rng, 2)
        P, Q = newton_polytope(f), newton_polytope(g)
        C = stable_intersection(f, g)
        assert intersection_mass(C) == mixed_volume(P, Q)
        assert check_balancing(C.complex).balanced
        checked += 1


@pytest.mark.slow
def test_bernstein_identity_in_space(rng):
    for _ in range(5):
        f, g, h = (random_polynomial(rng, 3, size=5) for _ in range(3))
        C = stable_intersection(f, g, h)
        assert intersection_mass(C) == mixed_volume(newton_polytope(f), newton_polytope(g), newton_polytope(h))


def test_self_intersection_mass_is_normalized_volume(rng):
    for _ in range(5):
        f = random_polynomial(rng, 2)
        P = newton_polytope(f)
        assert intersection_mass(stable_intersection(f, f)) == 2 * volume(P)
