"""
Tests for tropical polynomials: parsing, evaluation, Newton polytopes,
dual subdivisions, hypersurfaces and balancing
"""

from fractions import Fraction

import pytest

from conftest import random_polynomial
from errors import DimensionMismatchError, DuplicateSupportError, ParseError
from exact_geometry import volume
from polyhedra import WeightedComplex
from tropical import (TropicalPolynomial, check_balancing, dual_subdivision, evaluate, hypersurface,
                      newton_polytope, parse_tropical, reweighted, skeleton, subdifferential_at,
                      vertices)

F = Fraction


def test_parse_tropical_line():
    f = parse_tropical("max(0, x1, x2)", 2)
    assert f.support == [(0, 0), (0, 1), (1, 0)]
    assert all(v == 0 for v in f.coeffs.values())


def test_parse_sign_convention():
    f = parse_tropical("max(-3 + 2*x1, 1 + x2)", 2)
    assert f.coeffs == {(2, 0): 3, (0, 1): -1}


def test_parse_rational_constants_and_whitespace():
    f = parse_tropical("max( 1/2+x1 ,  -x2 - 0.25 )", 2)
    assert f.coeffs == {(1, 0): F(-1, 2), (0, -1): F(1, 4)}


def test_parse_rejects_duplicate_exponent():
    with pytest.raises(DuplicateSupportError):
        parse_tropical("max(0, x1, x1)", 2)


def test_parse_reports_position():
    with pytest.raises(ParseError) as info:
        parse_tropical("max(0,, x1)", 2)
    assert info.value.position == 6


def test_parse_rejects_wrong_variable():
    with pytest.raises(ParseError):
        parse_tropical("max(0, x3)", 2)


def test_printing_reparses(rng):
    for _ in range(10):
        f = random_polynomial(rng, 2)
        assert parse_tropical(str(f), 2) == f


def test_polynomial_validation():
    with pytest.raises(DimensionMismatchError):
        TropicalPolynomial.from_terms([((1, 0), 0), ((1,), 0)], 2)
    with pytest.raises(DuplicateSupportError):
        TropicalPolynomial.from_terms([((1, 0), 0), ((1, 0), 1)], 2)


def test_evaluate(line):
    assert evaluate(line, (1, 0)) == 1
    assert evaluate(line, (-5, -7)) == 0
    g = parse_tropical("max(-3 + 2*x1, 1 + x2)", 2)
    assert evaluate(g, (2, 2)) == 3


def test_evaluate_dimension_mismatch(line):
    with pytest.raises(DimensionMismatchError):
        evaluate(line, (1, 2, 3))


def test_evaluate_is_convex(rng):
    for _ in range(20):
        f = random_polynomial(rng, 2)
        x = tuple(F(int(a), 7) for a in rng.integers(-20, 21, size=2))
        y = tuple(F(int(a), 5) for a in rng.integers(-20, 21, size=2))
        mid = tuple((a + b) / 2 for a, b in zip(x, y))
        assert evaluate(f, mid) <= (evaluate(f, x) + evaluate(f, y)) / 2


def test_subdifferential_at_vertex(line):
    assert sorted(subdifferential_at(line, (0, 0))) == [(0, 0), (0, 1), (1, 0)]
    assert subdifferential_at(line, (1, 0)) == [(1, 0)]


def test_newton_polytopes(line, simplex, square):
    assert newton_polytope(line).vertices == simplex.vertices
    assert newton_polytope(parse_tropical("max(0, x1, x2, x1 + x2)", 2)).vertices == square.vertices
    assert newton_polytope(parse_tropical("max(2 + x1)", 2)).dim == 0


def test_coplanar_lift_gives_one_cell(line):
    S = dual_subdivision(line)
    assert len(S.cells) == 1
    assert volume(S.cells[0]) == F(1, 2)


def test_lifted_square_splits_along_diagonal():
    f = parse_tropical("max(0, x1, x2, x1 + x2 - 1)", 2)
    S = dual_subdivision(f)
    assert [c.vertices for c in S.cells] == [((0, 0), (0, 1), (1, 0)), ((0, 1), (1, 0), (1, 1))]


def test_single_term_subdivision():
    S = dual_subdivision(parse_tropical("max(1 + x1)", 1))
    assert len(S.cells) == 1 and S.cells[0].dim == 0


def test_line_hypersurface(line):
    H = hypersurface(line)
    assert len(H.cells) == 3
    rays = sorted(cell.structure.rays[0] for cell in H.cells)
    assert rays == [(-1, 0), (0, -1), (1, 1)]
    assert all(cell.weight == 1 for cell in H.cells)
    assert all(cell.vertices == [(0, 0)] for cell in H.cells)


def test_weight_is_lattice_length():
    H = hypersurface(parse_tropical("max(0, 2*x1)", 1))
    assert len(H.cells) == 1
    assert H.cells[0].vertices == [(0,)]
    assert H.cells[0].weight == 2


def test_single_term_hypersurface_is_empty():
    H = hypersurface(parse_tropical("max(1 + x1 + x2)", 2))
    assert H.empty
    assert len(H.cells) == 0


def test_conic_hypersurface(conic):
    H = hypersurface(conic)
    # 2Delta has 9 unimodular edges: 6 on the boundary give rays, 3 inside give segments
    assert len(H.cells) == 9
    assert sum(1 for c in H.cells if c.is_bounded) == 3
    assert check_balancing(H.complex).balanced


def test_hypersurface_vertices(line, conic):
    assert [point for point, _ in vertices(line)] == [(0, 0)]
    assert len(vertices(conic)) == 4


def test_skeleton_matches_hypersurface(line):
    assert len(skeleton(line, 1)) == 3
    assert [cell.vertices for cell, _ in skeleton(line, 2)] == [[(0, 0)]]


def test_balancing_reports(line):
    C = hypersurface(line).complex
    assert check_balancing(C).balanced
    broken = check_balancing(reweighted(C, 0, 2))
    assert not broken.balanced
    assert len(broken.violations) == 1
    assert check_balancing(WeightedComplex((), 1, 2)).balanced


def test_random_hypersurfaces_balance(rng):
    for n in (2, 3):
        for _ in range(5):
            f = random_polynomial(rng, n, size=5)
            if newton_polytope(f).dim == 0:
                continue
            assert check_balancing(hypersurface(f).complex).balanced
