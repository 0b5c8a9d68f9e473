"""
Tests for the JSON codecs, canonical output and the mask mini-language
"""

from fractions import Fraction

import numpy as np
import pytest

from capacity import CapacityProblem, Domain, MaskSpec
from conftest import random_polynomial
from errors import InputError, ParseError
from grids import AffineSubspace, GridFunction, cube
from hessian_measures import pl_monge_ampere
from indicators import Indicator
from intersection import stable_intersection
from serialization import (decode, dump, dumps, encode, load, loads, parse_json, parse_mask_spec,
                           parse_rational, rational)
from tropical import hypersurface

F = Fraction


def test_rationals():
    assert rational(F(-6, 4)) == [-3, 2]
    assert rational(5) == [5, 1]
    assert parse_rational([3, 4]) == F(3, 4)
    assert parse_rational("5/2") == F(5, 2)
    assert parse_rational(7) == 7


@pytest.mark.parametrize("bad", [[1, 0], [1, 2, 3], [F(1, 2), 1], True, None, "abc"])
def test_bad_rationals(bad):
    with pytest.raises(InputError):
        parse_rational(bad)


def test_polynomial_document(line):
    doc = encode(line)
    assert doc["type"] == "polynomial"
    assert doc["n"] == 2
    assert doc["terms"][0] == {"alpha": [0, 0], "upsilon": [0, 1]}
    assert loads(dumps(line)) == line


def test_polynomials_survive_the_text_form(rng):
    for _ in range(5):
        f = random_polynomial(rng, 3, size=5)
        assert loads(dumps(f)) == f


def test_polynomial_from_text_field(conic):
    assert decode({"n": 2, "text": str(conic)}) == conic


def test_polynomial_rejects_fractional_exponents():
    with pytest.raises(InputError):
        decode({"type": "polynomial", "n": 1, "terms": [{"alpha": [0.5], "upsilon": 0}]})


def test_dumps_is_canonical(conic):
    text = dumps(conic)
    assert text.endswith("}\n")
    assert text.index('"n"') < text.index('"terms"') < text.index('"type"')
    assert dumps(loads(text)) == text


def test_malformed_json_reports_position():
    with pytest.raises(ParseError) as info:
        parse_json('{"n": 2,, }')
    assert info.value.position == 8


def test_polytope_documents(simplex):
    assert loads(dumps(simplex)).vertices == simplex.vertices
    assert decode({"vertices": [[0, 0], [2, 0], [0, 2], [1, 1]]}).vertices == ((0, 0), (0, 2), (2, 0))
    with pytest.raises(InputError):
        decode({"type": "polytope", "version": 2, "vertices": [[0, 0]]})
    with pytest.raises(InputError):
        decode({"type": "polytope", "n": 3, "vertices": [[0, 0], [1, 0]]})


def test_complex_and_cycle_documents(line, shifted_line):
    C = hypersurface(line).complex
    assert loads(dumps(C)) == C
    cycle = stable_intersection(line, shifted_line, seed=7)
    again = loads(dumps(cycle))
    assert again.seed == 7
    assert again.complex == cycle.complex


def test_hypersurface_document(conic):
    H = hypersurface(conic)
    again = loads(dumps(H))
    assert again.polynomial == conic
    assert again.complex == H.complex
    assert not again.empty


def test_grid_document():
    u = GridFunction.from_function(lambda p: p[..., 0] * p[..., 1], cube(F(1, 2), 2), 5)
    again = loads(dumps(u))
    assert again == u
    assert np.array_equal(again.values, u.values)


def test_measure_document(conic):
    mu = pl_monge_ampere(conic)
    doc = encode(mu)
    assert doc["total"] == "4"
    assert doc["density"] is None
    assert loads(dumps(mu)).atoms == mu.atoms


def test_indicator_document():
    psi = Indicator.from_gradients([(F(1, 2), 0), (0, 1)])
    assert loads(dumps(psi)) == psi


def test_capacity_problem_documents():
    V = AffineSubspace.coordinate(3, {2: F(1, 3)})
    K = MaskSpec.ball((0, 0, F(1, 3)), F(1, 4)).union(MaskSpec.point((F(1, 2), 0, F(1, 3))))
    prob = CapacityProblem(Domain.ball_domain((0, 0, 0), 1), K, 2, V, resolution=33)
    assert loads(dumps(prob)) == prob
    boxed = CapacityProblem(Domain.box_domain([(-1, 1), (-1, 1)]), MaskSpec.box([(0, F(1, 2)), (0, F(1, 2))]), 2)
    assert loads(dumps(boxed)) == boxed


def test_empty_mask_is_refused():
    doc = {"m": 2, "box": [[-1, 1], [-1, 1]], "K": {"boxes": [], "balls": [], "points": []}}
    with pytest.raises(InputError):
        decode(doc)


def test_unknown_and_malformed_documents():
    with pytest.raises(InputError):
        decode({"type": "teapot"})
    with pytest.raises(InputError):
        decode({"colour": "blue"})
    with pytest.raises(InputError):
        decode({"type": "polynomial", "terms": []})
    with pytest.raises(InputError):
        decode([1, 2])


def test_list_of_documents(line, shifted_line):
    factors = decode([encode(line), encode(shifted_line)])
    assert factors == [line, shifted_line]


def test_files_round_trip(tmp_path, simplex):
    path = tmp_path / "simplex.json"
    dump(simplex, str(path))
    assert load(str(path)).vertices == simplex.vertices
    assert path.read_text(encoding="utf-8") == dumps(simplex)


def test_mask_spec_language():
    mask = parse_mask_spec("box:-1/2,1/2,0,1; ball:0,0,1/4;point:1,1", 2)
    assert mask == MaskSpec(boxes=MaskSpec.box([(F(-1, 2), F(1, 2)), (0, 1)]).boxes,
                            balls=(((0, 0), F(1, 4)),), points=((1, 1),))


def test_mask_spec_errors():
    with pytest.raises(ParseError) as info:
        parse_mask_spec("box:0,1", 2)
    assert info.value.position == 0
    with pytest.raises(ParseError) as info:
        parse_mask_spec("box:0,1,0,1;ball:x,1,2", 2)
    assert info.value.position == 12
