"""
JSON codecs for every persistent type.

Rationals travel as [numerator, denominator] integer pairs; documents are
written with sorted keys so identical objects give identical bytes.
"""

import json
import logging
from fractions import Fraction
from typing import Any, Dict, List

import numpy as np
import sympy

from capacity import CapacityProblem, Domain, MaskSpec
from errors import InputError, ParseError
from exact_geometry import Polytope, convex_hull
from exact_linalg import to_fraction
from grids import AffineSubspace, GridFunction, make_box
from hessian_measures import HessianMeasure
from indicators import Indicator
from intersection import TropicalCycle
from polyhedra import PolyhedralCell, WeightedComplex
from tropical import TropicalHypersurface, TropicalPolynomial, parse_tropical

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


# --------------------------------------------------------------------------
# Scalars

def rational(q) -> List[int]:
    q = to_fraction(q)
    return [q.numerator, q.denominator]


def parse_rational(obj, where: str = 'value') -> Fraction:
    """[num, den] pairs, integers or "p/q" strings"""
    if isinstance(obj, list):
        if len(obj) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in obj):
            raise InputError(f"{where}: expected an integer pair [num, den], got {obj!r}")
        if obj[1] <= 0:
            raise InputError(f"{where}: denominator must be positive")
        return Fraction(obj[0], obj[1])
    if isinstance(obj, bool) or obj is None:
        raise InputError(f"{where}: expected a rational, got {obj!r}")
    try:
        return to_fraction(obj)
    except (TypeError, ValueError) as e:
        raise InputError(f"{where}: {e}") from e


def _vector(v) -> List[List[int]]:
    return [rational(x) for x in v]


def _parse_vector(obj, where: str):
    if not isinstance(obj, list):
        raise InputError(f"{where}: expected a list")
    return tuple(parse_rational(x, where) for x in obj)


def _require(doc: Dict, key: str, where: str):
    if key not in doc:
        raise InputError(f"{where}: missing field {key!r}")
    return doc[key]


# --------------------------------------------------------------------------
# Encoders

def encode_polynomial(f: TropicalPolynomial) -> Dict:
    return {"type": "polynomial", "n": f.n,
            "terms": [{"alpha": list(alpha), "upsilon": rational(v)} for alpha, v in f.terms]}


def encode_polytope(P: Polytope) -> Dict:
    return {"type": "polytope", "version": FORMAT_VERSION, "n": P.n,
            "vertices": [_vector(v) for v in P.vertices]}


def encode_cell(c: PolyhedralCell) -> Dict:
    return {"equalities": [{"a": _vector(a), "b": rational(b)} for a, b in c.equalities],
            "inequalities": [{"a": _vector(a), "b": rational(b)} for a, b in c.inequalities],
            "weight": c.weight}


def encode_complex(C: WeightedComplex) -> Dict:
    return {"type": "complex", "n": C.n, "codim": C.codim, "cells": [encode_cell(c) for c in C.cells]}


def encode_cycle(C: TropicalCycle) -> Dict:
    return {"type": "cycle", "seed": C.seed, "complex": encode_complex(C.complex)}


def encode_hypersurface(H: TropicalHypersurface) -> Dict:
    return {"type": "hypersurface", "polynomial": encode_polynomial(H.polynomial),
            "complex": encode_complex(H.complex), "empty": H.empty,
            "duality": [encode_polytope(P) for P in H.duality]}


def encode_box(box) -> List:
    return [[rational(a), rational(b)] for a, b in box]


def encode_grid(u: GridFunction) -> Dict:
    return {"type": "grid", "box": encode_box(u.box), "resolution": list(u.resolution),
            "values": u.values.tolist()}


def encode_measure(mu: HessianMeasure) -> Dict:
    total = mu.total_mass()
    return {"type": "measure", "n": mu.n, "m": mu.m,
            "density": None if mu.density is None else encode_grid(mu.density),
            "atoms": [{"point": _vector(p), "mass": rational(mass)} for p, mass in mu.atoms],
            "cells": [{"cell": encode_cell(c), "density": str(d)} for c, d in mu.cell_masses],
            "total": str(total) if isinstance(total, sympy.Basic) else total}


def encode_indicator(psi: Indicator) -> Dict:
    return {"type": "indicator", "n": psi.n, "gradients": [_vector(a) for a in psi.gradients]}


def encode_mask(K: MaskSpec) -> Dict:
    return {"boxes": [encode_box(b) for b in K.boxes],
            "balls": [{"center": _vector(c), "radius": rational(r)} for c, r in K.balls],
            "points": [_vector(x) for x in K.points]}


def encode_subspace(V: AffineSubspace) -> Dict:
    return {"basis": [_vector(d) for d in V.directions], "offset": _vector(V.base)}


def encode_problem(prob: CapacityProblem) -> Dict:
    doc = {"type": "capacity", "m": prob.m, "resolution": prob.resolution, "K": encode_mask(prob.K)}
    if prob.domain.kind == 'ball':
        doc["ball"] = {"center": _vector(prob.domain.center), "radius": rational(prob.domain.radius)}
    else:
        doc["box"] = encode_box(prob.domain.box)
    if prob.V is not None:
        doc["V"] = encode_subspace(prob.V)
    return doc


_ENCODERS = [
    (TropicalPolynomial, encode_polynomial),
    (Polytope, encode_polytope),
    (PolyhedralCell, encode_cell),
    (WeightedComplex, encode_complex),
    (TropicalCycle, encode_cycle),
    (TropicalHypersurface, encode_hypersurface),
    (GridFunction, encode_grid),
    (HessianMeasure, encode_measure),
    (Indicator, encode_indicator),
    (MaskSpec, encode_mask),
    (CapacityProblem, encode_problem),
]


def encode(obj) -> Any:
    for cls, encoder in _ENCODERS:
        if isinstance(obj, cls):
            return encoder(obj)
    if isinstance(obj, Fraction):
        return rational(obj)
    raise TypeError(f"no JSON codec for {type(obj).__name__}")


def dumps(obj) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline"""
    doc = obj if isinstance(obj, (dict, list)) else encode(obj)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def dump(obj, path: str):
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dumps(obj))
    logger.debug("wrote %s", path)


# --------------------------------------------------------------------------
# Decoders

def decode_polynomial(doc: Dict) -> TropicalPolynomial:
    n = _require(doc, "n", "polynomial")
    if "text" in doc:
        return parse_tropical(doc["text"], n)
    terms = []
    for k, term in enumerate(_require(doc, "terms", "polynomial")):
        alpha = _require(term, "alpha", f"term {k}")
        if not all(isinstance(a, int) and not isinstance(a, bool) for a in alpha):
            raise InputError(f"term {k}: exponents must be integers")
        terms.append((alpha, parse_rational(_require(term, "upsilon", f"term {k}"), f"term {k}")))
    return TropicalPolynomial.from_terms(terms, n)


def decode_polytope(doc: Dict) -> Polytope:
    version = doc.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported polytope format version {version}")
    vertices = [_parse_vector(v, "vertex") for v in _require(doc, "vertices", "polytope")]
    P = convex_hull(vertices)
    if "n" in doc and doc["n"] != P.n:
        raise InputError(f"polytope declares n={doc['n']} but has vertices in R^{P.n}")
    return P


def decode_cell(doc: Dict, n: int) -> PolyhedralCell:
    def constraints(key):
        return [(_parse_vector(c["a"], key), parse_rational(c["b"], key)) for c in doc.get(key, [])]
    return PolyhedralCell.build(constraints("equalities"), constraints("inequalities"), n, doc.get("weight"))


def decode_complex(doc: Dict) -> WeightedComplex:
    n = _require(doc, "n", "complex")
    cells = tuple(decode_cell(c, n) for c in _require(doc, "cells", "complex"))
    return WeightedComplex(cells, _require(doc, "codim", "complex"), n)


def decode_cycle(doc: Dict) -> TropicalCycle:
    return TropicalCycle(decode_complex(_require(doc, "complex", "cycle")), doc.get("seed"))


def decode_hypersurface(doc: Dict) -> TropicalHypersurface:
    return TropicalHypersurface(decode_complex(doc["complex"]),
                                tuple(decode_polytope(P) for P in doc.get("duality", [])),
                                decode_polynomial(doc["polynomial"]), bool(doc.get("empty", False)))


def decode_box(obj):
    return make_box([(parse_rational(a, "box"), parse_rational(b, "box")) for a, b in obj])


def decode_grid(doc: Dict) -> GridFunction:
    box = decode_box(_require(doc, "box", "grid"))
    resolution = tuple(int(r) for r in _require(doc, "resolution", "grid"))
    values = np.asarray(_require(doc, "values", "grid"), dtype=float)
    return GridFunction(box, resolution, values)


def decode_measure(doc: Dict) -> HessianMeasure:
    n = _require(doc, "n", "measure")
    density = doc.get("density")
    atoms = tuple((_parse_vector(a["point"], "atom"), parse_rational(a["mass"], "atom"))
                  for a in doc.get("atoms", []))
    cells = tuple((decode_cell(c["cell"], n), sympy.sympify(c["density"])) for c in doc.get("cells", []))
    return HessianMeasure(n, _require(doc, "m", "measure"),
                          None if density is None else decode_grid(density), atoms, cells)


def decode_indicator(doc: Dict) -> Indicator:
    return Indicator.from_gradients([_parse_vector(a, "gradient") for a in _require(doc, "gradients", "indicator")])


def decode_mask(doc: Dict) -> MaskSpec:
    balls = tuple((_parse_vector(b["center"], "ball"), parse_rational(b["radius"], "ball"))
                  for b in doc.get("balls", []))
    mask = MaskSpec(tuple(decode_box(b) for b in doc.get("boxes", [])), balls,
                    tuple(_parse_vector(x, "point") for x in doc.get("points", [])))
    if mask.is_empty:
        raise InputError("K mask is empty")
    return mask


def decode_subspace(doc: Dict) -> AffineSubspace:
    basis = [[parse_rational(x, "V basis") for x in d] for d in _require(doc, "basis", "V")]
    offset = [parse_rational(x, "V offset") for x in _require(doc, "offset", "V")]
    return AffineSubspace.build(offset, basis)


def decode_problem(doc: Dict) -> CapacityProblem:
    if "ball" in doc:
        ball = doc["ball"]
        domain = Domain.ball_domain(_parse_vector(ball["center"], "ball"), parse_rational(ball["radius"], "ball"))
    else:
        domain = Domain('box', decode_box(_require(doc, "box", "capacity problem")))
    V = decode_subspace(doc["V"]) if doc.get("V") is not None else None
    resolution = doc.get("resolution")
    return CapacityProblem(domain, decode_mask(_require(doc, "K", "capacity problem")),
                           int(_require(doc, "m", "capacity problem")), V,
                           None if resolution is None else int(resolution))


_DECODERS = {
    "polynomial": decode_polynomial,
    "polytope": decode_polytope,
    "complex": decode_complex,
    "cycle": decode_cycle,
    "hypersurface": decode_hypersurface,
    "grid": decode_grid,
    "measure": decode_measure,
    "indicator": decode_indicator,
    "capacity": decode_problem,
}


def _infer_type(doc: Dict) -> str:
    if "type" in doc:
        return doc["type"]
    for key, kind in (("terms", "polynomial"), ("text", "polynomial"), ("gradients", "indicator"), ("K", "capacity"),
                      ("cells", "complex"), ("values", "grid"), ("vertices", "polytope")):
        if key in doc:
            return kind
    raise InputError(f"cannot tell what kind of document has keys {sorted(doc)}")


def decode(doc) -> Any:
    """A single typed document, or a list of them (e.g. the factors of an intersection)"""
    if isinstance(doc, list):
        return [decode(d) for d in doc]
    if not isinstance(doc, dict):
        raise InputError(f"expected a JSON object, got {type(doc).__name__}")
    kind = _infer_type(doc)
    if kind not in _DECODERS:
        raise InputError(f"unknown document type {kind!r}")
    try:
        return _DECODERS[kind](doc)
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed {kind} document: {e}") from e


def parse_json(text: str) -> Any:
    """json.loads with the failure position carried by a ParseError"""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON ({e.msg}, line {e.lineno} column {e.colno})", e.pos) from e


def loads(text: str) -> Any:
    return decode(parse_json(text))


def load_raw(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        return parse_json(fh.read())


def load(path: str) -> Any:
    return decode(load_raw(path))


def parse_mask_spec(text: str, n: int) -> MaskSpec:
    """'box:a1,b1,a2,b2;ball:c1,c2,r;point:x1,x2' as a union"""
    mask = MaskSpec()
    position = 0
    for piece in text.split(';'):
        kind, _, body = piece.strip().partition(':')
        try:
            numbers = [to_fraction(x) for x in body.split(',')] if body else []
        except (TypeError, ValueError):
            raise ParseError(f"bad number in mask piece {piece!r}", position)
        if kind == 'box' and len(numbers) == 2 * n:
            mask = mask.union(MaskSpec.box(list(zip(numbers[0::2], numbers[1::2]))))
        elif kind == 'ball' and len(numbers) == n + 1:
            mask = mask.union(MaskSpec.ball(numbers[:n], numbers[n]))
        elif kind == 'point' and len(numbers) == n:
            mask = mask.union(MaskSpec.point(numbers))
        else:
            raise ParseError(f"cannot read mask piece {piece!r} in dimension {n}", position)
        position += len(piece) + 1
    return mask
