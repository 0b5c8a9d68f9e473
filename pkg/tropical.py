"""
Tropical polynomials f(x) = max_a(-v(a) + a.x), their Newton polytopes, regular
dual subdivisions, weighted tropical hypersurfaces and the balancing check.
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from errors import (DimensionMismatchError, DuplicateSupportError, NumericalError,
                    ParseError, RangeError)
from exact_geometry import Polytope, convex_hull
from exact_linalg import (Vector, dot, gcd_of_maximal_minors, integer_kernel,
                          lattice_length, nullspace, primitive, rank, solve, sub,
                          to_fraction, to_vector)
from polyhedra import PolyhedralCell, WeightedComplex, sorted_cells

logger = logging.getLogger(__name__)

LatticePoint = Tuple[int, ...]


@dataclass(frozen=True)
class TropicalPolynomial:
    """Finite support A in Z^n with rational coefficients v: f(x) = max(-v(a) + a.x)"""
    terms: Tuple[Tuple[LatticePoint, Fraction], ...]
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise RangeError("ambient dimension must be at least 1")
        if not self.terms:
            raise RangeError("tropical polynomial needs at least one term")
        seen = set()
        for alpha, _ in self.terms:
            if len(alpha) != self.n:
                raise DimensionMismatchError(f"exponent {alpha} does not live in Z^{self.n}")
            if alpha in seen:
                raise DuplicateSupportError(f"exponent {alpha} appears twice")
            seen.add(alpha)

    @staticmethod
    def from_terms(terms, n: int) -> 'TropicalPolynomial':
        """terms: iterable of (alpha, upsilon) pairs in any order"""
        cleaned = [(tuple(int(a) for a in alpha), to_fraction(upsilon)) for alpha, upsilon in terms]
        alphas = [a for a, _ in cleaned]
        if len(set(alphas)) != len(alphas):
            dup = next(a for a in alphas if alphas.count(a) > 1)
            raise DuplicateSupportError(f"exponent {dup} appears twice")
        return TropicalPolynomial(tuple(sorted(cleaned)), n)

    @property
    def support(self) -> List[LatticePoint]:
        return [alpha for alpha, _ in self.terms]

    @property
    def coeffs(self) -> Dict[LatticePoint, Fraction]:
        return dict(self.terms)

    def degree(self) -> int:
        return max(sum(alpha) for alpha in self.support)

    def scaled(self, factor) -> 'TropicalPolynomial':
        """The polynomial t -> factor * f(t), i.e. coefficients and exponents times factor"""
        factor = Fraction(factor)
        if factor.denominator != 1 or factor <= 0:
            raise RangeError("scaling a tropical polynomial needs a positive integer")
        k = int(factor)
        return TropicalPolynomial.from_terms([(tuple(k * a for a in alpha), k * v) for alpha, v in self.terms], self.n)

    def __str__(self):
        pieces = []
        for alpha, upsilon in self.terms:
            term = _format_rational(-upsilon)
            for i, k in enumerate(alpha, 1):
                if k == 0:
                    continue
                sign = '+' if k > 0 else '-'
                mag = abs(k)
                term += f" {sign} {mag}*x{i}" if mag != 1 else f" {sign} x{i}"
            pieces.append(term)
        return f"max({', '.join(pieces)})"


def _format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# --------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<var>x\d+)|(?P<name>[A-Za-z_]\w*)|(?P<sym>[(),+\-*]))")


class _Token(NamedTuple):
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == '':
            break
        match = _TOKEN.match(text, pos)
        if not match:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), start))
        pos = match.end()
    tokens.append(_Token('end', '', len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.tokens = _tokenize(text)
        self.index = 0
        self.n = n

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def take(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.take()
        if token.text != text:
            shown = token.text or 'end of input'
            raise ParseError(f"expected {text!r}, found {shown!r}", token.position)
        return token

    def polynomial(self) -> List[Tuple[LatticePoint, Fraction, int]]:
        terms = []
        if self.peek().kind == 'name':
            name = self.take()
            if name.text != 'max':
                raise ParseError(f"unknown function {name.text!r}", name.position)
            self.expect('(')
            terms.append(self.term())
            while self.peek().text == ',':
                self.take()
                terms.append(self.term())
            self.expect(')')
        else:
            terms.append(self.term())
        end = self.peek()
        if end.kind != 'end':
            raise ParseError(f"trailing input {end.text!r}", end.position)
        return terms

    def term(self) -> Tuple[LatticePoint, Fraction, int]:
        start = self.peek().position
        constant = Fraction(0)
        exponent = [0] * self.n
        sign = 1
        if self.peek().text in '+-' and self.peek().kind == 'sym':
            sign = -1 if self.take().text == '-' else 1
        while True:
            token = self.take()
            if token.kind == 'num':
                value = sign * Fraction(token.text)
                if self.peek().text == '*':
                    self.take()
                    var = self.take()
                    if var.kind != 'var':
                        raise ParseError("expected a variable after '*'", var.position)
                    if value.denominator != 1:
                        raise ParseError("exponents must be integers", token.position)
                    exponent[self.variable(var)] += int(value)
                else:
                    constant += value
            elif token.kind == 'var':
                exponent[self.variable(token)] += sign
            else:
                shown = token.text or 'end of input'
                raise ParseError(f"expected a number or variable, found {shown!r}", token.position)
            nxt = self.peek()
            if nxt.kind == 'sym' and nxt.text in '+-':
                sign = -1 if self.take().text == '-' else 1
                continue
            break
        # stored coefficient is v(a) = -c
        return tuple(exponent), -constant, start

    def variable(self, token: _Token) -> int:
        index = int(token.text[1:])
        if not 1 <= index <= self.n:
            raise ParseError(f"variable {token.text} outside x1..x{self.n}", token.position)
        return index - 1


def parse_tropical(text: str, n: int) -> TropicalPolynomial:
    """Parse `max(term, ...)` with terms `c + k1*x1 + ...` (whitespace-insensitive)"""
    if n < 1:
        raise RangeError("ambient dimension must be at least 1")
    terms = _Parser(text, n).polynomial()
    seen = {}
    for alpha, upsilon, position in terms:
        if alpha in seen:
            raise DuplicateSupportError(f"duplicate exponent {alpha} at position {position}")
        seen[alpha] = upsilon
    return TropicalPolynomial.from_terms(seen.items(), n)


# --------------------------------------------------------------------------
# Evaluation and Newton polytope

def evaluate(f: TropicalPolynomial, x: Sequence) -> Fraction:
    point = to_vector(x)
    if len(point) != f.n:
        raise DimensionMismatchError(f"point of dimension {len(point)} for a polynomial in {f.n} variables")
    return max(-upsilon + dot(alpha, point) for alpha, upsilon in f.terms)


def subdifferential_at(f: TropicalPolynomial, x: Sequence) -> List[LatticePoint]:
    """Exponents attaining the maximum at x (the vertices of the subdifferential)"""
    point = to_vector(x)
    values = [(-upsilon + dot(alpha, point), alpha) for alpha, upsilon in f.terms]
    top = max(v for v, _ in values)
    return [alpha for v, alpha in values if v == top]


def newton_polytope(f: TropicalPolynomial) -> Polytope:
    return convex_hull(f.support)


# --------------------------------------------------------------------------
# Dual subdivision

@dataclass(frozen=True)
class DualSubdivision:
    """Regular subdivision of the Newton polytope induced by the lifting a -> -v(a)"""
    base: Polytope
    cells: Tuple[Polytope, ...]
    members: Tuple[Tuple[LatticePoint, ...], ...]   # support points on each lifted cell

    def faces(self, k: int) -> List[Tuple[Polytope, Tuple[LatticePoint, ...]]]:
        """k-dimensional faces of the subdivision with the support points lying on them"""
        found = {}
        for cell, members in zip(self.cells, self.members):
            for face in cell.faces(k):
                if face.vertices in found:
                    continue
                on_face = tuple(a for a in members if face.contains(a))
                found[face.vertices] = (face, on_face)
        return [found[key] for key in sorted(found)]


def dual_subdivision(f: TropicalPolynomial) -> DualSubdivision:
    base = newton_polytope(f)
    support = f.support
    if base.dim == 0:
        return DualSubdivision(base, (base,), (tuple(support),))
    hull = base.hull
    lifted = [hull.project(alpha) + (-f.coeffs[alpha],) for alpha in support]
    lifted_hull = convex_hull(lifted)
    if lifted_hull.dim == base.dim:
        return DualSubdivision(base, (base,), (tuple(support),))
    cells = {}
    for normal, offset in lifted_hull.facets:
        # upper faces: outward normal with positive last coordinate
        if normal[-1] <= 0:
            continue
        members = tuple(a for a, p in zip(support, lifted) if dot(normal, p) == offset)
        cell = convex_hull(members)
        cells[cell.vertices] = (cell, members)
    ordered = [cells[key] for key in sorted(cells)]
    logger.debug("dual subdivision of %s: %d cells", f, len(ordered))
    return DualSubdivision(base, tuple(c for c, _ in ordered), tuple(m for _, m in ordered))


# --------------------------------------------------------------------------
# Hypersurfaces

def _lattice(v: Sequence) -> LatticePoint:
    return tuple(int(x) for x in v)


def dual_cell(f: TropicalPolynomial, face: Polytope, members: Sequence[LatticePoint],
              weight: Optional[int] = None) -> PolyhedralCell:
    """Region of R^n where exactly the terms on `face` attain the maximum (closed)"""
    coeffs = f.coeffs
    corners = [_lattice(v) for v in face.vertices]
    a0 = corners[0]
    eqs = [(sub(a, a0), coeffs[a] - coeffs[a0]) for a in corners[1:]]
    inside = set(members)
    ineqs = [(sub(g, a0), coeffs[g] - coeffs[a0]) for g in f.support if g not in inside]
    return PolyhedralCell.build(eqs, ineqs, f.n, weight)


@dataclass(frozen=True)
class TropicalHypersurface:
    complex: WeightedComplex
    duality: Tuple[Polytope, ...]     # dual edge of each top cell, same order
    polynomial: TropicalPolynomial
    empty: bool = False

    @property
    def n(self) -> int:
        return self.complex.n

    @property
    def cells(self):
        return self.complex.cells


def hypersurface(f: TropicalPolynomial) -> TropicalHypersurface:
    """Corner locus of f as a weighted codimension-1 complex dual to the subdivision edges"""
    sub_division = dual_subdivision(f)
    if sub_division.base.dim == 0:
        return TropicalHypersurface(WeightedComplex((), 1, f.n), (), f, empty=True)
    pieces = []
    for edge, members in sub_division.faces(1):
        a, b = (_lattice(v) for v in edge.vertices)
        cell = dual_cell(f, edge, members, lattice_length(sub(b, a)))
        pieces.append((cell, edge))
    pieces.sort(key=lambda item: item[0].key)
    complex_ = WeightedComplex(tuple(c for c, _ in pieces), 1, f.n)
    report = check_balancing(complex_)
    if not report.balanced:
        raise NumericalError(f"hypersurface of {f} fails balancing at {len(report.violations)} cells")
    return TropicalHypersurface(complex_, tuple(e for _, e in pieces), f)


def vertices(f: TropicalPolynomial) -> List[Tuple[Vector, Polytope]]:
    """Vertices of the hypersurface with their dual full-dimensional subdivision cells"""
    sub_division = dual_subdivision(f)
    if sub_division.base.dim < f.n:
        return []
    result = []
    coeffs = f.coeffs
    for cell in sub_division.cells:
        corners = [_lattice(v) for v in cell.vertices]
        a0 = corners[0]
        rows = [sub(a, a0) for a in corners[1:]]
        rhs = [coeffs[a] - coeffs[a0] for a in corners[1:]]
        point = solve(rows, rhs)
        result.append((point, cell))
    return sorted(result, key=lambda item: item[0])


def skeleton(f: TropicalPolynomial, k: int) -> List[Tuple[PolyhedralCell, Polytope]]:
    """Cells of codimension k of the corner locus with their dual k-faces"""
    sub_division = dual_subdivision(f)
    return [(dual_cell(f, face, members), face) for face, members in sub_division.faces(k)]


# --------------------------------------------------------------------------
# Balancing

class BalancingReport(NamedTuple):
    balanced: bool
    violations: List[Tuple[PolyhedralCell, Vector]]   # ridge and the offending weighted sum


def primitive_normal(sigma: PolyhedralCell, tau: PolyhedralCell) -> Vector:
    """Primitive generator of (Z^n cap span sigma) / (Z^n cap span tau) pointing into sigma"""
    n = sigma.n
    toward = primitive(sub(sigma.relative_interior_point, tau.relative_interior_point))
    complement = nullspace(tau.directions, n) if tau.directions else nullspace([], n)
    tau_lattice = integer_kernel([primitive(r) for r in complement], n)
    index = gcd_of_maximal_minors(tau_lattice + [toward])
    return tuple(Fraction(x, index) for x in toward)


def check_balancing(C: WeightedComplex) -> BalancingReport:
    """Weighted primitive normals around each codim-(p+1) cell must sum into its span"""
    violations = []
    for tau, around in C.ridges:
        total = [Fraction(0)] * C.n
        for index in around:
            sigma = C.cells[index]
            u = primitive_normal(sigma, tau)
            total = [t + (sigma.weight or 0) * x for t, x in zip(total, u)]
        span = list(tau.directions)
        if any(total) and rank(span + [tuple(total)], C.n) > len(span):
            violations.append((tau, tuple(total)))
    if violations:
        logger.info("balancing fails at %d of %d ridges", len(violations), len(C.ridges))
    return BalancingReport(not violations, violations)


def reweighted(C: WeightedComplex, index: int, weight: int) -> WeightedComplex:
    cells = list(C.cells)
    cells[index] = cells[index].with_weight(weight)
    return WeightedComplex(tuple(cells), C.codim, C.n)


__all__ = [
    'TropicalPolynomial', 'parse_tropical', 'evaluate', 'subdifferential_at', 'newton_polytope',
    'DualSubdivision', 'dual_subdivision', 'TropicalHypersurface', 'hypersurface',
    'vertices', 'skeleton', 'dual_cell', 'check_balancing', 'BalancingReport',
    'primitive_normal', 'reweighted', 'sorted_cells',
]
