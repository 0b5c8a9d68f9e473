"""
H-represented polyhedral cells and weighted polyhedral complexes.

Cells are enumerated exactly into vertices, extreme rays and a lineality basis.
The enumeration also accepts an infinitesimal right-hand side b0 + eps*b1; the
vertices then come back as (value, eps-coefficient) pairs and feasibility is
decided lexicographically, which is how displaced intersections are computed.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionMismatchError
from exact_geometry import Polytope, convex_hull
from exact_linalg import Vector, dot, nullspace, primitive, rank, rref, solve, sub, to_vector

logger = logging.getLogger(__name__)

Constraint = Tuple[Vector, Fraction]

ZERO = Fraction(0)


class Structure(NamedTuple):
    vertices: List[Tuple[Vector, Vector]]   # (x0, x1): the point x0 + eps*x1
    rays: List[Vector]
    lineality: List[Vector]


def enumerate_polyhedron(equalities: Sequence[Constraint], inequalities: Sequence[Constraint], n: int,
                         eq_shift: Optional[Sequence[Fraction]] = None,
                         ineq_shift: Optional[Sequence[Fraction]] = None) -> Structure:
    """Vertices, extreme rays and lineality of {A x = b + eps c, G x <= h + eps k}"""
    eq_shift = list(eq_shift) if eq_shift is not None else [ZERO] * len(equalities)
    ineq_shift = list(ineq_shift) if ineq_shift is not None else [ZERO] * len(inequalities)
    all_rows = [a for a, _ in equalities] + [g for g, _ in inequalities]
    lineality = nullspace(all_rows, n) if all_rows else nullspace([], n)

    eq_rows = [a for a, _ in equalities] + list(lineality)
    eq_rhs = [b for _, b in equalities] + [ZERO] * len(lineality)
    eq_eps = eq_shift + [ZERO] * len(lineality)
    eq_rank = rank(eq_rows, n) if eq_rows else 0
    free = n - eq_rank

    vertices = []
    seen = set()
    for subset in combinations(range(len(inequalities)), free):
        rows = eq_rows + [inequalities[i][0] for i in subset]
        if rank(rows, n) < n:
            continue
        x0 = solve(rows, eq_rhs + [inequalities[i][1] for i in subset])
        x1 = solve(rows, eq_eps + [ineq_shift[i] for i in subset])
        if x0 is None or x1 is None or (x0, x1) in seen:
            continue
        if all(_lex_nonnegative(h - dot(g, x0), k - dot(g, x1))
               for (g, h), k in zip(inequalities, ineq_shift)):
            seen.add((x0, x1))
            vertices.append((x0, x1))

    rays = []
    if vertices and free > 0:
        ray_seen = set()
        for subset in combinations(range(len(inequalities)), free - 1):
            rows = eq_rows + [inequalities[i][0] for i in subset]
            kernel = nullspace(rows, n) if rows else nullspace([], n)
            if len(kernel) != 1:
                continue
            for sign in (1, -1):
                d = tuple(sign * x for x in kernel[0])
                if d in ray_seen:
                    continue
                if all(dot(g, d) <= 0 for g, _ in inequalities):
                    ray_seen.add(d)
                    rays.append(d)
    return Structure(sorted(vertices), sorted(rays), list(lineality))


def _lex_nonnegative(value: Fraction, eps_coefficient: Fraction) -> bool:
    return value > 0 or (value == 0 and eps_coefficient >= 0)


@dataclass(frozen=True)
class PolyhedralCell:
    """Closed polyhedron {a.x = b for equalities, a.x <= b for inequalities} with an optional weight"""
    equalities: Tuple[Constraint, ...]
    inequalities: Tuple[Constraint, ...]
    n: int
    weight: Optional[int] = None

    @staticmethod
    def build(equalities, inequalities, n: int, weight: Optional[int] = None) -> 'PolyhedralCell':
        def norm(constraints):
            out = []
            for a, b in constraints:
                a = to_vector(a)
                if len(a) != n:
                    raise DimensionMismatchError(f"constraint of length {len(a)} in dimension {n}")
                out.append((a, Fraction(b)))
            return tuple(out)
        return PolyhedralCell(norm(equalities), norm(inequalities), n, weight)

    @cached_property
    def structure(self) -> Structure:
        return enumerate_polyhedron(self.equalities, self.inequalities, self.n)

    @property
    def vertices(self) -> List[Vector]:
        return [x0 for x0, _ in self.structure.vertices]

    @property
    def is_empty(self) -> bool:
        return not self.structure.vertices

    @cached_property
    def directions(self) -> List[Vector]:
        """Basis (reduced echelon rows) of the linear space parallel to the affine hull"""
        verts = self.vertices
        if not verts:
            return []
        spanning = [sub(v, verts[0]) for v in verts[1:]] + list(self.structure.rays) + list(self.structure.lineality)
        if not spanning:
            return []
        rows, _ = rref(spanning, self.n)
        return [tuple(r) for r in rows]

    @property
    def dim(self) -> int:
        return len(self.directions) if self.vertices else -1

    @property
    def is_bounded(self) -> bool:
        return not self.structure.rays and not self.structure.lineality

    @cached_property
    def relative_interior_point(self) -> Vector:
        verts = self.vertices
        count = len(verts)
        point = tuple(sum((v[c] for v in verts), ZERO) / count for c in range(self.n))
        for r in self.structure.rays:
            point = tuple(p + x for p, x in zip(point, r))
        return point

    @cached_property
    def key(self):
        """Canonical description of the point set (weight excluded)"""
        lineality = tuple(tuple(r) for r in rref(self.structure.lineality, self.n)[0]) if self.structure.lineality else ()
        return (tuple(self.vertices), tuple(tuple(primitive(r)) for r in self.structure.rays), lineality)

    def with_weight(self, weight: Optional[int]) -> 'PolyhedralCell':
        return PolyhedralCell(self.equalities, self.inequalities, self.n, weight)

    def contains(self, point: Sequence) -> bool:
        x = to_vector(point)
        return (all(dot(a, x) == b for a, b in self.equalities)
                and all(dot(a, x) <= b for a, b in self.inequalities))

    def contains_points(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Vectorized floating-point membership test for an (..., n) array of points"""
        inside = np.ones(points.shape[:-1], dtype=bool)
        for a, b in self.equalities:
            inside &= np.abs(points @ np.array([float(x) for x in a]) - float(b)) <= tol
        for a, b in self.inequalities:
            inside &= points @ np.array([float(x) for x in a]) <= float(b) + tol
        return inside

    def face(self, tight: Sequence[int]) -> 'PolyhedralCell':
        """Face where the listed inequalities hold with equality"""
        tight = set(tight)
        eqs = self.equalities + tuple(self.inequalities[i] for i in sorted(tight))
        ineqs = tuple(c for i, c in enumerate(self.inequalities) if i not in tight)
        return PolyhedralCell(eqs, ineqs, self.n)

    @cached_property
    def facets(self) -> List['PolyhedralCell']:
        result = []
        keys = set()
        for i in range(len(self.inequalities)):
            candidate = self.face([i])
            if candidate.is_empty or candidate.dim != self.dim - 1 or candidate.key in keys:
                continue
            keys.add(candidate.key)
            result.append(candidate)
        return sorted(result, key=lambda c: c.key)

    def to_polytope(self) -> Polytope:
        if not self.is_bounded:
            raise ValueError("unbounded cell has no polytope form")
        return convex_hull(self.vertices)

    def intersect(self, other: 'PolyhedralCell') -> 'PolyhedralCell':
        return PolyhedralCell(self.equalities + other.equalities,
                              self.inequalities + other.inequalities, self.n)

    def __str__(self):
        return (f"cell(dim={self.dim}, vertices={[tuple(str(x) for x in v) for v in self.vertices]}, "
                f"rays={[tuple(str(x) for x in r) for r in self.structure.rays]}, weight={self.weight})")


def cell_from_polytope(P: Polytope, weight: Optional[int] = None) -> PolyhedralCell:
    return PolyhedralCell(tuple(P.equalities), tuple(P.facets), P.n, weight)


@dataclass(frozen=True)
class WeightedComplex:
    """Pure weighted polyhedral complex: every top cell has dimension n - codim"""
    cells: Tuple[PolyhedralCell, ...]
    codim: int
    n: int

    @property
    def dim(self) -> int:
        return self.n - self.codim

    def __len__(self):
        return len(self.cells)

    @cached_property
    def ridges(self) -> List[Tuple[PolyhedralCell, List[int]]]:
        """Codimension-(codim+1) faces together with the indices of the top cells around them"""
        found: Dict[tuple, Tuple[PolyhedralCell, List[int]]] = {}
        for index, cell in enumerate(self.cells):
            for facet in cell.facets:
                entry = found.setdefault(facet.key, (facet, []))
                entry[1].append(index)
        return [found[k] for k in sorted(found)]

    def total_weight(self) -> int:
        return sum(c.weight or 0 for c in self.cells)


def sorted_cells(cells: Sequence[PolyhedralCell]) -> Tuple[PolyhedralCell, ...]:
    return tuple(sorted(cells, key=lambda c: (c.key, c.weight or 0)))
