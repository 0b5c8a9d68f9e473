"""
Exact rational convex geometry: hulls, volumes, Minkowski sums, mixed volumes
and Hausdorff measures of polyhedral sets.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from itertools import combinations
from math import factorial, gcd
from typing import Dict, FrozenSet, List, NamedTuple, Sequence, Tuple

import sympy

from errors import DimensionMismatchError, RangeError
from exact_linalg import (Vector, det, dot, nullspace, primitive, rank, rref, sub,
                          to_vector)

logger = logging.getLogger(__name__)


@dataclass
class _Facet:
    normal: Tuple[int, ...]
    offset: int
    members: set


class AffineHull(NamedTuple):
    """x = base + t @ rows, with rows in reduced echelon form over the pivot coordinates"""
    base: Vector
    rows: List[Vector]
    pivots: List[int]

    @property
    def dim(self) -> int:
        return len(self.rows)

    def project(self, point: Sequence) -> Vector:
        return tuple(point[p] - self.base[p] for p in self.pivots)

    def gram_determinant(self) -> Fraction:
        return det([[dot(a, b) for b in self.rows] for a in self.rows]) if self.rows else Fraction(1)


def affine_hull(points: Sequence[Sequence]) -> AffineHull:
    base = tuple(points[0])
    diffs = [sub(p, base) for p in points[1:]]
    n = len(base)
    rows, pivots = rref(diffs, n) if diffs else ([], [])
    return AffineHull(base, [tuple(r) for r in rows], pivots)


def affine_dimension(points: Sequence[Sequence]) -> int:
    if not points:
        return -1
    base = points[0]
    return rank([sub(p, base) for p in points[1:]], len(base)) if len(points) > 1 else 0


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many rational points, kept as its irredundant vertex list.

    Build instances with convex_hull(); the constructor trusts its input.
    """
    vertices: Tuple[Vector, ...]
    n: int
    _facet_sets: Tuple[FrozenSet[int], ...] = field(default=(), compare=False, repr=False)

    @cached_property
    def hull(self) -> AffineHull:
        return affine_hull(self.vertices)

    @property
    def dim(self) -> int:
        return self.hull.dim

    @cached_property
    def equalities(self) -> List[Tuple[Vector, Fraction]]:
        """Affine-hull equations a.x = b (empty for full-dimensional polytopes)"""
        normals = nullspace(self.hull.rows, self.n) if self.hull.rows else nullspace([], self.n)
        if self.dim == self.n:
            return []
        return [(a, dot(a, self.vertices[0])) for a in normals]

    @cached_property
    def facets(self) -> List[Tuple[Vector, Fraction]]:
        """Facet inequalities normal.x <= offset (inside the affine hull for lower-dimensional P)"""
        k = self.dim
        if k == 0:
            return []
        projected = [self.hull.project(v) for v in self.vertices]
        result = []
        for normal, offset in _projected_facets(projected, self._facet_sets):
            full = [Fraction(0)] * self.n
            for c, p in enumerate(self.hull.pivots):
                full[p] = Fraction(normal[c])
            shift = dot(full, self.hull.base)
            result.append((tuple(full), Fraction(offset) + shift))
        return result

    @cached_property
    def facet_vertex_sets(self) -> Tuple[FrozenSet[int], ...]:
        if self._facet_sets or self.dim <= 0:
            return self._facet_sets
        sets = []
        for normal, offset in self.facets:
            sets.append(frozenset(i for i, v in enumerate(self.vertices) if dot(normal, v) == offset))
        return tuple(sets)

    @cached_property
    def face_lattice(self) -> Dict[int, List[FrozenSet[int]]]:
        """Faces keyed by dimension, as sets of vertex indices (the polytope itself included)"""
        whole = frozenset(range(len(self.vertices)))
        faces = set(self.facet_vertex_sets)
        frontier = set(faces)
        while frontier:
            fresh = set()
            for a in frontier:
                for b in faces:
                    meet = a & b
                    if meet and meet not in faces and meet not in fresh:
                        fresh.add(meet)
            faces |= fresh
            frontier = fresh
        faces.add(whole)
        by_dim: Dict[int, List[FrozenSet[int]]] = {}
        for face in faces:
            d = affine_dimension([self.vertices[i] for i in sorted(face)])
            by_dim.setdefault(d, []).append(face)
        for d in by_dim:
            by_dim[d].sort(key=lambda s: sorted(s))
        return by_dim

    def faces(self, k: int) -> List['Polytope']:
        return [Polytope(tuple(self.vertices[i] for i in sorted(face)), self.n)
                for face in self.face_lattice.get(k, [])]

    def contains(self, point: Sequence) -> bool:
        x = to_vector(point)
        if any(dot(a, x) != b for a, b in self.equalities):
            return False
        return all(dot(a, x) <= b for a, b in self.facets)

    def __len__(self):
        return len(self.vertices)


def _check_points(points) -> List[Vector]:
    if not points:
        raise RangeError("convex hull of an empty point set")
    vectors = [to_vector(p) for p in points]
    n = len(vectors[0])
    if n < 1:
        raise RangeError("ambient dimension must be at least 1")
    for v in vectors:
        if len(v) != n:
            raise DimensionMismatchError(f"point {v} has dimension {len(v)}, expected {n}")
    return vectors


def convex_hull(points: Sequence[Sequence]) -> Polytope:
    """Irredundant V-representation of conv(points), vertices in lexicographic order"""
    vectors = sorted(set(_check_points(points)))
    n = len(vectors[0])
    hull = affine_hull(vectors)
    d = hull.dim
    if d == 0:
        return Polytope((vectors[0],), n)
    projected = [hull.project(v) for v in vectors]
    if d == 1:
        keyed = sorted(range(len(vectors)), key=lambda i: projected[i][0])
        ends = sorted({vectors[keyed[0]], vectors[keyed[-1]]})
        return Polytope(tuple(ends), n)
    integral, _ = _integralize(projected)
    facets, vertex_ids = _beneath_beyond(integral)
    kept = sorted(vertex_ids, key=lambda i: vectors[i])
    position = {old: new for new, old in enumerate(kept)}
    facet_sets = tuple(sorted((frozenset(position[i] for i in f.members if i in position)
                               for f in facets), key=lambda s: sorted(s)))
    return Polytope(tuple(vectors[i] for i in kept), n, facet_sets)


def _integralize(points: Sequence[Vector]) -> Tuple[List[Tuple[int, ...]], int]:
    lcm = 1
    for p in points:
        for x in p:
            lcm = lcm * x.denominator // gcd(lcm, x.denominator)
    return [tuple(int(x * lcm) for x in p) for p in points], lcm


def _hyperplane(points: Sequence[Tuple[int, ...]], ids: Sequence[int]):
    base = points[ids[0]]
    diffs = [tuple(a - b for a, b in zip(points[i], base)) for i in ids[1:]]
    normal = primitive(nullspace(diffs, len(base))[0])
    offset = sum(a * b for a, b in zip(normal, base))
    return normal, offset


def _independent_subset(points, ids, size):
    """Greedily pick `size` affinely independent points out of ids"""
    chosen = [ids[0]]
    diffs = []
    for i in ids[1:]:
        if len(chosen) == size:
            break
        trial = diffs + [sub(points[i], points[chosen[0]])]
        if rank(trial, len(points[0])) == len(trial):
            diffs = trial
            chosen.append(i)
    return chosen


def _beneath_beyond(points: List[Tuple[int, ...]]):
    """Incremental hull of full-dimensional integer points; returns (facets, vertex ids)"""
    d = len(points[0])
    order = sorted(range(len(points)), key=lambda i: points[i])
    simplex = _independent_subset(points, order, d + 1)
    centroid = tuple(sum(points[i][c] for i in simplex) for c in range(d))

    def oriented(normal, offset):
        if sum(a * b for a, b in zip(normal, centroid)) > offset * (d + 1):
            return tuple(-a for a in normal), -offset
        return normal, offset

    facets = []
    for omit in simplex:
        others = [i for i in simplex if i != omit]
        normal, offset = oriented(*_hyperplane(points, others))
        facets.append(_Facet(normal, offset, set(others)))

    processed = list(simplex)
    for k in order:
        if k in simplex:
            continue
        p = points[k]
        side = [sum(a * b for a, b in zip(f.normal, p)) - f.offset for f in facets]
        visible = {i for i, s in enumerate(side) if s > 0}
        processed.append(k)
        if not visible:
            for i, s in enumerate(side):
                if s == 0:
                    facets[i].members.add(k)
            continue
        planes = {}
        for i in visible:
            for j, g in enumerate(facets):
                if j in visible or side[j] == 0:
                    continue
                ridge = facets[i].members & g.members
                if len(ridge) < d - 1:
                    continue
                ridge_ids = sorted(ridge)
                if affine_dimension([points[r] for r in ridge_ids]) != d - 2:
                    continue
                base = _independent_subset(points, ridge_ids, d - 1)
                normal, offset = oriented(*_hyperplane(points, base + [k]))
                planes[(normal, offset)] = True
        survivors = []
        for j, f in enumerate(facets):
            if j in visible:
                continue
            if side[j] == 0:
                f.members.add(k)
            survivors.append(f)
        for normal, offset in planes:
            members = {i for i in processed
                       if sum(a * b for a, b in zip(normal, points[i])) == offset}
            survivors.append(_Facet(normal, offset, members))
        facets = survivors

    vertex_ids = []
    for i in {m for f in facets for m in f.members}:
        normals = [f.normal for f in facets if i in f.members]
        if rank(normals, d) == d:
            vertex_ids.append(i)
    logger.debug("hull of %d points in dimension %d: %d facets, %d vertices",
                 len(points), d, len(facets), len(vertex_ids))
    return facets, vertex_ids


def _projected_facets(projected: List[Vector], facet_sets):
    """Facet inequalities of a full-dimensional point set in projected coordinates"""
    d = len(projected[0])
    if d == 1:
        xs = [p[0] for p in projected]
        return [((Fraction(1),), max(xs)), ((Fraction(-1),), -min(xs))]
    interior = tuple(sum(p[c] for p in projected) / len(projected) for c in range(d))
    result = []
    if not facet_sets:
        integral, _ = _integralize(projected)
        facets, _ = _beneath_beyond(integral)
        facet_sets = [frozenset(f.members) for f in facets]
    for members in facet_sets:
        ids = sorted(members)
        base = projected[ids[0]]
        diffs = [sub(projected[i], base) for i in ids[1:]]
        normal = tuple(Fraction(x) for x in primitive(nullspace(diffs, d)[0]))
        offset = dot(normal, base)
        if dot(normal, interior) > offset:
            normal, offset = tuple(-x for x in normal), -offset
        result.append((normal, offset))
    return sorted(result)


def _simplex_volume(points: Sequence[Vector]) -> Fraction:
    base = points[0]
    d = len(points) - 1
    return abs(det([sub(p, base) for p in points[1:]])) / factorial(d)


def pulling_triangulation(P: Polytope) -> List[Tuple[int, ...]]:
    """Simplices (as vertex-index tuples) of the pulling triangulation from the first vertex"""
    lattice = P.face_lattice
    top = P.dim

    def triangulate(face: FrozenSet[int], k: int) -> List[Tuple[int, ...]]:
        if k == 0:
            return [tuple(face)]
        apex = min(face)
        simplices = []
        for sub_face in lattice.get(k - 1, []):
            if sub_face < face and apex not in sub_face:
                simplices.extend((apex,) + s for s in triangulate(sub_face, k - 1))
        return simplices

    return triangulate(frozenset(range(len(P.vertices))), top)


def _intrinsic_volume(P: Polytope) -> Fraction:
    """Volume of P inside its affine hull, measured in the projected pivot coordinates"""
    k = P.dim
    if k == 0:
        return Fraction(1)
    projected = [P.hull.project(v) for v in P.vertices]
    if k == 1:
        xs = [p[0] for p in projected]
        return max(xs) - min(xs)
    return sum((_simplex_volume([projected[i] for i in s]) for s in pulling_triangulation(P)),
               Fraction(0))


def volume(P: Polytope) -> Fraction:
    """Euclidean n-volume; zero for lower-dimensional polytopes"""
    if P.dim < P.n:
        return Fraction(0)
    return _intrinsic_volume(P)


def minkowski_sum(P: Polytope, Q: Polytope) -> Polytope:
    if P.n != Q.n:
        raise DimensionMismatchError(f"Minkowski sum of polytopes in dimensions {P.n} and {Q.n}")
    return convex_hull([tuple(a + b for a, b in zip(p, q)) for p in P.vertices for q in Q.vertices])


def dilate(P: Polytope, factor) -> Polytope:
    factor = Fraction(factor)
    if factor <= 0:
        raise RangeError("dilation factor must be positive")
    return Polytope(tuple(tuple(x * factor for x in v) for v in P.vertices), P.n, P._facet_sets)


def translate(P: Polytope, shift: Sequence) -> Polytope:
    shift = to_vector(shift)
    return Polytope(tuple(tuple(x + s for x, s in zip(v, shift)) for v in P.vertices), P.n, P._facet_sets)


def mixed_volume(*polytopes: Polytope) -> Fraction:
    """Normalized mixed volume, MV(P,...,P) = n! Vol(P), by inclusion-exclusion"""
    if not polytopes:
        raise RangeError("mixed volume of no bodies")
    n = polytopes[0].n
    for P in polytopes:
        if P.n != n:
            raise DimensionMismatchError("mixed volume of polytopes in different dimensions")
    if len(polytopes) != n:
        raise RangeError(f"mixed volume in dimension {n} needs {n} bodies, got {len(polytopes)}")
    total = Fraction(0)
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for subset in combinations(range(n), size):
            body = reduce(minkowski_sum, (polytopes[i] for i in subset))
            total += sign * volume(body)
    return total


class HausdorffMeasure(NamedTuple):
    value: sympy.Expr
    divergent: bool


def _polytope_measure(P: Polytope, d: int) -> sympy.Expr:
    if P.dim > d:
        return sympy.oo
    if P.dim < d:
        return sympy.Integer(0)
    vol = sympy.Rational(_intrinsic_volume(P))
    gram = P.hull.gram_determinant()
    return vol * sympy.sqrt(sympy.Rational(gram))


def hausdorff_measure(C, d: int, weighted: bool = False) -> HausdorffMeasure:
    """d-dimensional Hausdorff measure of a Polytope, PolyhedralCell or WeightedComplex"""
    if hasattr(C, 'cells'):
        cells = list(C.cells)
        n = C.n
    else:
        cells = [C]
        n = C.n
    if not 0 <= d <= n:
        raise RangeError(f"Hausdorff dimension {d} outside [0, {n}]")
    total = sympy.Integer(0)
    divergent = False
    for cell in cells:
        if isinstance(cell, Polytope):
            piece = _polytope_measure(cell, d)
        elif cell.dim < d:
            piece = sympy.Integer(0)
        elif cell.dim > d or not cell.is_bounded:
            piece = sympy.oo
        else:
            piece = _polytope_measure(cell.to_polytope(), d)
        if piece == sympy.oo:
            divergent = True
        weight = getattr(cell, 'weight', None)
        if weighted and weight is not None:
            piece = piece * weight
        total = total + piece
    return HausdorffMeasure(sympy.oo if divergent else sympy.simplify(total), divergent)
