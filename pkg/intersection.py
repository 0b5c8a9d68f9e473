"""
Stable intersection of tropical hypersurfaces.

H_1 . H_2 ... H_p is the limit of H_1 cap (H_2 + eps v_2) cap ... for a generic
rational displacement. eps stays symbolic: every displaced cell is enumerated
with (value, eps-coefficient) right-hand sides, so no floating point is involved.
"""

import hashlib
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import (DEFAULT_SEED, DISPLACEMENT_DENOMINATOR, DISPLACEMENT_RANGE,
                    DISPLACEMENT_RETRIES)
from errors import (DimensionMismatchError, NonGenericDisplacementError, NumericalError,
                    RangeError)
from exact_linalg import (Vector, dot, gcd_of_maximal_minors, nullspace, primitive, rank,
                          rref, sub)
from polyhedra import PolyhedralCell, WeightedComplex, enumerate_polyhedron, sorted_cells
from tropical import (TropicalHypersurface, TropicalPolynomial, check_balancing,
                      hypersurface)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
# two evaluation points for the generic rank of vectors linear in eps
_PROBE_EPS = (Fraction(1, 1000003), Fraction(7, 999983))


class _NonGeneric(Exception):
    pass


@dataclass(frozen=True)
class TropicalCycle:
    """Balanced weighted complex of codimension p; cell weights are the multiplicities"""
    complex: WeightedComplex
    seed: Optional[int] = None

    @property
    def codim(self) -> int:
        return self.complex.codim

    @property
    def n(self) -> int:
        return self.complex.n

    @property
    def cells(self):
        return self.complex.cells

    def points(self) -> List[Tuple[Vector, int]]:
        """(point, multiplicity) pairs of a zero-dimensional cycle"""
        if self.complex.dim != 0:
            raise RangeError(f"cycle of dimension {self.complex.dim} has no point list")
        return [(c.vertices[0], c.weight) for c in self.cells]


def _seed_from(hypersurfaces: Sequence[TropicalHypersurface]) -> int:
    text = '|'.join(str(H.polynomial) for H in hypersurfaces)
    digest = hashlib.sha256(text.encode()).hexdigest()
    return (int(digest[:12], 16) + DEFAULT_SEED) % (2 ** 32)


def _displacements(rng: np.random.Generator, p: int, n: int) -> List[Vector]:
    shifts = [tuple([ZERO] * n)]
    for _ in range(p - 1):
        numerators = rng.integers(-DISPLACEMENT_RANGE, DISPLACEMENT_RANGE + 1, size=n)
        shifts.append(tuple(Fraction(int(x), DISPLACEMENT_DENOMINATOR) for x in numerators))
    return shifts


def stable_intersection(*factors: Union[TropicalHypersurface, TropicalPolynomial],
                        seed: Optional[int] = None) -> TropicalCycle:
    """Codimension-p cycle H_1 . ... . H_p; retries non-generic displacements"""
    if not factors:
        raise RangeError("stable intersection of no hypersurfaces")
    hypersurfaces = [hypersurface(h) if isinstance(h, TropicalPolynomial) else h for h in factors]
    n = hypersurfaces[0].n
    for H in hypersurfaces:
        if H.n != n:
            raise DimensionMismatchError(f"hypersurfaces in dimensions {n} and {H.n}")
    p = len(hypersurfaces)
    if p > n:
        raise RangeError(f"cannot intersect {p} hypersurfaces in dimension {n}")
    if any(H.empty for H in hypersurfaces):
        return TropicalCycle(WeightedComplex((), p, n), seed)
    if p == 1:
        return TropicalCycle(hypersurfaces[0].complex, seed)

    seed = _seed_from(hypersurfaces) if seed is None else seed
    rng = np.random.default_rng(seed)
    for attempt in range(DISPLACEMENT_RETRIES):
        shifts = _displacements(rng, p, n)
        try:
            pieces = _displaced_intersection(hypersurfaces, shifts)
            break
        except _NonGeneric as exc:
            logger.warning("displacement %d is not generic (%s), retrying", attempt + 1, exc)
    else:
        raise NonGenericDisplacementError(f"no generic displacement found in {DISPLACEMENT_RETRIES} attempts")

    cells = _canonicalize(pieces, n, p)
    complex_ = WeightedComplex(sorted_cells(cells), p, n)
    report = check_balancing(complex_)
    if not report.balanced:
        raise NumericalError(f"stable intersection fails balancing at {len(report.violations)} cells")
    logger.info("stable intersection of %d hypersurfaces in R^%d: %d cells", p, n, len(cells))
    return TropicalCycle(complex_, seed)


def _generic_rank(vectors: Sequence[Tuple[Vector, Vector]], n: int) -> int:
    """Rank over Q(eps) of vectors a + eps*b"""
    if not vectors:
        return 0
    return max(rank([tuple(x + e * y for x, y in zip(a, b)) for a, b in vectors], n)
               for e in _PROBE_EPS)


def _displaced_intersection(hypersurfaces: Sequence[TropicalHypersurface],
                            shifts: Sequence[Vector]) -> List[PolyhedralCell]:
    n = hypersurfaces[0].n
    p = len(hypersurfaces)
    target = n - p
    pieces = []
    for combo in product(*(H.cells for H in hypersurfaces)):
        eqs, eq_eps, ineqs, ineq_eps = [], [], [], []
        weight = 1
        for cell, v in zip(combo, shifts):
            # sigma + eps v:  a.x <= b  becomes  a.x <= b + eps a.v
            for a, b in cell.equalities:
                eqs.append((a, b))
                eq_eps.append(dot(a, v))
            for a, b in cell.inequalities:
                ineqs.append((a, b))
                ineq_eps.append(dot(a, v))
            weight *= cell.weight
        normals = [a for a, _ in eqs]
        eq_rank = rank(normals, n)
        if eq_rank < p:
            augmented = [tuple(a) + (b, e) for (a, b), e in zip(eqs, eq_eps)]
            if rank(augmented, n + 2) > eq_rank:
                continue
            if enumerate_polyhedron(eqs, ineqs, n, eq_eps, ineq_eps).vertices:
                raise _NonGeneric("non-transverse cells meet")
            continue

        structure = enumerate_polyhedron(eqs, ineqs, n, eq_eps, ineq_eps)
        if not structure.vertices:
            continue
        if target == 0:
            x0, x1 = structure.vertices[0]
            for (g, h), k in zip(ineqs, ineq_eps):
                if h - dot(g, x0) == 0 and k - dot(g, x1) == 0:
                    raise _NonGeneric("displaced point on a cell boundary")
        else:
            base = structure.vertices[0]
            spanning = [(sub(x0, base[0]), sub(x1, base[1])) for x0, x1 in structure.vertices[1:]]
            spanning += [(r, tuple([ZERO] * n)) for r in structure.rays + structure.lineality]
            if _generic_rank(spanning, n) < target:
                raise _NonGeneric("displaced cells meet in a lower-dimensional face")

        limit = _limit_cell(eqs, ineqs, structure, n)
        if limit.dim < target:
            continue
        multiplicity = weight * abs(gcd_of_maximal_minors([primitive(a) for a in normals]))
        pieces.append(limit.with_weight(multiplicity))
    return pieces


def _limit_cell(eqs, ineqs, structure, n: int) -> PolyhedralCell:
    """eps -> 0 limit of the displaced cell, in H-representation"""
    points = sorted({x0 for x0, _ in structure.vertices})
    directions = list(structure.rays) + list(structure.lineality)
    tight, loose = [], []
    for g, h in ineqs:
        if all(dot(g, x) == h for x in points) and all(dot(g, d) == 0 for d in directions):
            tight.append((g, h))
        else:
            loose.append((g, h))
    return PolyhedralCell.build(list(eqs) + tight, loose, n)


# --------------------------------------------------------------------------
# Canonical form

def _affine_key(cell: PolyhedralCell):
    """Affine hull as (reduced direction rows, reduced normal equations)"""
    n = cell.n
    directions = tuple(tuple(r) for r in cell.directions)
    normals = nullspace(cell.directions, n) if cell.directions else nullspace([], n)
    point = cell.vertices[0]
    equations = [tuple(a) + (dot(a, point),) for a in normals]
    reduced = tuple(tuple(r) for r in rref(equations, n + 1)[0]) if equations else ()
    return directions, reduced


def _canonicalize(pieces: Sequence[PolyhedralCell], n: int, p: int) -> List[PolyhedralCell]:
    """Sum coincident cells and overlay collinear segments into maximal equal-weight pieces"""
    groups: Dict[tuple, List[PolyhedralCell]] = {}
    for cell in pieces:
        groups.setdefault(_affine_key(cell), []).append(cell)
    dim = n - p
    owners: Dict[Vector, set] = {}
    if dim == 1:
        for key, members in groups.items():
            for cell in members:
                for v in cell.vertices:
                    owners.setdefault(v, set()).add(key)
    result = []
    for key in sorted(groups):
        members = groups[key]
        if dim == 1:
            # corners of cells on other lines stay vertices
            foreign = {v for v, keys in owners.items() if keys - {key}}
            result.extend(_overlay_line(members, foreign, n))
            continue
        weights: Dict[tuple, Tuple[PolyhedralCell, int]] = {}
        for cell in members:
            stored, w = weights.get(cell.key, (cell, 0))
            weights[cell.key] = (stored, w + cell.weight)
        result.extend(c.with_weight(w) for c, w in weights.values() if w)
    return result


def _overlay_line(members: Sequence[PolyhedralCell], foreign, n: int) -> List[PolyhedralCell]:
    direction = primitive(members[0].directions[0])
    if next(x for x in direction if x != 0) < 0:
        direction = tuple(-x for x in direction)
    origin = members[0].vertices[0]
    norm2 = dot(direction, direction)

    def param(x):
        return dot(sub(x, origin), direction) / norm2

    def at(t):
        return tuple(o + t * d for o, d in zip(origin, direction))

    intervals = []
    for cell in members:
        ts = [param(v) for v in cell.vertices]
        if cell.structure.lineality:
            lo, hi = None, None
        elif cell.structure.rays:
            ray = cell.structure.rays[0]
            lo, hi = (min(ts), None) if dot(ray, direction) > 0 else (None, max(ts))
        else:
            lo, hi = min(ts), max(ts)
        intervals.append((lo, hi, cell.weight))

    breaks = sorted({t for lo, hi, _ in intervals for t in (lo, hi) if t is not None})
    bounds = [None] + breaks + [None]

    def covered(lo, hi):
        if lo is None and hi is None:
            mid = ZERO
        elif lo is None:
            mid = hi - 1
        elif hi is None:
            mid = lo + 1
        else:
            mid = (lo + hi) / 2
        return sum(w for a, b, w in intervals if (a is None or a < mid) and (b is None or mid < b))

    segments = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if lo is not None and hi is not None and lo == hi:
            continue
        weight = covered(lo, hi)
        if segments and segments[-1][2] == weight and lo is not None and at(lo) not in foreign:
            segments[-1] = (segments[-1][0], hi, weight)
        else:
            segments.append((lo, hi, weight))

    normals = nullspace([direction], n)
    equalities = [(a, dot(a, origin)) for a in normals]
    cells = []
    for lo, hi, weight in segments:
        if not weight:
            continue
        inequalities = []
        if lo is not None:
            inequalities.append((tuple(-d for d in direction), -dot(direction, at(lo))))
        if hi is not None:
            inequalities.append((direction, dot(direction, at(hi))))
        cells.append(PolyhedralCell.build(equalities, inequalities, n, weight))
    return cells


def intersection_mass(C: TropicalCycle) -> Fraction:
    """Total multiplicity of a zero-dimensional cycle"""
    if C.codim != C.n:
        raise RangeError(f"intersection mass needs codimension {C.n}, got {C.codim}")
    return Fraction(C.complex.total_weight())


def cycles_equal(C1: TropicalCycle, C2: TropicalCycle) -> bool:
    """Equality as weighted complexes after canonical merging"""
    if (C1.n, C1.codim) != (C2.n, C2.codim):
        return False

    def canonical(C):
        cells = _canonicalize(list(C.cells), C.n, C.codim) if C.cells else []
        return sorted((c.key, c.weight) for c in cells)

    return canonical(C1) == canonical(C2)
