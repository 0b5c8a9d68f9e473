"""
Brute-force oracles used to regenerate golden values: mixed volumes by
inclusion-exclusion, superform wedges in the Grassmann algebra, Monge-Ampere
masses from the gradient image, and capacities on finer grids.
"""

import logging
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import List, Sequence, Tuple

from capacity import CapacityProblem, capacity, fine_grid_oracle
from config import ORACLE_REFINEMENT
from errors import DimensionMismatchError, RangeError
from exact_geometry import affine_dimension, convex_hull, mixed_volume, volume
from exact_linalg import Vector, solve, sub
from hessian_measures import SymmetricMatrix, superform_wedge_oracle
from tropical import TropicalPolynomial, evaluate, newton_polytope, subdifferential_at

logger = logging.getLogger(__name__)


def mixed_volume_oracle(*factors) -> Fraction:
    """MV of the Newton polytopes (or polytopes) given, normalized so MV(P..P) = n! Vol(P)"""
    polytopes = [newton_polytope(f) if isinstance(f, TropicalPolynomial) else f for f in factors]
    if not polytopes:
        raise RangeError("mixed volume of nothing")
    n = polytopes[0].n
    if len(polytopes) != n or any(P.n != n for P in polytopes):
        raise DimensionMismatchError(f"need exactly {n} polytopes in R^{n}")
    return mixed_volume(*polytopes)


def superform_wedge(matrices: Sequence[SymmetricMatrix], beta_power: int) -> Fraction:
    return superform_wedge_oracle(matrices, beta_power)


def _candidate_vertices(f: TropicalPolynomial) -> List[Vector]:
    """Points where n+1 affinely independent terms tie and dominate every other term"""
    n = f.n
    coeffs = f.coeffs
    found = set()
    for subset in combinations(f.support, n + 1):
        if affine_dimension(subset) < n:
            continue
        a0 = subset[0]
        rows = [sub(a, a0) for a in subset[1:]]
        rhs = [coeffs[a] - coeffs[a0] for a in subset[1:]]
        x = solve(rows, rhs)
        if x is None:
            continue
        top = evaluate(f, x)
        if -coeffs[a0] + sum(Fraction(c) * v for c, v in zip(a0, x)) == top:
            found.add(x)
    return sorted(found)


def gradient_image_atoms(f: TropicalPolynomial) -> List[Tuple[Vector, Fraction]]:
    """n! Lebesgue measure of the subdifferential at every vertex of the corner locus"""
    n = f.n
    atoms = []
    for x in _candidate_vertices(f):
        image = convex_hull(subdifferential_at(f, x))
        atoms.append((x, factorial(n) * volume(image)))
    logger.debug("gradient-image oracle: %d atoms for %s", len(atoms), f)
    return atoms


def gradient_image_volume(f: TropicalPolynomial) -> Fraction:
    """Total Monge-Ampere mass; equals n! Vol(Newt f) when the Newton polytope is full-dimensional"""
    return sum((mass for _, mass in gradient_image_atoms(f)), Fraction(0))


def capacity_oracle(prob: CapacityProblem, refinement: int = ORACLE_REFINEMENT, **kwargs) -> float:
    """Sparse Laplace solve for order one, otherwise the sweep solver on a refined grid"""
    if prob.order == 1:
        return fine_grid_oracle(prob, refinement)
    return capacity(prob.refined(refinement), **kwargs).value


ORACLES = {
    'mixed-volume': mixed_volume_oracle,
    'superform-wedge': superform_wedge,
    'gradient-image': gradient_image_volume,
    'capacity': capacity_oracle,
}
