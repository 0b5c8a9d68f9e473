"""
m-positivity, complex-Hessian-type measures of sampled functions and of
piecewise-linear convex functions, and the mollification experiments.

Normalization: a (1,1)-superform sum a_ij dx_i ^ dxi_j is identified with the
symmetric matrix (a_ij); beta is the identity. Wedges are reported as the
coefficient of dx ^ dxi with the sign (-1)^{n(n-1)/2} folded in, so that
(dd#u)^m ^ beta^{n-m} has density m!(n-m)! sigma_m(D^2 u).
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from config import CONVERGENCE_HS, M_POSITIVE_TOL_SCALE, MOLLIFIER_EXPONENT
from errors import (DegreeMismatchError, DimensionMismatchError, NotMSubharmonicError,
                    NumericalError, RangeError)
from exact_geometry import convex_hull, hausdorff_measure, volume
from exact_linalg import Vector, det, dot, solve, sub, to_vector
from grids import (AffineSubspace, Box, GridFunction, finite_difference_hessian,
                   inside_box, make_box, midpoint_integral, trapezoid_weights)
from polyhedra import PolyhedralCell
from tropical import TropicalPolynomial, skeleton

logger = logging.getLogger(__name__)

MatrixLike = Union['SymmetricMatrix', Sequence[Sequence], np.ndarray]


@dataclass(frozen=True)
class SymmetricMatrix:
    """Symmetric n x n matrix stored as its upper triangle (row-major)"""
    n: int
    upper: Tuple

    @staticmethod
    def from_rows(rows) -> 'SymmetricMatrix':
        rows = [list(r) for r in rows]
        n = len(rows)
        for r in rows:
            if len(r) != n:
                raise DimensionMismatchError("matrix is not square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise RangeError(f"matrix is not symmetric at ({i}, {j})")
        return SymmetricMatrix(n, tuple(rows[i][j] for i in range(n) for j in range(i, n)))

    @staticmethod
    def diagonal(entries) -> 'SymmetricMatrix':
        n = len(entries)
        return SymmetricMatrix.from_rows([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def identity(n: int) -> 'SymmetricMatrix':
        return SymmetricMatrix.diagonal([1] * n)

    def __getitem__(self, index):
        i, j = sorted(index)
        return self.upper[i * self.n - i * (i - 1) // 2 + (j - i)]

    def rows(self) -> List[List]:
        return [[self[i, j] for j in range(self.n)] for i in range(self.n)]

    def to_array(self) -> np.ndarray:
        return np.array(self.rows(), dtype=float)


class SuperformConstant(NamedTuple):
    m: int
    n: int
    value: int


def _rows(M: MatrixLike):
    if isinstance(M, SymmetricMatrix):
        return M.rows()
    return M


def _is_exact(M) -> bool:
    return not isinstance(M, np.ndarray) and all(
        isinstance(x, (int, Fraction)) for row in M for x in row)


# --------------------------------------------------------------------------
# Superform algebra

def _wedge_monomials(left: Dict[tuple, Fraction], right: Dict[tuple, Fraction]) -> Dict[tuple, Fraction]:
    """Product in the exterior algebra on dx_1..dx_n, dxi_1..dxi_n (all anticommuting)"""
    out: Dict[tuple, Fraction] = {}
    for a, ca in left.items():
        for b, cb in right.items():
            if set(a) & set(b):
                continue
            word = a + b
            inversions = sum(1 for i in range(len(word)) for j in range(i + 1, len(word)) if word[i] > word[j])
            key = tuple(sorted(word))
            out[key] = out.get(key, Fraction(0)) + (-1) ** inversions * ca * cb
    return {k: v for k, v in out.items() if v != 0}


def _one_one_form(rows, n: int) -> Dict[tuple, Fraction]:
    # generator i is dx_{i+1}, generator n+j is dxi_{j+1}
    return {(i, n + j): Fraction(rows[i][j]) for i in range(n) for j in range(n) if rows[i][j] != 0}


def superform_wedge_oracle(matrices: Sequence[MatrixLike], beta_power: int) -> Fraction:
    """Brute-force coefficient of dx ^ dxi in M_1 ^ ... ^ M_k ^ beta^beta_power, times C_n"""
    if not matrices and beta_power == 0:
        raise DegreeMismatchError("empty wedge")
    rows_list = [_rows(M) for M in matrices]
    n = len(rows_list[0]) if rows_list else beta_power
    if len(rows_list) + beta_power != n:
        raise DegreeMismatchError(f"{len(rows_list)} factors and beta^{beta_power} do not make an (n,n)-form in dimension {n}")
    identity = [[int(i == j) for j in range(n)] for i in range(n)]
    product_form: Dict[tuple, Fraction] = {(): Fraction(1)}
    for rows in rows_list + [identity] * beta_power:
        if len(rows) != n:
            raise DimensionMismatchError("factors of different sizes")
        product_form = _wedge_monomials(product_form, _one_one_form(rows, n))
    top = product_form.get(tuple(range(2 * n)), Fraction(0))
    return top * (-1) ** (n * (n - 1) // 2)


def mixed_wedge(matrices: Sequence, beta_power: int):
    """Same quantity as the oracle by polarization of det; accepts (..., n, n) arrays"""
    factors = [_rows(M) for M in matrices]
    if factors:
        n = len(factors[0]) if _is_exact(factors[0]) else np.shape(factors[0])[-1]
    else:
        n = beta_power
    if len(factors) + beta_power != n:
        raise DegreeMismatchError(f"{len(factors)} factors and beta^{beta_power} in dimension {n}")
    if all(_is_exact(M) for M in factors):
        identity = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        factors = [[[Fraction(x) for x in row] for row in M] for M in factors] + [identity] * beta_power
        total = Fraction(0)
        for size in range(1, n + 1):
            for subset in combinations(range(n), size):
                summed = [[sum(factors[k][i][j] for k in subset) for j in range(n)] for i in range(n)]
                total += (-1) ** (n - size) * det(summed)
        return total
    arrays = [np.asarray(M, dtype=float) for M in factors]
    shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else (n, n)
    arrays = [np.broadcast_to(a, shape) for a in arrays] + [np.broadcast_to(np.eye(n), shape)] * beta_power
    total = np.zeros(shape[:-2])
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            total = total + (-1) ** (n - size) * np.linalg.det(sum(arrays[k] for k in subset))
    return total


@lru_cache(maxsize=None)
def superform_constant(m: int, n: int) -> SuperformConstant:
    """m!(n-m)!, checked against the brute-force wedge of identities"""
    if not 0 <= m <= n:
        raise RangeError(f"m={m} outside [0, {n}]")
    value = factorial(m) * factorial(n - m)
    identity = SymmetricMatrix.identity(n)
    oracle = superform_wedge_oracle([identity] * m, n - m)
    if oracle != value * comb(n, m):
        raise NumericalError(f"superform normalization drifted: {oracle} != {value} * C({n},{m})")
    return SuperformConstant(m, n, value)


def sigma_k(M, k: int):
    """k-th elementary symmetric function of the eigenvalues as a sum of principal minors.

    Works on exact rows (Fraction result) and on (..., n, n) float arrays.
    """
    rows = _rows(M)
    if _is_exact(rows):
        n = len(rows)
        if not 0 <= k <= n:
            raise RangeError(f"sigma_{k} of a {n}x{n} matrix")
        if k == 0:
            return Fraction(1)
        return sum((det([[rows[i][j] for j in idx] for i in idx]) for idx in combinations(range(n), k)),
                   Fraction(0))
    arr = np.asarray(rows, dtype=float)
    n = arr.shape[-1]
    if not 0 <= k <= n:
        raise RangeError(f"sigma_{k} of a {n}x{n} matrix")
    if k == 0:
        return np.ones(arr.shape[:-2])
    total = np.zeros(arr.shape[:-2])
    for idx in combinations(range(n), k):
        block = arr[..., list(idx), :][..., :, list(idx)]
        total = total + np.linalg.det(block)
    return total


def default_tolerance(sigma1):
    return M_POSITIVE_TOL_SCALE * (1 + np.abs(sigma1))


def is_m_positive(M, m: int, tol: Optional[float] = None) -> bool:
    """Gamma_m cone test: sigma_j(M) >= -tol for j = 1..m"""
    rows = _rows(M)
    n = len(rows)
    if not 1 <= m <= n:
        raise RangeError(f"m={m} outside [1, {n}]")
    if tol is None:
        tol = default_tolerance(float(sigma_k(rows, 1)))
    return all(sigma_k(rows, j) >= -tol for j in range(1, m + 1))


class SubharmonicReport(NamedTuple):
    ok: bool
    violations: List[Tuple[Tuple[int, ...], Tuple[float, ...], int, float]]  # node, point, j, sigma_j


def _gamma_violations(hess: np.ndarray, m: int, tol: Optional[float]) -> np.ndarray:
    """First failing j per node (0 where the node passes)"""
    sig1 = sigma_k(hess, 1)
    threshold = default_tolerance(sig1) if tol is None else tol
    first_bad = np.zeros(hess.shape[:-2], dtype=int)
    for j in range(m, 0, -1):
        bad = sigma_k(hess, j) < -threshold
        first_bad[bad] = j
    return first_bad


def is_m_subharmonic(u: GridFunction, m: int, tol: Optional[float] = None) -> SubharmonicReport:
    """Central-difference Hessians at interior nodes must all lie in Gamma_m"""
    if not 1 <= m <= u.n:
        raise RangeError(f"m={m} outside [1, {u.n}]")
    hess = u.hessian()
    first_bad = _gamma_violations(hess, m, tol)
    violations = []
    if np.any(first_bad):
        points = u.points()
        for idx in zip(*np.nonzero(first_bad)):
            node = tuple(int(i) + 1 for i in idx)
            j = int(first_bad[idx])
            violations.append((node, tuple(float(x) for x in points[node]), j, float(sigma_k(hess[idx], j))))
        logger.info("%d interior nodes fail the Gamma_%d test", len(violations), m)
    return SubharmonicReport(not violations, violations)


# --------------------------------------------------------------------------
# Mollification

def mollifier_kernel(h: float, spacing: Sequence[float]) -> np.ndarray:
    """Discrete radial bump (1 - |x/h|^2)^3 on the grid, normalized to unit sum"""
    radii = [int(np.floor(h / g)) for g in spacing]
    axes = [np.arange(-r, r + 1) * g for r, g in zip(radii, spacing)]
    mesh = np.meshgrid(*axes, indexing='ij')
    r2 = sum(x ** 2 for x in mesh) / h ** 2
    kernel = np.where(r2 < 1, (1 - np.minimum(r2, 1)) ** MOLLIFIER_EXPONENT, 0.0)
    return kernel / kernel.sum()


def mollify(u: GridFunction, h: float) -> GridFunction:
    """u * eta_h on the h-interior of the box"""
    spacing = u.spacing
    if h < max(spacing):
        raise RangeError(f"mollifier radius {h} below the grid spacing {max(spacing)}")
    kernel = mollifier_kernel(h, spacing)
    margins = [k // 2 for k in kernel.shape]
    if any(r - 2 * k < 3 for r, k in zip(u.resolution, margins)):
        raise RangeError(f"mollifier radius {h} too large for the box")
    smooth = fftconvolve(u.values, kernel, mode='valid')
    cropped = u.crop(margins)
    return cropped.with_values(smooth)


# --------------------------------------------------------------------------
# Measures

@dataclass(frozen=True)
class HessianMeasure:
    """Density part on a grid, point atoms and masses spread over polyhedral cells"""
    n: int
    m: int
    density: Optional[GridFunction] = None
    atoms: Tuple[Tuple[Vector, Fraction], ...] = ()
    cell_masses: Tuple[Tuple[PolyhedralCell, sympy.Expr], ...] = field(default=(), compare=False)

    def density_mass(self, weight: Optional[np.ndarray] = None) -> float:
        if self.density is None:
            return 0.0
        values = self.density.values if weight is None else self.density.values * weight
        return midpoint_integral(values, self.density.spacing)

    def total_mass(self):
        """Exact (sympy) when there is no density part; may be oo for unbounded cells"""
        exact = sum((sympy.Rational(mass) for _, mass in self.atoms), sympy.Integer(0))
        for cell, density in self.cell_masses:
            exact += density * hausdorff_measure(cell, self.n - self.m).value
        if self.density is None:
            return exact
        return float(exact) + self.density_mass()

    def mass_in_box(self, box):
        box = make_box(box)
        exact = sum((sympy.Rational(mass) for point, mass in self.atoms
                     if all(a <= x <= b for x, (a, b) in zip(point, box))), sympy.Integer(0))
        for cell, density in self.cell_masses:
            clipped = cell.intersect(_box_cell(box, self.n))
            if not clipped.is_empty:
                exact += density * hausdorff_measure(clipped, self.n - self.m).value
        if self.density is None:
            return sympy.simplify(exact)
        inside = inside_box(self.density.points(), box)
        return float(exact) + self.density_mass(inside.astype(float))

    def integrate(self, test: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of a test function; atoms exactly, density by quadrature"""
        if self.cell_masses:
            raise RangeError("test-function integrals are not available for cell masses")
        total = sum(float(mass) * float(test(np.array([[float(x) for x in point]]))[0])
                    for point, mass in self.atoms)
        if self.density is not None:
            total += self.density_mass(test(self.density.points()))
        return total

    def negative_mass(self) -> float:
        if self.density is None:
            return 0.0
        return -midpoint_integral(np.minimum(self.density.values, 0), self.density.spacing)


def _box_cell(box: Box, n: int) -> PolyhedralCell:
    ineqs = []
    for i, (a, b) in enumerate(box):
        e = [0] * n
        e[i] = 1
        ineqs.append((tuple(e), b))
        ineqs.append((tuple(-x for x in e), -a))
    return PolyhedralCell.build([], ineqs, n)


def _check_subharmonic(u: GridFunction, m: int, tol: Optional[float], name: str = 'u'):
    report = is_m_subharmonic(u, m, tol)
    if not report.ok:
        node, point, j, value = report.violations[0]
        raise NotMSubharmonicError(
            f"{name} is not {m}-subharmonic at {len(report.violations)} nodes "
            f"(first: node {node}, sigma_{j} = {value:.3g})", report.violations)


def _pad(interior: np.ndarray) -> np.ndarray:
    return np.pad(interior, 1, mode='edge')


def hessian_measure_smooth(u: GridFunction, m: int, tol: Optional[float] = None,
                           check: bool = True) -> HessianMeasure:
    """(dd#u)^m ^ beta^{n-m} with density m!(n-m)! sigma_m(D^2 u)"""
    n = u.n
    if not 1 <= m <= n:
        raise RangeError(f"m={m} outside [1, {n}]")
    if check:
        _check_subharmonic(u, m, tol)
    constant = superform_constant(m, n).value
    density = constant * sigma_k(u.hessian(), m)
    return HessianMeasure(n, m, density=u.with_values(_pad(density)))


def mixed_hessian_measure(u: GridFunction, v: GridFunction, m: int, k: int,
                          tol: Optional[float] = None, check: bool = True) -> HessianMeasure:
    """(dd#u)^k ^ (dd#v)^{m-k} ^ beta^{n-m} on a common grid"""
    if u.box != v.box or u.resolution != v.resolution:
        raise DimensionMismatchError("mixed measure needs both factors on the same grid")
    n = u.n
    if not 1 <= m <= n or not 0 <= k <= m:
        raise RangeError(f"mixed measure with m={m}, k={k} in dimension {n}")
    if check:
        _check_subharmonic(u, m, tol, 'u')
        _check_subharmonic(v, m, tol, 'v')
    hu, hv = u.hessian(), v.hessian()
    density = mixed_wedge([hu] * k + [hv] * (m - k), n - m)
    return HessianMeasure(n, m, density=u.with_values(_pad(density)))


def _pl_atoms(points: Sequence[Sequence], offsets: Sequence) -> List[Tuple[Vector, Fraction]]:
    """Monge-Ampere atoms of x -> max_i(points_i . x - offsets_i): n! vol of each dual cell"""
    points = [to_vector(p) for p in points]
    offsets = [Fraction(c) for c in offsets]
    n = len(points[0])
    base = convex_hull(points)
    if base.dim < n:
        return []
    lifted = [p + (-c,) for p, c in zip(points, offsets)]
    lifted_hull = convex_hull(lifted)
    if lifted_hull.dim == n:
        cells = [list(range(len(points)))]
    else:
        cells = []
        for normal, offset in lifted_hull.facets:
            if normal[-1] > 0:
                cells.append([i for i, q in enumerate(lifted) if dot(normal, q) == offset])
    atoms = []
    for members in cells:
        cell = convex_hull([points[i] for i in members])
        i0 = members[0]
        rows = [sub(points[i], points[i0]) for i in members[1:]]
        rhs = [offsets[i] - offsets[i0] for i in members[1:]]
        vertex = solve(rows, rhs)
        atoms.append((vertex, factorial(n) * volume(cell)))
    return sorted(atoms)


def pl_monge_ampere(f: TropicalPolynomial, m: Optional[int] = None) -> HessianMeasure:
    """(dd#f)^m ^ beta^{n-m} of a tropical polynomial.

    m = n gives atoms at the vertices of the hypersurface; m < n spreads mass
    m!(n-m)! Vol_m(dual m-face) per unit (n-m)-area over the codim-m skeleton.
    """
    n = f.n
    m = n if m is None else m
    if not 1 <= m <= n:
        raise RangeError(f"m={m} outside [1, {n}]")
    if m == n:
        atoms = _pl_atoms(f.support, [f.coeffs[a] for a in f.support])
        return HessianMeasure(n, m, atoms=tuple(atoms))
    constant = superform_constant(m, n).value
    cells = []
    for cell, face in skeleton(f, m):
        face_volume = hausdorff_measure(face, m).value
        cells.append((cell, constant * face_volume))
    return HessianMeasure(n, m, cell_masses=tuple(cells))


# --------------------------------------------------------------------------
# Restriction to a linear variety

class RestrictionResult(NamedTuple):
    lhs: float
    rhs: float


def restrict_to_variety(u: GridFunction, V: AffineSubspace, m: int, p: int,
                        G=None, resolution: int = 33) -> RestrictionResult:
    """[V] ^ beta^{n-m} ^ (dd#u)^{m-p} over G against (i*beta)^{n-m} ^ (dd# i*u)^{m-p} over G cap V"""
    n = u.n
    if V.n != n:
        raise DimensionMismatchError(f"subspace in R^{V.n} for a function on R^{n}")
    if V.codim != p:
        raise RangeError(f"subspace has codimension {V.codim}, expected {p}")
    if not 0 <= p <= m <= n:
        raise RangeError(f"need 0 <= p <= m <= n, got p={p}, m={m}, n={n}")
    G = u.box if G is None else make_box(G)
    params, points, inside, spacing = V.grid(G, resolution)
    if not np.any(inside):
        return RestrictionResult(0.0, 0.0)
    degree = m - p
    d = V.dim

    # left side: ambient Hessian interpolated onto V, normals of V as rank-one forms
    tangent, normal = V.frame()
    hess = u.hessian()
    interior_axes = [ax[1:-1] for ax in u.axes]
    lo = np.array([ax[0] for ax in interior_axes])
    hi = np.array([ax[-1] for ax in interior_axes])
    clipped = np.clip(points, lo, hi)
    hess_on_v = np.empty(points.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(n):
            interp = RegularGridInterpolator(interior_axes, hess[..., i, j])
            hess_on_v[..., i, j] = interp(clipped)
    normal_forms = [np.outer(nu, nu) for nu in normal]
    lhs_density = mixed_wedge(normal_forms + [hess_on_v] * degree, n - m)

    # right side: finite differences of the restriction i*u
    if d == 0:
        # V is a point: both sides are the unit point mass
        return RestrictionResult(float(np.ravel(lhs_density)[0]), 1.0)
    interp_u = RegularGridInterpolator(u.axes, u.values, method='cubic')
    restricted = interp_u(np.clip(points, [ax[0] for ax in u.axes], [ax[-1] for ax in u.axes]))
    if degree:
        rhs_interior = sigma_k(finite_difference_hessian(restricted, spacing), degree)
        rhs_density = _pad(rhs_interior) * factorial(degree) * factorial(n - m)
    else:
        rhs_density = np.full(restricted.shape, float(factorial(n - m)))
    weights = trapezoid_weights(params.shape[:-1], spacing) * inside
    lhs = float(np.sum(lhs_density * weights))
    rhs = float(np.sum(rhs_density * weights))
    logger.debug("restriction to V (dim %d): lhs=%.6g rhs=%.6g", d, lhs, rhs)
    return RestrictionResult(lhs, rhs)


# --------------------------------------------------------------------------
# Convergence of mollified measures

def bump_density(center: Sequence[float], radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth compactly supported test density max(0, 1 - |x-c|^2/r^2)^3"""
    c = np.asarray(center, dtype=float)

    def psi(points: np.ndarray) -> np.ndarray:
        r2 = np.sum((points - c) ** 2, axis=-1) / radius ** 2
        return np.maximum(0.0, 1 - r2) ** 3
    return psi


class ConvergenceRow(NamedTuple):
    h: float
    total: float
    tests: Tuple[float, ...]
    negative_mass: float
    deviation: Optional[float]     # change of the first test mass since the previous h


def default_test_densities(n: int):
    return (bump_density([0.0] * n, 0.8), bump_density([0.3] + [0.0] * (n - 1), 0.5))


def convergence_experiment(u: GridFunction, m: int, hs: Sequence[float] = CONVERGENCE_HS,
                           v: Optional[GridFunction] = None, k: Optional[int] = None,
                           tests=None) -> List[ConvergenceRow]:
    """Masses of (dd# u*eta_h)^m ^ beta^{n-m} (or the mixed measure with v) for shrinking h"""
    hs = [float(h) for h in hs]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise RangeError("mollifier radii must be strictly decreasing")
    tests = default_test_densities(u.n) if tests is None else tests
    rows = []
    previous = None
    for h in hs:
        smooth = mollify(u, h)
        if v is None:
            measure = hessian_measure_smooth(smooth, m, check=False)
        else:
            measure = mixed_hessian_measure(smooth, mollify(v, h), m, m // 2 if k is None else k, check=False)
        masses = tuple(measure.integrate(t) for t in tests)
        deviation = None if previous is None else abs(masses[0] - previous)
        previous = masses[0]
        rows.append(ConvergenceRow(h, measure.total_mass(), masses, measure.negative_mass(), deviation))
        logger.info("h=%.4g: total=%.6g tests=%s", h, rows[-1].total, masses)
    return rows


def sample_tropical(f: TropicalPolynomial, box, resolution) -> GridFunction:
    """Float samples of a tropical polynomial on a grid"""
    alphas = np.array([[float(a) for a in alpha] for alpha in f.support])
    offsets = np.array([float(f.coeffs[alpha]) for alpha in f.support])

    def evaluate_points(points):
        return np.max(points @ alphas.T - offsets, axis=-1)
    return GridFunction.from_function(evaluate_points, box, resolution)
