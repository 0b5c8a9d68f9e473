"""
Relative capacity of a compact set K in a domain D for m-subharmonic functions,
optionally along an affine subspace or the affine pieces of a tropical cycle.

The extremal function is computed by a projected sweep: start at -1 on the
free nodes and repeatedly raise each node to the largest value that keeps its
discrete Hessian in the Gamma_m cone (and below 0). The capacity is the mass of
(dd#(1+u))^m ^ beta^{n-m} carried by K.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb, factorial
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from config import (BISECTION_STEPS, CANDIDATE_DIRECTIONS, CAPACITY_MARGIN, CAPACITY_MAX_ITER, CAPACITY_TOL,
                    GRID_RESOLUTION, ORACLE_REFINEMENT, QUASI_EPS, QUASI_K_MAX, SWEEP_ORDER)
from errors import ConvergenceError, DimensionMismatchError, InputError, RangeError
from exact_geometry import convex_hull, volume
from exact_linalg import Vector, to_fraction, to_vector
from grids import AffineSubspace, Box, GridFunction, finite_difference_hessian, make_box
from hessian_measures import mollify, sigma_k, superform_constant
from polyhedra import PolyhedralCell

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Sets

@dataclass(frozen=True)
class Domain:
    """Open box or ball D"""
    kind: str
    box: Box                               # the box itself, or the bounding box of the ball
    center: Optional[Vector] = None
    radius: Optional[Fraction] = None

    @staticmethod
    def box_domain(bounds) -> 'Domain':
        return Domain('box', make_box(bounds))

    @staticmethod
    def ball_domain(center, radius) -> 'Domain':
        center = to_vector(center)
        radius = to_fraction(radius)
        if radius <= 0:
            raise RangeError("ball radius must be positive")
        return Domain('ball', make_box([(c - radius, c + radius) for c in center]), center, radius)

    @property
    def n(self) -> int:
        return len(self.box)

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        if self.kind == 'ball':
            c = np.array([float(x) for x in self.center])
            return np.sum((points - c) ** 2, axis=-1) <= float(self.radius) ** 2 + tol
        inside = np.ones(points.shape[:-1], dtype=bool)
        for k, (a, b) in enumerate(self.box):
            inside &= (points[..., k] >= float(a) - tol) & (points[..., k] <= float(b) + tol)
        return inside

    def support(self, direction: Sequence[Fraction], point: Sequence[Fraction]) -> Fraction:
        """Rational upper bound for max over D of direction . (x - point)"""
        if self.kind == 'box':
            return sum((max(d * (a - p), d * (b - p)) for d, (a, b), p in zip(direction, self.box, point)),
                       Fraction(0))
        shift = sum((d * (c - p) for d, c, p in zip(direction, self.center, point)), Fraction(0))
        norm = float(sum(d * d for d in direction)) ** 0.5
        # round the irrational part up so the bound stays valid
        return shift + Fraction(float(self.radius) * norm * (1 + 1e-12)).limit_denominator(10 ** 9) + Fraction(1, 10 ** 9)


@dataclass(frozen=True)
class MaskSpec:
    """Union of closed boxes, closed balls and single points (nearest grid node)"""
    boxes: Tuple[Box, ...] = ()
    balls: Tuple[Tuple[Vector, Fraction], ...] = ()
    points: Tuple[Vector, ...] = ()

    @staticmethod
    def box(bounds) -> 'MaskSpec':
        return MaskSpec(boxes=(make_box(bounds),))

    @staticmethod
    def ball(center, radius) -> 'MaskSpec':
        return MaskSpec(balls=((to_vector(center), to_fraction(radius)),))

    @staticmethod
    def point(x) -> 'MaskSpec':
        return MaskSpec(points=(to_vector(x),))

    def union(self, other: 'MaskSpec') -> 'MaskSpec':
        return MaskSpec(self.boxes + other.boxes, self.balls + other.balls, self.points + other.points)

    @property
    def is_empty(self) -> bool:
        return not (self.boxes or self.balls or self.points)

    def evaluate(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        mask = np.zeros(points.shape[:-1], dtype=bool)
        for box in self.boxes:
            inside = np.ones_like(mask)
            for k, (a, b) in enumerate(box):
                inside &= (points[..., k] >= float(a) - tol) & (points[..., k] <= float(b) + tol)
            mask |= inside
        for center, radius in self.balls:
            c = np.array([float(x) for x in center])
            mask |= np.sum((points - c) ** 2, axis=-1) <= float(radius) ** 2 + tol
        for x in self.points:
            distance = np.sum((points - np.array([float(v) for v in x])) ** 2, axis=-1)
            mask[np.unravel_index(np.argmin(distance), mask.shape)] = True
        return mask


@dataclass(frozen=True)
class CapacityProblem:
    domain: Domain
    K: MaskSpec
    m: int
    V: Optional[AffineSubspace] = None
    resolution: Optional[int] = None
    k_mask: Optional[np.ndarray] = field(default=None, compare=False, repr=False)   # explicit node mask
    piece: Optional[PolyhedralCell] = field(default=None, compare=False)           # restrict K to a cell

    def __post_init__(self):
        n = self.domain.n
        if self.V is not None and self.V.n != n:
            raise DimensionMismatchError(f"subspace in R^{self.V.n}, domain in R^{n}")
        if not 1 <= self.m <= n:
            raise RangeError(f"m={self.m} outside [1, {n}]")
        if self.m - self.p < 1:
            raise RangeError(f"need m - p >= 1, got m={self.m}, p={self.p}")

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def p(self) -> int:
        return 0 if self.V is None else self.V.codim

    @property
    def dim(self) -> int:
        return self.n - self.p

    @property
    def order(self) -> int:
        """Hessian order of the problem on V"""
        return self.m - self.p

    def grid_resolution(self) -> int:
        return self.resolution or GRID_RESOLUTION.get(self.dim, 17)

    def refined(self, factor: int) -> 'CapacityProblem':
        return CapacityProblem(self.domain, self.K, self.m, self.V,
                               (self.grid_resolution() - 1) * factor + 1, None, self.piece)

    def with_k(self, K: MaskSpec) -> 'CapacityProblem':
        return CapacityProblem(self.domain, K, self.m, self.V, self.resolution, None, self.piece)


class _Discretization(NamedTuple):
    grid: GridFunction        # zero function carrying box/resolution (parameter coordinates on V)
    points: np.ndarray        # ambient coordinates of the nodes
    spacing: float
    in_domain: np.ndarray
    k_mask: np.ndarray
    free: np.ndarray


def _discretize(prob: CapacityProblem) -> _Discretization:
    resolution = prob.grid_resolution()
    box = prob.domain.box
    centre = [(a + b) / 2 for a, b in box]
    if prob.V is None:
        half = max((b - a) / 2 for a, b in box)
        cube = make_box([(c - half, c + half) for c in centre])
        grid = GridFunction(cube, (resolution,) * prob.n, np.zeros((resolution,) * prob.n))
        points = grid.points()
    else:
        tangent, _ = prob.V.frame()
        base = np.array([float(x) for x in prob.V.base])
        corners = np.array(list(product(*[[float(a), float(b)] for a, b in box])))
        coords = (corners - base) @ tangent.T
        lo, hi = coords.min(axis=0), coords.max(axis=0)
        mid = (lo + hi) / 2
        half = Fraction(float(np.max(hi - lo)) / 2).limit_denominator(10 ** 6) + Fraction(1, 10 ** 6)
        cube = make_box([(Fraction(c).limit_denominator(10 ** 6) - half, Fraction(c).limit_denominator(10 ** 6) + half)
                         for c in mid])
        grid = GridFunction(cube, (resolution,) * prob.dim, np.zeros((resolution,) * prob.dim))
        points = base + grid.points() @ tangent
    spacing = grid.spacing[0]
    in_domain = prob.domain.contains(points)
    if prob.k_mask is not None:
        if prob.k_mask.shape != in_domain.shape:
            raise DimensionMismatchError(f"mask of shape {prob.k_mask.shape} on a {in_domain.shape} grid")
        k_mask = prob.k_mask.astype(bool)
    else:
        k_mask = prob.K.evaluate(points)
        if not prob.K.is_empty and not k_mask.any():
            raise RangeError("K contains no grid node; refine the grid")
    if prob.piece is not None:
        k_mask = k_mask & prob.piece.contains_points(points, tol=spacing * 1e-6)
    structure = np.ones((3,) * grid.n, dtype=bool)
    interior = ndimage.binary_erosion(in_domain, structure=structure, border_value=0)
    core = ndimage.binary_erosion(in_domain, structure=structure, iterations=CAPACITY_MARGIN, border_value=0)
    if np.any(k_mask & ~core):
        raise RangeError(f"K must stay {CAPACITY_MARGIN} nodes inside D")
    return _Discretization(grid, points, spacing, in_domain, k_mask, interior & ~k_mask)


# --------------------------------------------------------------------------
# Extremal function

@dataclass(frozen=True)
class ExtremalFunction:
    u: GridFunction
    residual: float
    iterations: int
    converged: bool
    k_mask: np.ndarray = field(compare=False, repr=False)
    in_domain: np.ndarray = field(compare=False, repr=False)
    points: np.ndarray = field(compare=False, repr=False)


def _color_masks(free: np.ndarray, sweep: str) -> List[np.ndarray]:
    if sweep == 'jacobi':
        return [free]
    if sweep != 'red-black':
        raise RangeError(f"unknown sweep order {sweep!r}")
    # parity colouring per axis: no two nodes of one colour share a 3^n stencil
    index = np.indices(free.shape)
    masks = []
    for parity in product((0, 1), repeat=free.ndim):
        mask = np.ones(free.shape, dtype=bool)
        for axis, bit in enumerate(parity):
            mask &= index[axis] % 2 == bit
        masks.append(free & mask)
    return [m for m in masks if m.any()]


def _node_targets(u: np.ndarray, group: np.ndarray, spacing: float, order: int) -> np.ndarray:
    """Largest admissible value at each node of `group` given its neighbours"""
    d = u.ndim
    hess = finite_difference_hessian(u, [spacing] * d)
    inner = group[tuple(slice(1, -1) for _ in range(d))]
    A = hess[inner] + (2 * u[group] / spacing ** 2)[:, None, None] * np.eye(d)
    if order == 1:
        return spacing ** 2 * np.trace(A, axis1=-2, axis2=-1) / (2 * d)
    sig = [sigma_k(A, i) for i in range(order + 1)]
    lo = -np.sqrt(np.sum(A ** 2, axis=(-2, -1))) - 1.0
    hi = sig[1] / d
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        feasible = np.ones_like(mid, dtype=bool)
        for j in range(1, order + 1):
            shifted = sum(sig[i] * (-mid) ** (j - i) * comb(d - i, j - i) for i in range(j + 1))
            feasible &= shifted >= 0
        lo = np.where(feasible, mid, lo)
        hi = np.where(feasible, hi, mid)
    return spacing ** 2 * lo / 2


def relative_extremal(prob: CapacityProblem, tol: float = CAPACITY_TOL, max_iter: int = CAPACITY_MAX_ITER,
                      sweep: str = SWEEP_ORDER, strict: bool = False,
                      callback: Optional[Callable[[int, np.ndarray], None]] = None) -> ExtremalFunction:
    """Discrete relative extremal function of (K, D) for the order m - p on V

    `callback(iteration, u)` sees the iterate after every sweep; u must not be modified.
    """
    disc = _discretize(prob)
    u = np.zeros(disc.in_domain.shape)
    u[disc.free | disc.k_mask] = -1.0
    groups = _color_masks(disc.free, sweep)
    change = 0.0
    iterations = 0
    converged = not groups
    for iterations in range(1, max_iter + 1):
        change = 0.0
        for group in groups:
            target = _node_targets(u, group, disc.spacing, prob.order)
            new = np.maximum(u[group], np.minimum(target, 0.0))
            change = max(change, float(np.max(new - u[group])))
            u[group] = new
        if callback is not None:
            callback(iterations, u)
        if iterations % 500 == 0:
            logger.debug("sweep %d: sup change %.3e", iterations, change)
        if change < tol:
            converged = True
            break
    result = ExtremalFunction(disc.grid.with_values(u), change, iterations, converged,
                              disc.k_mask, disc.in_domain, disc.points)
    if not converged:
        logger.warning("extremal iteration stopped after %d sweeps, sup change %.3e", iterations, change)
        if strict:
            raise ConvergenceError(f"no convergence in {max_iter} sweeps (change {change:.3e})", result)
    else:
        logger.info("extremal function converged in %d sweeps", iterations)
    return result


# --------------------------------------------------------------------------
# Masses

def laplacian_mass(u: np.ndarray, k_mask: np.ndarray, spacing: float) -> float:
    """(d-1)! times the 5-point Laplacian summed over K"""
    d = u.ndim
    centre = u[tuple(slice(1, -1) for _ in range(d))]
    lap = np.zeros_like(centre)
    for axis in range(d):
        ahead = tuple(slice(2, None) if k == axis else slice(1, -1) for k in range(d))
        behind = tuple(slice(None, -2) if k == axis else slice(1, -1) for k in range(d))
        lap += u[ahead] + u[behind] - 2 * centre
    inner = k_mask[tuple(slice(1, -1) for _ in range(d))]
    return float(factorial(d - 1) * np.sum(lap[inner]) * spacing ** (d - 2))


def _newton_tensor(A: np.ndarray, r: int) -> np.ndarray:
    """T_r(A) = sigma_r(A) I - A T_{r-1}(A), T_0 = I"""
    d = A.shape[-1]
    T = np.broadcast_to(np.eye(d), A.shape).copy()
    for k in range(1, r + 1):
        T = sigma_k(A, k)[..., None, None] * np.eye(d) - A @ T
    return T


def flux_mass(u: np.ndarray, in_domain: np.ndarray, spacing: float, order: int) -> float:
    """Mass of (dd#u)^order ^ beta^{d-order} inside the core of D as a boundary flux.

    sigma_k(D^2 u) = div(T_{k-1}(D^2 u) grad u) / k, so the mass is read off
    the flux through the faces between core nodes and the rest of D.
    """
    d = u.ndim
    structure = np.ones((3,) * d, dtype=bool)
    core = ndimage.binary_erosion(in_domain, structure=structure, iterations=2, border_value=0)
    hess = finite_difference_hessian(u, [spacing] * d)
    grad = np.stack(np.gradient(u, spacing), axis=-1)[tuple(slice(1, -1) for _ in range(d))]
    field_ = np.einsum('...ij,...j->...i', _newton_tensor(hess, order - 1), grad)
    inner = tuple(slice(1, -1) for _ in range(d))
    core_in = core[inner]
    total = 0.0
    for axis in range(d):
        here = [slice(None)] * d
        there = [slice(None)] * d
        here[axis] = slice(None, -1)
        there[axis] = slice(1, None)
        a, b = core_in[tuple(here)], core_in[tuple(there)]
        mid = (field_[tuple(here)][..., axis] + field_[tuple(there)][..., axis]) / 2
        total += np.sum(mid[a & ~b]) - np.sum(mid[b & ~a])
    constant = superform_constant(order, d).value
    return float(constant * total * spacing ** (d - 1) / order)


def extremal_mass(ext: ExtremalFunction, order: int) -> float:
    spacing = ext.u.spacing[0]
    if order == 1:
        return laplacian_mass(np.asarray(ext.u.values), ext.k_mask, spacing)
    return flux_mass(np.asarray(ext.u.values), ext.in_domain, spacing, order)


# --------------------------------------------------------------------------
# Lower bounds from explicit candidates

def _quadratic_bound(prob: CapacityProblem, disc: _Discretization) -> float:
    """phi = |x - c|^2 / R^2 with D inside B(c, R): constant density on K"""
    d, k = prob.dim, prob.order
    k_volume = float(np.count_nonzero(disc.k_mask)) * disc.spacing ** d
    if k_volume == 0:
        return 0.0
    best = 0.0
    inside = disc.points[disc.in_domain]
    for c in disc.points[disc.k_mask][:: max(1, int(np.count_nonzero(disc.k_mask)) // 8)]:
        # pad by a grid diagonal so the ball covers all of D, not just its nodes
        radius = float(np.sqrt(np.max(np.sum((inside - c) ** 2, axis=-1)))) + disc.spacing * np.sqrt(d)
        radius2 = radius ** 2
        density = superform_constant(k, d).value * comb(d, k) * (2 / radius2) ** k
        best = max(best, density * k_volume)
    return best


def candidate_directions(n: int) -> List[Vector]:
    """Directions of the affine pieces of the pyramid candidates: axes first, then diagonals"""
    dirs = []
    for i in range(n):
        for s in (1, -1):
            dirs.append(tuple(Fraction(s if j == i else 0) for j in range(n)))
    for signs in product((1, -1), repeat=n):
        diagonal = tuple(Fraction(s) for s in signs)
        if diagonal not in dirs:
            dirs.append(diagonal)
    return dirs[:CANDIDATE_DIRECTIONS]


def _pyramid_bound(prob: CapacityProblem, disc: _Discretization) -> Fraction:
    """phi = max_i a_i.(x - c) with a_i = d_i / reach_D(c, d_i), so 0 <= phi <= 1 on D;
    its Monge-Ampere measure is an atom n! vol(conv a_i) at c
    """
    if prob.V is not None or prob.m != prob.n or not disc.k_mask.any():
        return Fraction(0)
    best = Fraction(0)
    labels, count = ndimage.label(disc.k_mask)
    for component in range(1, count + 1):
        nodes = disc.points[labels == component]
        centroid = nodes.mean(axis=0)
        c_float = nodes[np.argmin(np.sum((nodes - centroid) ** 2, axis=-1))]
        c = tuple(Fraction(float(x)).limit_denominator(10 ** 6) for x in c_float)
        gradients = []
        for direction in candidate_directions(prob.n):
            reach = prob.domain.support(direction, c)
            gradients.append(tuple(x / reach for x in direction))
        best = max(best, factorial(prob.n) * volume(convex_hull(gradients)))
    return best


def lower_bound(prob: CapacityProblem) -> float:
    disc = _discretize(prob)
    return max(_quadratic_bound(prob, disc), float(_pyramid_bound(prob, disc)))


# --------------------------------------------------------------------------
# Capacity

class CapacityResult(NamedTuple):
    value: float
    lower_bound: float
    residual: float
    iterations: int
    converged: bool
    extremal: Optional[ExtremalFunction]


def capacity(prob: CapacityProblem, tol: float = CAPACITY_TOL, max_iter: int = CAPACITY_MAX_ITER,
             sweep: str = SWEEP_ORDER, strict: bool = False) -> CapacityResult:
    """cap_{V,m}(K, D) from the extremal function, with a candidate lower bound"""
    if prob.k_mask is None and prob.K.is_empty:
        return CapacityResult(0.0, 0.0, 0.0, 0, True, None)
    ext = relative_extremal(prob, tol, max_iter, sweep, strict)
    if not ext.k_mask.any():
        return CapacityResult(0.0, 0.0, ext.residual, ext.iterations, ext.converged, ext)
    value = extremal_mass(ext, prob.order)
    bound = lower_bound(prob)
    logger.info("capacity %.6g (lower bound %.6g, %d sweeps)", value, bound, ext.iterations)
    return CapacityResult(value, bound, ext.residual, ext.iterations, ext.converged, ext)


def capacity_on_cycle(prob: CapacityProblem, cycle, **kwargs) -> float:
    """Weighted sum of capacities over the affine pieces of a tropical cycle"""
    if prob.V is not None:
        raise InputError("give either a subspace or a cycle, not both")
    total = 0.0
    for cell in cycle.cells:
        V = AffineSubspace.build(cell.vertices[0], cell.directions)
        piece = CapacityProblem(prob.domain, prob.K, prob.m, V, prob.resolution, None, cell)
        if piece.order < 1:
            raise RangeError(f"cycle of codimension {V.codim} needs m > {V.codim}")
        try:
            result = capacity(piece, **kwargs)
        except RangeError as exc:
            if 'no grid node' in str(exc):
                continue
            raise
        total += cell.weight * result.value
    return total


def fine_grid_oracle(prob: CapacityProblem, refinement: int = ORACLE_REFINEMENT) -> float:
    """m - p = 1 capacity on a finer grid by one sparse Laplace solve"""
    if prob.order != 1:
        raise RangeError("the Laplace oracle only covers m - p = 1")
    fine = prob.refined(refinement) if prob.k_mask is None else prob
    disc = _discretize(fine)
    shape = disc.free.shape
    d = len(shape)
    index = -np.ones(shape, dtype=int)
    free_nodes = np.argwhere(disc.free)
    index[disc.free] = np.arange(len(free_nodes))
    rows, cols, vals = [], [], []
    rhs = np.zeros(len(free_nodes))
    for row, node in enumerate(free_nodes):
        rows.append(row)
        cols.append(row)
        vals.append(-2.0 * d)
        for axis in range(d):
            for step in (1, -1):
                nb = node.copy()
                nb[axis] += step
                nb = tuple(nb)
                if index[nb] >= 0:
                    rows.append(row)
                    cols.append(index[nb])
                    vals.append(1.0)
                elif disc.k_mask[nb]:
                    rhs[row] += 1.0          # neighbour fixed at -1
    u = np.zeros(shape)
    u[disc.k_mask] = -1.0
    if len(free_nodes):
        matrix = coo_matrix((vals, (rows, cols)), shape=(len(free_nodes),) * 2).tocsr()
        u[disc.free] = spsolve(matrix, rhs)
    return laplacian_mass(u, disc.k_mask, disc.spacing)


# --------------------------------------------------------------------------
# Experiments

class PluripolarResult(NamedTuple):
    polar: bool
    capacity: float


def pluripolar_test(E: MaskSpec, prob: CapacityProblem, threshold: float, **kwargs) -> PluripolarResult:
    """Numerical surrogate: E counts as pluripolar when its computed capacity is below threshold"""
    value = capacity(prob.with_k(E), **kwargs).value if not E.is_empty else 0.0
    return PluripolarResult(value < threshold, value)


class QuasicontinuityRow(NamedTuple):
    k: int
    h: float
    nodes: int
    capacity: float


class QuasicontinuityReport(NamedTuple):
    rows: List[QuasicontinuityRow]
    first_below: Optional[int]      # first k with cap(G_k) < eps


def quasicontinuity_experiment(u: GridFunction, m: int, eps: float = QUASI_EPS, k_max: int = QUASI_K_MAX,
                               h0: Optional[float] = None, **kwargs) -> QuasicontinuityReport:
    """cap({u_k > u + 1/k}, D) for mollifications u_k of u with radius h0 / 2^k"""
    if not u.equal_spacing or len(set(u.resolution)) != 1:
        raise RangeError("quasicontinuity experiment needs a cube grid with equal spacing")
    g = u.spacing[0]
    h0 = h0 if h0 is not None else 0.125 * float(u.box[0][1] - u.box[0][0])
    margin = int(np.floor(h0 / g))
    base = u.crop([margin] * u.n)
    domain = Domain.box_domain(base.box)
    rows = []
    first = None
    for k in range(1, k_max + 1):
        h = h0 / 2 ** (k - 1)
        if h < g:
            break
        smooth = mollify(u, h)
        inner = margin - int(np.floor(h / g))
        aligned = smooth.crop([inner] * u.n) if inner else smooth
        G = aligned.values > base.values + 1.0 / k
        structure = np.ones((3,) * u.n, dtype=bool)
        core = ndimage.binary_erosion(np.ones_like(G), structure=structure,
                                      iterations=CAPACITY_MARGIN, border_value=0)
        G &= core
        if G.any():
            prob = CapacityProblem(domain, MaskSpec(), m, resolution=base.resolution[0], k_mask=G)
            value = capacity(prob, **kwargs).value
        else:
            value = 0.0
        rows.append(QuasicontinuityRow(k, h, int(np.count_nonzero(G)), value))
        logger.info("k=%d h=%.4g |G_k|=%d cap=%.4g", k, h, rows[-1].nodes, value)
        if first is None and value < eps:
            first = k
            break
    return QuasicontinuityReport(rows, first)
