"""
Sampled functions on rectangular grids, finite-difference Hessians, quadrature
weights and affine subspaces with orthonormal frames.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Sequence, Tuple

import numpy as np

from errors import DimensionMismatchError, InputError, RangeError
from exact_linalg import Vector, rank, to_fraction, to_vector

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[Fraction, Fraction], ...]


def make_box(bounds) -> Box:
    """[[a1, b1], ...] with rational entries, a_i < b_i"""
    box = tuple((to_fraction(a), to_fraction(b)) for a, b in bounds)
    if not box:
        raise RangeError("box needs at least one axis")
    for a, b in box:
        if not a < b:
            raise RangeError(f"empty box side [{a}, {b}]")
    return box


def cube(radius, n: int) -> Box:
    r = to_fraction(radius)
    return make_box([(-r, r)] * n)


@dataclass(frozen=True)
class GridFunction:
    """Values of a function at the nodes of a tensor grid over a box"""
    box: Box
    resolution: Tuple[int, ...]
    values: np.ndarray = field(compare=False, repr=False)

    def __post_init__(self):
        if len(self.box) != len(self.resolution):
            raise DimensionMismatchError("box and resolution disagree on the dimension")
        if any(r < 3 for r in self.resolution):
            raise RangeError(f"resolution {self.resolution} needs at least 3 nodes per axis")
        if self.values.shape != tuple(self.resolution):
            raise DimensionMismatchError(f"values of shape {self.values.shape} on a {self.resolution} grid")
        if not np.all(np.isfinite(self.values)):
            raise InputError("grid values must be finite")
        self.values.setflags(write=False)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], box, resolution) -> 'GridFunction':
        """fn maps an (..., n) array of points to an (...) array of values"""
        box = make_box(box)
        if isinstance(resolution, int):
            resolution = (resolution,) * len(box)
        resolution = tuple(int(r) for r in resolution)
        points = grid_points(box, resolution)
        return cls(box, resolution, np.asarray(fn(points), dtype=float))

    @property
    def n(self) -> int:
        return len(self.box)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(float((b - a) / (r - 1)) for (a, b), r in zip(self.box, self.resolution))

    @property
    def exact_spacing(self) -> Tuple[Fraction, ...]:
        return tuple((b - a) / (r - 1) for (a, b), r in zip(self.box, self.resolution))

    @property
    def equal_spacing(self) -> bool:
        return len(set(self.exact_spacing)) == 1

    @property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(float(a), float(b), r) for (a, b), r in zip(self.box, self.resolution)]

    def points(self) -> np.ndarray:
        return grid_points(self.box, self.resolution)

    def with_values(self, values: np.ndarray) -> 'GridFunction':
        return GridFunction(self.box, self.resolution, np.asarray(values, dtype=float))

    def crop(self, margins: Sequence[int]) -> 'GridFunction':
        """Drop margins[i] nodes on both ends of axis i"""
        slices = tuple(slice(k, r - k) for k, r in zip(margins, self.resolution))
        step = self.exact_spacing
        box = tuple((a + k * s, b - k * s) for (a, b), k, s in zip(self.box, margins, step))
        return GridFunction(box, tuple(r - 2 * k for r, k in zip(self.resolution, margins)),
                            np.array(self.values[slices]))

    def hessian(self) -> np.ndarray:
        """Central-difference Hessian at interior nodes, shape (r1-2, ..., rn-2, n, n)"""
        return finite_difference_hessian(self.values, self.spacing)

    def quadrature_weights(self) -> np.ndarray:
        return trapezoid_weights(self.resolution, self.spacing)

    def integrate(self, density: np.ndarray = None, rule: str = 'midpoint') -> float:
        values = self.values if density is None else density
        if rule == 'midpoint':
            return midpoint_integral(values, self.spacing)
        if rule == 'trapezoid':
            return float(np.sum(values * self.quadrature_weights()))
        raise RangeError(f"unknown quadrature rule {rule!r}")


def grid_points(box: Box, resolution: Sequence[int]) -> np.ndarray:
    axes = [np.linspace(float(a), float(b), r) for (a, b), r in zip(box, resolution)]
    return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)


def _shifted(values: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    """values[i + offset] over the interior index range"""
    slices = tuple(slice(1 + o, values.shape[k] - 1 + o) for k, o in enumerate(offsets))
    return values[slices]


def finite_difference_hessian(values: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    n = values.ndim
    interior = tuple(s - 2 for s in values.shape)
    hess = np.empty(interior + (n, n))
    zero = [0] * n
    centre = _shifted(values, zero)
    for i in range(n):
        plus = list(zero)
        plus[i] = 1
        minus = list(zero)
        minus[i] = -1
        hess[..., i, i] = (_shifted(values, plus) - 2 * centre + _shifted(values, minus)) / spacing[i] ** 2
        for j in range(i + 1, n):
            corners = 0.0
            for si, sj, sign in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                off = list(zero)
                off[i], off[j] = si, sj
                corners = corners + sign * _shifted(values, off)
            hess[..., i, j] = hess[..., j, i] = corners / (4 * spacing[i] * spacing[j])
    return hess


def trapezoid_weights(resolution: Sequence[int], spacing: Sequence[float]) -> np.ndarray:
    """Dual-cell weights; constants integrate exactly to the box volume"""
    weights = np.ones(tuple(resolution))
    for axis, (r, h) in enumerate(zip(resolution, spacing)):
        w = np.full(r, h)
        w[0] = w[-1] = h / 2
        shape = [1] * len(resolution)
        shape[axis] = r
        weights = weights * w.reshape(shape)
    return weights


def midpoint_integral(values: np.ndarray, spacing: Sequence[float]) -> float:
    """Composite midpoint rule over the grid cells; cell-centre values are means of the 2^n corners"""
    centre = np.asarray(values, dtype=float)
    for axis in range(centre.ndim):
        lo = np.take(centre, np.arange(centre.shape[axis] - 1), axis=axis)
        hi = np.take(centre, np.arange(1, centre.shape[axis]), axis=axis)
        centre = (lo + hi) / 2
    return float(np.sum(centre) * np.prod(spacing))


def inside_box(points: np.ndarray, box: Box, tol: float = 1e-12) -> np.ndarray:
    inside = np.ones(points.shape[:-1], dtype=bool)
    for k, (a, b) in enumerate(box):
        inside &= (points[..., k] >= float(a) - tol) & (points[..., k] <= float(b) + tol)
    return inside


@dataclass(frozen=True)
class AffineSubspace:
    """V = base + span(directions) with rational data"""
    base: Vector
    directions: Tuple[Vector, ...]

    @staticmethod
    def build(base, directions) -> 'AffineSubspace':
        for value in list(base) + [x for d in directions for x in d]:
            if isinstance(value, float):
                raise InputError("affine subspaces need rational data, got a float")
        base = to_vector(base)
        directions = tuple(to_vector(d) for d in directions)
        for d in directions:
            if len(d) != len(base):
                raise DimensionMismatchError("direction and base point of different lengths")
        if directions and rank(directions, len(base)) < len(directions):
            raise InputError("directions of an affine subspace must be independent")
        return AffineSubspace(base, directions)

    @staticmethod
    def coordinate(n: int, fixed: dict) -> 'AffineSubspace':
        """{x_i = c_i for i in fixed} (0-based indices)"""
        base = [Fraction(fixed.get(i, 0)) for i in range(n)]
        directions = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n) if i not in fixed]
        return AffineSubspace.build(base, directions)

    @property
    def n(self) -> int:
        return len(self.base)

    @property
    def dim(self) -> int:
        return len(self.directions)

    @property
    def codim(self) -> int:
        return self.n - self.dim

    def frame(self) -> Tuple[np.ndarray, np.ndarray]:
        """Orthonormal (tangent, normal) bases as rows"""
        n = self.n
        if not self.directions:
            return np.zeros((0, n)), np.eye(n)
        matrix = np.array([[float(x) for x in d] for d in self.directions]).T
        q, _ = np.linalg.qr(matrix, mode='complete')
        return q[:, :self.dim].T, q[:, self.dim:].T

    def grid(self, box: Box, resolution: int):
        """Orthonormal grid on V covering V cap box: (params, points, inside, spacing)"""
        tangent, _ = self.frame()
        base = np.array([float(x) for x in self.base])
        if self.dim == 0:
            points = base[None, :]
            return np.zeros((1, 0)), points, inside_box(points, box), ()
        corners = np.array(np.meshgrid(*[[float(a), float(b)] for a, b in box], indexing='ij')).reshape(self.n, -1).T
        coords = (corners - base) @ tangent.T
        lo, hi = coords.min(axis=0), coords.max(axis=0)
        axes = [np.linspace(l, h, resolution) for l, h in zip(lo, hi)]
        params = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)
        points = base + params @ tangent
        spacing = tuple(float((h - l) / (resolution - 1)) for l, h in zip(lo, hi))
        return params, points, inside_box(points, box), spacing
