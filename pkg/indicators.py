"""
Indicators (recession functions) of Lelong-class functions, their Theta
polytopes, residual masses and Newton numbers.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy.interpolate import RegularGridInterpolator

from config import (RATIONAL_DENOMINATOR_LIMIT, RECESSION_DIRECTIONS, RECESSION_TOL,
                    RECESSION_TS)
from errors import DimensionMismatchError, InputError, RangeError
from exact_geometry import Polytope, convex_hull, hausdorff_measure
from exact_linalg import Vector, dot, to_fraction, to_vector
from grids import GridFunction
from hessian_measures import _pl_atoms
from tropical import TropicalPolynomial, evaluate

logger = logging.getLogger(__name__)

ThetaPolytope = Polytope


class DirectionalLimit(NamedTuple):
    direction: Tuple[float, ...]
    value: float
    converged: bool


@dataclass(frozen=True)
class Indicator:
    """Positively homogeneous PL convex function y -> max over gradients of a.y"""
    gradients: Tuple[Vector, ...]
    n: int
    diagnostics: Tuple[DirectionalLimit, ...] = field(default=(), compare=False, repr=False)

    @staticmethod
    def from_gradients(gradients, diagnostics=()) -> 'Indicator':
        vectors = sorted({to_vector(a) for a in gradients})
        if not vectors:
            raise RangeError("indicator needs at least one gradient")
        n = len(vectors[0])
        if any(len(v) != n for v in vectors):
            raise DimensionMismatchError("gradients of different lengths")
        return Indicator(tuple(vectors), n, tuple(diagnostics))

    def __call__(self, y: Sequence) -> Fraction:
        y = to_vector(y)
        return max(dot(a, y) for a in self.gradients)

    def plus(self, y: Sequence) -> Fraction:
        return max(self(y), Fraction(0))

    def evaluate_points(self, points: np.ndarray) -> np.ndarray:
        grads = np.array([[float(x) for x in a] for a in self.gradients])
        return np.max(points @ grads.T, axis=-1)

    def scaled(self, factor) -> 'Indicator':
        factor = to_fraction(factor)
        if factor <= 0:
            raise RangeError("indicators scale by positive factors only")
        return Indicator.from_gradients([tuple(factor * x for x in a) for a in self.gradients])

    @property
    def converged(self) -> bool:
        return all(d.converged for d in self.diagnostics)


@dataclass(frozen=True)
class LelongFunction:
    """f with f(x) <= C|x| + D: a tropical polynomial, a vectorized callable or grid samples"""
    n: int
    polynomial: Optional[TropicalPolynomial] = None
    function: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    grid: Optional[GridFunction] = None
    growth: Tuple[float, float] = (0.0, 0.0)

    @staticmethod
    def from_polynomial(f: TropicalPolynomial) -> 'LelongFunction':
        slope = max(float(np.linalg.norm([float(a) for a in alpha])) for alpha in f.support)
        return LelongFunction(f.n, polynomial=f, growth=(slope, float(max(-v for _, v in f.terms))))

    @staticmethod
    def from_callable(fn, n: int, growth: Tuple[float, float]) -> 'LelongFunction':
        return LelongFunction(n, function=fn, growth=growth)

    @staticmethod
    def from_grid(u: GridFunction, growth: Tuple[float, float]) -> 'LelongFunction':
        lf = LelongFunction(u.n, grid=u, growth=growth)
        lf.check_growth(u.points().reshape(-1, u.n))
        return lf

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if self.polynomial is not None:
            f = self.polynomial
            alphas = np.array([[float(a) for a in alpha] for alpha in f.support])
            offsets = np.array([float(v) for _, v in f.terms])
            return np.max(points @ alphas.T - offsets, axis=-1)
        if self.function is not None:
            return np.asarray(self.function(points), dtype=float)
        interp = RegularGridInterpolator(self.grid.axes, self.grid.values)
        lo = [float(a) for a, _ in self.grid.box]
        hi = [float(b) for _, b in self.grid.box]
        return interp(np.clip(points, lo, hi))

    def check_growth(self, points: np.ndarray):
        C, D = self.growth
        bound = C * np.linalg.norm(points, axis=-1) + D
        excess = self(points) - bound
        if np.any(excess > 1e-9 * (1 + np.abs(bound))):
            raise InputError(f"growth bound C={C}, D={D} violated at {int(np.sum(excess > 0))} samples")


# --------------------------------------------------------------------------
# Indicators

def _directions(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        angles = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    if n == 3:
        # Fibonacci sphere
        k = np.arange(count) + 0.5
        polar = np.arccos(1 - 2 * k / count)
        azimuth = np.pi * (1 + 5 ** 0.5) * k
        return np.stack([np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], axis=-1)
    rng = np.random.default_rng(count)
    raw = rng.normal(size=(count, n))
    return np.vstack([np.eye(n), -np.eye(n), raw / np.linalg.norm(raw, axis=-1, keepdims=True)])


def _directional_limits(f: LelongFunction, x: np.ndarray, directions: np.ndarray) -> List[DirectionalLimit]:
    """lim f(x + t y)/t by Richardson extrapolation over doubling radii"""
    limits = []
    for y in directions:
        if f.grid is not None:
            reach = _box_reach(f.grid, x, y)
            ts = [reach / 2 ** k for k in range(len(RECESSION_TS) - 1, -1, -1)]
        else:
            ts = [float(t) for t in RECESSION_TS]
        pts = np.array([x + t * y for t in ts])
        quotients = f(pts) / np.array(ts)
        extrapolated = 2 * quotients[1:] - quotients[:-1]
        value = float(extrapolated[-1])
        spread = abs(float(extrapolated[-1] - extrapolated[-2])) if len(extrapolated) > 1 else np.inf
        converged = spread <= RECESSION_TOL * (1 + abs(value))
        limits.append(DirectionalLimit(tuple(float(c) for c in y), value, converged))
    return limits


def _box_reach(u: GridFunction, x: np.ndarray, y: np.ndarray) -> float:
    reach = np.inf
    for (a, b), xi, yi in zip(u.box, x, y):
        if yi > 1e-15:
            reach = min(reach, (float(b) - xi) / yi)
        elif yi < -1e-15:
            reach = min(reach, (float(a) - xi) / yi)
    return float(reach)


def _fit_gradients(directions: np.ndarray, values: np.ndarray) -> List[Vector]:
    """Vertices of {a : a.y_k <= s_k}, snapped to small-denominator rationals"""
    n = directions.shape[1]
    tol = RECESSION_TOL * (1 + np.max(np.abs(values)))
    subsets = np.array(list(combinations(range(len(directions)), n)))
    systems = directions[subsets]
    rhs = values[subsets]
    dets = np.linalg.det(systems)
    ok = np.abs(dets) > 1e-6
    candidates = np.linalg.solve(systems[ok], rhs[ok][..., None])[..., 0]
    feasible = np.all(candidates @ directions.T <= values + tol, axis=-1)
    snapped = {tuple(Fraction(float(c)).limit_denominator(RATIONAL_DENOMINATOR_LIMIT) for c in a)
               for a in candidates[feasible]}
    if not snapped:
        raise InputError("directional limits are inconsistent with a PL indicator")
    return list(convex_hull(sorted(snapped)).vertices)


def recession_indicator(f, x: Optional[Sequence] = None) -> Indicator:
    """Psi_{f,x}(y) = lim f(x + t y)/t; exact for tropical polynomials"""
    if isinstance(f, TropicalPolynomial):
        return Indicator.from_gradients(f.support)
    if f.polynomial is not None:
        return Indicator.from_gradients(f.polynomial.support)
    x = np.zeros(f.n) if x is None else np.array([float(c) for c in to_vector(x)])
    directions = _directions(f.n, RECESSION_DIRECTIONS)
    limits = _directional_limits(f, x, directions)
    bad = [d for d in limits if not d.converged]
    if bad:
        logger.warning("%d of %d directional limits did not settle", len(bad), len(limits))
    values = np.array([d.value for d in limits])
    return Indicator.from_gradients(_fit_gradients(directions, values), limits)


def theta_polytope(psi: Indicator) -> ThetaPolytope:
    """Theta = {a : a.t <= Psi+(t) for all t} = conv(gradients and 0)"""
    return convex_hull(list(psi.gradients) + [tuple([Fraction(0)] * psi.n)])


class ResidualMass(NamedTuple):
    value: Fraction
    mode: str         # 'atom' for m = n, 'fan' when the measure has no atoms


def residual_mass(psi: Indicator, m: int) -> ResidualMass:
    """Atomic mass at 0 of (dd# Psi+)^m ^ beta^{n-m}"""
    n = psi.n
    if not 1 <= m <= n:
        raise RangeError(f"m={m} outside [1, {n}]")
    if m < n:
        # the codim-m cones of the fan carry densities; nothing sits on the apex alone
        return ResidualMass(Fraction(0), 'fan')
    origin = tuple([Fraction(0)] * n)
    points = sorted(set(psi.gradients) | {origin})
    atoms = _pl_atoms(points, [0] * len(points))
    value = sum((mass for point, mass in atoms if point == origin), Fraction(0))
    return ResidualMass(value, 'atom')


class NewtonNumber(NamedTuple):
    value: object
    residual: Fraction
    literal: sympy.Expr
    divergent: bool
    agree: bool


def newton_number(f, x: Optional[Sequence], m: int, mode: str = 'residual') -> NewtonNumber:
    """N(f, x) in both readings: residual mass of the indicator and H^{n-m}(Theta)/C(n, m)"""
    if mode not in ('residual', 'literal'):
        raise RangeError(f"unknown mode {mode!r}")
    psi = recession_indicator(f, x)
    n = psi.n
    residual = residual_mass(psi, m).value
    measure = hausdorff_measure(theta_polytope(psi), n - m)
    literal = sympy.oo if measure.divergent else sympy.nsimplify(measure.value / comb(n, m))
    agree = not measure.divergent and sympy.simplify(literal - sympy.Rational(residual)) == 0
    if not agree:
        logger.info("literal and residual Newton numbers differ: %s vs %s", literal, residual)
    value = residual if mode == 'residual' else literal
    return NewtonNumber(value, residual, literal, measure.divergent, agree)


def domination_constant(f, x: Sequence, samples: Optional[np.ndarray] = None) -> float:
    """C_x with f(t) <= Psi_{f,x}(t - x) + C_x; exactly f(x) for tropical polynomials"""
    if isinstance(f, TropicalPolynomial):
        return evaluate(f, x)
    if f.polynomial is not None:
        return evaluate(f.polynomial, x)
    if samples is None:
        raise InputError("a fitted domination constant needs sample points")
    psi = recession_indicator(f, x)
    xf = np.array([float(c) for c in to_vector(x)])
    return float(np.max(f(samples) - psi.evaluate_points(samples - xf)))


def lelong_bound(psi: Indicator) -> Tuple[Fraction, Fraction]:
    """(C, D) with Psi(y) <= C|y| + D: C = max l1-norm of a gradient, D = 0"""
    return max(sum(abs(c) for c in a) for a in psi.gradients), Fraction(0)


def sup_formula_indicator(f, x: Sequence, y: Sequence, radii: Sequence[float] = RECESSION_TS) -> float:
    """R^{-1} sup{f(t) : |t_k - x_k| <= R y_k} as R grows, for y >= 0 (linear-scale reading)"""
    yv = np.array([float(c) for c in to_vector(y)])
    if np.any(yv < 0):
        raise RangeError("the sup formula is read for nonnegative directions only")
    if not isinstance(f, LelongFunction):
        f = LelongFunction.from_polynomial(f)
    xv = np.array([float(c) for c in to_vector(x)])
    signs = np.array(list(product((1.0, -1.0), repeat=len(yv))))
    estimates = []
    for R in radii:
        # a convex function attains its sup over a box at a corner
        corners = xv + R * signs * yv
        estimates.append(float(np.max(f(corners))) / R)
    estimates = np.array(estimates)
    return float(2 * estimates[-1] - estimates[-2]) if len(estimates) > 1 else float(estimates[-1])
