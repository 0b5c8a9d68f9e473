"""
Tests for relative capacities: extremal sweeps, the Laplace oracle, subspaces,
cycles, pluripolarity and the quasicontinuity experiment
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from capacity import (CapacityProblem, Domain, MaskSpec, candidate_directions, capacity, capacity_on_cycle,
                      fine_grid_oracle, pluripolar_test, quasicontinuity_experiment, relative_extremal)
from errors import ConvergenceError, DimensionMismatchError, InputError, RangeError
from exact_geometry import convex_hull, volume
from grids import AffineSubspace, GridFunction, cube
from hessian_measures import is_m_subharmonic, sample_tropical
from intersection import stable_intersection
from oracles import capacity_oracle

F = Fraction

UNIT_BOX = [(-1, 1), (-1, 1)]


def laplace_problem(radius, resolution=33, domain=None):
    domain = domain or Domain.box_domain(UNIT_BOX)
    return CapacityProblem(domain, MaskSpec.ball((0, 0), radius), 1, resolution=resolution)


def test_empty_set_has_zero_capacity():
    prob = CapacityProblem(Domain.box_domain(UNIT_BOX), MaskSpec(), 2)
    result = capacity(prob)
    assert result.value == 0.0
    assert result.converged


def test_sweep_matches_laplace_solve_on_the_same_grid():
    prob = laplace_problem(F(1, 2), resolution=17)
    swept = capacity(prob, tol=1e-9)
    assert swept.converged
    assert swept.value == pytest.approx(fine_grid_oracle(prob, refinement=1), rel=1e-3)


def test_jacobi_and_red_black_sweeps_agree():
    prob = laplace_problem(F(1, 2), resolution=17)
    a = capacity(prob, tol=1e-9, sweep='jacobi')
    b = capacity(prob, tol=1e-9, sweep='red-black')
    assert a.value == pytest.approx(b.value, rel=1e-3)
    assert b.iterations <= a.iterations


def test_unknown_sweep_order():
    with pytest.raises(RangeError):
        capacity(laplace_problem(F(1, 2), resolution=9), sweep='diagonal')


def test_extremal_function_bounds():
    ext = relative_extremal(laplace_problem(F(1, 2), resolution=17), tol=1e-8)
    values = np.asarray(ext.u.values)
    assert np.all(values <= 0.0)
    assert np.all(values >= -1.0)
    assert np.all(values[ext.k_mask] == -1.0)
    assert np.all(values[~ext.in_domain] == 0.0)


def test_capacity_grows_with_k():
    small = fine_grid_oracle(laplace_problem(F(1, 4)), refinement=1)
    large = fine_grid_oracle(laplace_problem(F(1, 2)), refinement=1)
    assert 0 < small < large


def test_capacity_shrinks_with_d():
    inner = Domain.box_domain(UNIT_BOX)
    outer = Domain.box_domain([(-2, 2), (-2, 2)])
    narrow = fine_grid_oracle(laplace_problem(F(1, 2), resolution=33, domain=inner), refinement=1)
    wide = fine_grid_oracle(laplace_problem(F(1, 2), resolution=65, domain=outer), refinement=1)
    assert wide < narrow


@pytest.mark.slow
def test_concentric_balls_match_the_logarithmic_formula():
    prob = laplace_problem(F(1, 2), resolution=65, domain=Domain.ball_domain((0, 0), 1))
    expected = 2 * math.pi / math.log(2)
    assert fine_grid_oracle(prob) == pytest.approx(expected, rel=0.05)


@pytest.mark.slow
def test_monge_ampere_capacity_is_monotone_in_k():
    domain = Domain.ball_domain((0, 0), 1)
    small = capacity(CapacityProblem(domain, MaskSpec.ball((0, 0), F(1, 4)), 2, resolution=17))
    large = capacity(CapacityProblem(domain, MaskSpec.ball((0, 0), F(1, 2)), 2, resolution=17))
    assert 0 < small.value < large.value
    assert large.lower_bound > 0


def test_segment_capacity_on_a_line():
    V = AffineSubspace.coordinate(2, {1: 0})
    prob = CapacityProblem(Domain.box_domain(UNIT_BOX), MaskSpec.box([(F(-1, 2), F(1, 2)), (-1, 1)]), 2, V,
                           resolution=65)
    result = capacity(prob, tol=1e-10)
    assert result.converged
    # linear extremal from the last node of K to the last free node: two slopes of 2
    assert result.value == pytest.approx(4.0, rel=1e-2)


def test_capacity_on_cycle_adds_pieces(line):
    cycle = stable_intersection(line)
    prob = CapacityProblem(Domain.box_domain(UNIT_BOX), MaskSpec.ball((0, 0), F(1, 2)), 2, resolution=33)
    assert capacity_on_cycle(prob, cycle, tol=1e-8) > 0
    with pytest.raises(InputError):
        capacity_on_cycle(CapacityProblem(prob.domain, prob.K, 2, AffineSubspace.coordinate(2, {1: 0})), cycle)


def test_problem_validation():
    domain = Domain.box_domain(UNIT_BOX)
    with pytest.raises(RangeError):
        CapacityProblem(domain, MaskSpec.ball((0, 0), F(1, 2)), 3)
    with pytest.raises(RangeError):
        CapacityProblem(domain, MaskSpec.ball((0, 0), F(1, 2)), 1, AffineSubspace.coordinate(2, {1: 0}))
    with pytest.raises(DimensionMismatchError):
        CapacityProblem(domain, MaskSpec(), 1, AffineSubspace.coordinate(3, {2: 0}))
    with pytest.raises(RangeError):
        Domain.ball_domain((0, 0), 0)


def test_k_must_stay_inside_d():
    with pytest.raises(RangeError):
        capacity(laplace_problem(1, resolution=17))


def test_explicit_mask_shape_is_checked():
    prob = CapacityProblem(Domain.box_domain(UNIT_BOX), MaskSpec(), 1, resolution=17,
                           k_mask=np.zeros((9, 9), dtype=bool))
    with pytest.raises(DimensionMismatchError):
        capacity(prob)


def test_strict_mode_raises_with_partial_result():
    with pytest.raises(ConvergenceError) as info:
        capacity(laplace_problem(F(1, 2), resolution=17), max_iter=2, strict=True)
    assert info.value.best is not None


def test_mask_union_and_points():
    mask = MaskSpec.box([(0, F(1, 2)), (0, F(1, 2))]).union(MaskSpec.point((F(-1, 2), F(-1, 2))))
    points = np.array([[[0.25, 0.25], [-0.5, -0.5]], [[0.9, 0.9], [-0.4, 0.0]]])
    assert mask.evaluate(points).tolist() == [[True, True], [False, False]]
    assert MaskSpec().is_empty


def test_pluripolar_surrogate():
    prob = laplace_problem(F(1, 2), resolution=17)
    assert pluripolar_test(MaskSpec(), prob, 1e-3) == (True, 0.0)
    assert not pluripolar_test(MaskSpec.ball((0, 0), F(1, 4)), prob, 1e-3).polar


def test_quasicontinuity_of_a_tropical_line(line):
    u = sample_tropical(line, cube(1, 2), 65)
    report = quasicontinuity_experiment(u, 1)
    assert report.first_below == 1
    assert report.rows[0].nodes == 0
    assert report.rows[0].capacity == 0.0


def test_quasicontinuity_needs_a_square_grid():
    u = GridFunction.from_function(lambda p: p[..., 0], [(-1, 1), (-2, 2)], 17)
    with pytest.raises(RangeError):
        quasicontinuity_experiment(u, 1)


SLACK = 1e-4

# capacity of K = ball(0, 1/2) in D = [-1, 1]^2 for m = 2 at 33 nodes per axis;
# regenerate with `python launcher.py oracle capacity problem.json`
M2_BALL_CAPACITY = 10.9151


def random_box_mask(rng):
    corner = rng.integers(-8, 5, size=2)
    size = rng.integers(1, 5, size=2)
    return MaskSpec.box([(F(int(a), 16), F(int(a + s), 16)) for a, s in zip(corner, size)])


def nested_box_masks(rng):
    corner = rng.integers(-8, 3, size=2)
    size = rng.integers(1, 4, size=2)
    grow = rng.integers(1, 3, size=2)
    inner = MaskSpec.box([(F(int(a), 16), F(int(a + s), 16)) for a, s in zip(corner, size)])
    outer = MaskSpec.box([(F(int(a - g), 16), F(int(a + s + g), 16)) for a, s, g in zip(corner, size, grow)])
    return inner, outer


def solver_capacity(K, m, resolution):
    result = capacity(CapacityProblem(Domain.box_domain(UNIT_BOX), K, m, resolution=resolution))
    assert result.converged
    assert result.lower_bound <= result.value + SLACK
    return result.value


@pytest.mark.slow
@pytest.mark.parametrize("m,resolution,families", [(1, 65, 10), (2, 33, 3)])
def test_monotone_and_subadditive_on_random_masks(rng, m, resolution, families):
    for _ in range(families):
        K1, K2 = nested_box_masks(rng)
        K3 = random_box_mask(rng)
        c1, c2, c3 = (solver_capacity(K, m, resolution) for K in (K1, K2, K3))
        c23 = solver_capacity(K2.union(K3), m, resolution)
        assert c1 <= c2 + SLACK
        assert max(c2, c3) <= c23 + SLACK
        assert c23 <= c2 + c3 + SLACK


@pytest.mark.slow
@pytest.mark.parametrize("m", [1, 2])
def test_exhaustion_by_growing_boxes(m):
    boxes = [MaskSpec.box([(-r, r), (-r, r)]) for r in (F(1, 4), F(3, 8), F(7, 16), F(15, 32), F(31, 64))]
    union = boxes[0]
    for K in boxes[1:]:
        union = union.union(K)
    values = [solver_capacity(K, m, 33) for K in boxes]
    limit = solver_capacity(union, m, 33)
    assert all(a <= b + SLACK for a, b in zip(values, values[1:]))
    gaps = [limit - v for v in values]
    assert all(b <= a + SLACK for a, b in zip(gaps, gaps[1:]))
    assert abs(values[-1] - limit) <= SLACK


def test_lower_bound_stays_below_the_extremal_mass():
    for radius in (F(1, 4), F(1, 2)):
        result = capacity(laplace_problem(radius, resolution=33))
        assert 0 < result.lower_bound <= result.value + 1e-4


def m2_ball_problem(resolution):
    return CapacityProblem(Domain.box_domain(UNIT_BOX), MaskSpec.ball((0, 0), F(1, 2)), 2, resolution=resolution)


@pytest.mark.slow
def test_m2_capacity_is_stable_across_resolutions():
    coarse = capacity(m2_ball_problem(17))
    fine = capacity(m2_ball_problem(33))
    assert coarse.converged and fine.converged
    assert coarse.value == pytest.approx(fine.value, rel=0.05)
    assert fine.value == pytest.approx(M2_BALL_CAPACITY, rel=1e-3)


@pytest.mark.slow
def test_capacity_oracle_regenerates_the_m2_value():
    assert capacity_oracle(m2_ball_problem(17), refinement=2) == pytest.approx(M2_BALL_CAPACITY, rel=1e-3)


@pytest.mark.slow
def test_quasicontinuity_capacities_do_not_grow():
    u = GridFunction.from_function(lambda p: 64 * np.maximum(0.0, np.maximum(p[..., 0], p[..., 1])),
                                   cube(1, 2), 65)
    report = quasicontinuity_experiment(u, 1)
    assert sum(row.nodes > 0 for row in report.rows) >= 2
    values = [row.capacity for row in report.rows]
    assert all(b <= a + SLACK for a, b in zip(values, values[1:]))
    assert report.first_below == report.rows[-1].k
    assert values[-1] < 1e-3


@pytest.mark.parametrize("m", [1, 2])
def test_extremal_iterates_increase_every_sweep(m):
    prob = CapacityProblem(Domain.box_domain(UNIT_BOX), MaskSpec.ball((0, 0), F(1, 2)), m, resolution=17)
    snapshots = []
    ext = relative_extremal(prob, callback=lambda iteration, u: snapshots.append(u.copy()))
    assert len(snapshots) == ext.iterations > 2
    assert all(np.all(b >= a) for a, b in zip(snapshots, snapshots[1:]))


def test_candidate_family_stays_small():
    for n in range(1, 5):
        directions = candidate_directions(n)
        assert len(directions) <= 8
        assert len(set(directions)) == len(directions)
        assert volume(convex_hull(directions)) > 0


@pytest.mark.parametrize("n,resolution", [(2, 17), (3, 9)])
def test_candidates_accepted_for_m_are_accepted_below_m(n, resolution):
    directions = np.array([[float(x) for x in d] for d in candidate_directions(n)])
    candidates = [
        lambda p: np.sum(p ** 2, axis=-1) / 4,
        lambda p: np.max(p @ directions.T, axis=-1) / n,
        lambda p: 3 * p[..., 0] ** 2 + 3 * p[..., 1] ** 2 - np.sum(p[..., 2:] ** 2, axis=-1),
    ]
    orders = range(1, n + 1)
    for phi in candidates:
        u = GridFunction.from_function(phi, cube(1, n), resolution)
        accepted = [is_m_subharmonic(u, m).ok for m in orders]
        assert accepted == sorted(accepted, reverse=True)
    saddle = GridFunction.from_function(candidates[2], cube(1, n), resolution)
    assert [is_m_subharmonic(saddle, m).ok for m in orders] == ([True, True] if n == 2 else [True, True, False])
