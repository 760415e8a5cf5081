"""Tests for hardness_lab.objective."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardness_lab.distributions import GaussianComponent, GaussianMixture, isotropic, standard_normal
from hardness_lab.errors import DimensionError, UnsupportedError
from hardness_lab.objective import (
    Problem,
    grad_cos_gauss_closed,
    grad_mc,
    grid_axis,
    landscape_grid,
    objective,
    objective_cos_gauss_closed,
    objective_mc,
)
from hardness_lab.periodic import cosine, triangle
from hardness_lab.predictors import CosineFamily

# 3-sigma per single check; sweeps over many draws use a wider band
SWEEP_SIGMA = 4.5


def cos_problem(w_star, mixture=None):
    w_star = np.asarray(w_star, dtype=float)
    mixture = mixture or standard_normal(w_star.size)
    return Problem(mixture, cosine(), w_star, CosineFamily(w_star.size))


# ============================================================================
# Monte Carlo
# ============================================================================

def test_perfect_fit_has_zero_loss():
    problem = cos_problem([0.7, -0.3])
    assert objective_mc(problem, problem.w_star, 10_000, seed=0).value == 0.0
    assert objective_mc(problem, -problem.w_star, 10_000, seed=0).value <= 1e-15
    assert np.all(grad_mc(problem, problem.w_star, 10_000, seed=0).value == 0.0)


def test_mc_value_at_origin():
    problem = cos_problem([2.0, 2.0])
    est = objective_mc(problem, [0.0, 0.0], 200_000, seed=1)
    assert abs(est.value - 1.5) <= 3 * est.std_error
    assert est.std_error >= 0


def test_mc_is_deterministic_and_worker_independent():
    problem = Problem(isotropic(3, 0.5), triangle(), [0.4, 0.1, -0.2], CosineFamily(3))
    w = [0.1, 0.2, 0.3]
    a = objective_mc(problem, w, 80_000, seed=2, workers=1)
    b = objective_mc(problem, w, 80_000, seed=2, workers=3)
    assert a.value == b.value
    assert a.std_error == b.std_error
    assert np.array_equal(grad_mc(problem, w, 80_000, 2).value, grad_mc(problem, w, 80_000, 2, workers=3).value)


def test_closed_form_agrees_with_mc():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(1, 11))
        w_star = rng.normal(size=d) * 0.3
        w = rng.normal(size=d) * 0.3
        variance = float(rng.uniform(0.5, 2.0))
        problem = cos_problem(w_star, isotropic(d, variance))
        est = objective_mc(problem, w, 20_000, seed=int(rng.integers(1 << 30)))
        closed = objective_cos_gauss_closed(w, w_star, variance)
        assert abs(closed - est.value) <= SWEEP_SIGMA * est.std_error + 1e-12


def test_grad_mc_agrees_with_closed_gradient():
    rng = np.random.default_rng(4)
    problem = cos_problem([0.3, -0.2])
    for _ in range(20):
        w = rng.normal(size=2) * 0.4
        est = grad_mc(problem, w, 50_000, seed=int(rng.integers(1 << 30)))
        exact = grad_cos_gauss_closed(w, problem.w_star, 1.0)
        assert np.all(np.abs(est.value - exact) <= SWEEP_SIGMA * est.std_error + 1e-12)


def test_grad_mc_matches_common_random_number_differences():
    problem = Problem(standard_normal(2), triangle(), [0.5, 0.25], CosineFamily(2))
    w = np.array([0.2, -0.1])
    n, seed, h = 20_000, 5, 1e-6
    g = grad_mc(problem, w, n, seed).value
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (objective_mc(problem, w + e, n, seed).value - objective_mc(problem, w - e, n, seed).value) / (2 * h)
        assert fd == pytest.approx(g[i], rel=1e-3)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        cos_problem([1.0, 2.0], standard_normal(3))
    problem = cos_problem([1.0, 2.0])
    with pytest.raises(DimensionError):
        objective_mc(problem, [0.0, 0.0, 0.0], 100, seed=0)


# ============================================================================
# Closed form
# ============================================================================

def test_closed_form_zeros():
    assert objective_cos_gauss_closed([1.0, -2.0], [1.0, -2.0], 1.0) == pytest.approx(0.0, abs=1e-15)
    assert objective_cos_gauss_closed([0.0, 0.0], [0.0, 0.0], 1.0) == 0.0


def test_closed_form_plateau_value():
    assert objective_cos_gauss_closed([2.0, -2.0], [2.0, 2.0], 1.0) == pytest.approx(1.0, abs=1e-12)


def test_closed_form_matches_formula_for_identity():
    w, w_star = np.array([0.1, 0.3]), np.array([0.2, -0.1])
    sq = lambda v: float(v @ v)
    expected = (1 + 0.5 * math.exp(-8 * math.pi ** 2 * sq(w)) + 0.5 * math.exp(-8 * math.pi ** 2 * sq(w_star))
                - math.exp(-2 * math.pi ** 2 * sq(w - w_star)) - math.exp(-2 * math.pi ** 2 * sq(w + w_star)))
    assert objective_cos_gauss_closed(w, w_star, np.eye(2)) == pytest.approx(expected, abs=1e-14)


def test_mixture_closed_form_is_weighted_sum():
    mix = GaussianMixture((GaussianComponent([0.0, 0.0], 1.0, 0.25), GaussianComponent([0.0, 0.0], [2.0, 0.5], 0.75)))
    w, w_star = [0.1, 0.2], [0.3, 0.0]
    expected = (0.25 * objective_cos_gauss_closed(w, w_star, 1.0)
                + 0.75 * objective_cos_gauss_closed(w, w_star, np.diag([2.0, 0.5])))
    assert objective_cos_gauss_closed(w, w_star, mix) == pytest.approx(expected, rel=1e-14)


def test_non_zero_mean_has_no_closed_form():
    mix = isotropic(2, 1.0, mean=[1.0, 0.0])
    with pytest.raises(UnsupportedError):
        objective_cos_gauss_closed([0.0, 0.0], [1.0, 1.0], mix)
    problem = cos_problem([1.0, 1.0], mix)
    assert not problem.has_closed_form
    with pytest.raises(UnsupportedError):
        objective(problem, [0.0, 0.0])
    assert objective(problem, [0.0, 0.0], n=1_000, seed=0) >= 0


@settings(max_examples=50, deadline=None)
@given(w=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       w_star=st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_closed_form_is_even_and_nonnegative(w, w_star):
    w = np.array(w)
    value = objective_cos_gauss_closed(w, w_star, np.diag([1.0, 0.5, 2.0]))
    assert value >= -1e-12
    assert value == objective_cos_gauss_closed(-w, w_star, np.diag([1.0, 0.5, 2.0]))


def test_closed_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    S = np.array([[1.0, 0.3], [0.3, 0.6]])
    h = 1e-6
    for _ in range(10):
        w, w_star = rng.normal(size=2) * 0.3, rng.normal(size=2) * 0.3
        g = grad_cos_gauss_closed(w, w_star, S)
        fd = np.array([(objective_cos_gauss_closed(w + e, w_star, S) - objective_cos_gauss_closed(w - e, w_star, S))
                       / (2 * h) for e in np.eye(2) * h])
        assert np.allclose(g, fd, rtol=1e-7, atol=1e-8)


# ============================================================================
# Landscape
# ============================================================================

@pytest.fixture(scope='module')
def plateau_grid():
    return landscape_grid(cos_problem([2.0, 2.0]), [[-3.0, 3.0], [-3.0, 3.0]], 201)


def test_grid_axis_inserts_anchors():
    axis = grid_axis(-3.0, 3.0, 10, [2.0, -2.0, 7.0])
    assert 2.0 in axis and -2.0 in axis and 7.0 not in axis
    assert np.all(np.diff(axis) > 0)


def test_landscape_minima_and_maximum(plateau_grid):
    grid = plateau_grid
    pts = grid.points()
    flat_pts = pts.reshape(-1, 2)
    order = np.argsort(grid.values.ravel())
    lowest = {tuple(flat_pts[k]) for k in order[:2]}
    assert lowest == {(2.0, 2.0), (-2.0, -2.0)}
    assert grid.values.ravel()[order[1]] <= 1e-3
    assert tuple(flat_pts[np.argmax(grid.values)]) == (0.0, 0.0)
    assert set(grid.anchors) == {(2.0, 2.0), (-2.0, -2.0), (0.0, 0.0)}


def test_landscape_is_flat_away_from_critical_points(plateau_grid):
    centers = [(0.0, 0.0), (2.0, 2.0), (-2.0, -2.0)]
    assert plateau_grid.flat_fraction(centers, 0.5) > 0.85
    assert plateau_grid.flat_fraction(centers, 1.0) > 0.99


def test_landscape_rows_are_row_major(plateau_grid):
    rows = list(plateau_grid.rows())
    assert len(rows) == plateau_grid.values.size
    assert rows[1][0] == rows[0][0] and rows[1][1] > rows[0][1]


def test_monte_carlo_landscape():
    problem = Problem(standard_normal(2), triangle(), [0.5, 0.0], CosineFamily(2))
    grid = landscape_grid(problem, [[-1.0, 1.0], [-1.0, 1.0]], 5, n=2_000, seed=7)
    assert not grid.closed_form
    assert np.all(np.isfinite(grid.values)) and np.all(grid.values >= 0)
    with pytest.raises(UnsupportedError):
        grid.flat_fraction([(0.0, 0.0)], 0.5)
