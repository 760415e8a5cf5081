"""Tests for hardness_lab.reductions."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardness_lab.errors import DimensionError, InvalidParameterError
from hardness_lab.predictors import ClippedReluSum
from hardness_lab.reductions import (
    HalfspaceIntersection,
    cube_block,
    exhaustive_check,
    intersection_eval,
    lift_boolean,
    pad_independent,
    random_instance,
    round_and_bound,
    to_clipped_network,
)


# ============================================================================
# Intersections and networks
# ============================================================================

def test_intersection_examples():
    h = HalfspaceIntersection([[1, 1]], [2])
    assert intersection_eval(h, [1, 1]) == 1
    assert intersection_eval(h, [1, 0]) == 0
    always = HalfspaceIntersection([[0, 0, 0]], [0])
    assert np.all(intersection_eval(always, cube_block(3, 0, 8)) == 1)


def test_intersection_matches_constraint_brute_force():
    h = random_instance(10, 3, seed=0)
    for x in itertools.product((0, 1), repeat=10):
        expected = all(sum(w * xi for w, xi in zip(row, x)) >= b
                       for row, b in zip(h.weights.tolist(), h.thresholds.tolist()))
        assert intersection_eval(h, list(x)) == int(expected)


def test_single_halfspace_network():
    h = HalfspaceIntersection([[1, 0]], [1])
    net = to_clipped_network(h)
    X = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert net.predict(lift_boolean(X)).tolist() == [1, 0, 1, 0]


def test_tautology_gives_zero_network():
    h = HalfspaceIntersection(np.zeros((3, 4), dtype=int), np.zeros(3, dtype=int))
    X = lift_boolean(cube_block(4, 0, 16))
    assert np.all(to_clipped_network(h).predict(X) == 0)


def test_bounded_weights_are_exact():
    h = random_instance(8, 4, seed=1, weight_bound=5)
    assert np.max(np.abs(h.weights)) <= 5
    report = exhaustive_check(h)
    assert report.n_points == 256
    assert report.exact and report.first_mismatch is None


def test_largest_cube_is_exact():
    report = exhaustive_check(random_instance(14, 5, seed=2), workers=2, block=4096)
    assert report.n_points == 1 << 14
    assert report.exact


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d_minus_1=st.integers(1, 10), n=st.integers(1, 6))
def test_reduction_is_exact_on_random_instances(seed, d_minus_1, n):
    assert exhaustive_check(random_instance(d_minus_1, n, seed)).mismatches == 0


def test_exhaustive_check_is_block_independent():
    h = random_instance(9, 3, seed=3)
    assert exhaustive_check(h, block=7).to_dict() == exhaustive_check(h, workers=3, block=64).to_dict()


def test_network_stays_integer():
    net = to_clipped_network(random_instance(5, 3, seed=4))
    out = net.predict(lift_boolean(cube_block(5, 0, 32)))
    assert out.dtype.kind == 'i'


def test_cube_block_order():
    assert cube_block(3, 0, 8).tolist() == [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0],
                                            [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1]]
    assert cube_block(3, 5, 6).tolist() == [[1, 0, 1]]


def test_instance_validation():
    with pytest.raises(InvalidParameterError):
        HalfspaceIntersection([[0.5, 1.0]], [1])
    with pytest.raises(DimensionError):
        HalfspaceIntersection([[1, 1]], [1, 2])
    with pytest.raises(InvalidParameterError):
        HalfspaceIntersection.from_dict({'weights': [[1]]})
    h = HalfspaceIntersection([[1, 1]], [2])
    with pytest.raises(InvalidParameterError):
        intersection_eval(h, [2, 0])
    with pytest.raises(DimensionError):
        intersection_eval(h, [1, 0, 1])
    assert HalfspaceIntersection.from_dict(h.to_dict()).weights.tolist() == [[1, 1]]


def test_default_weight_bound_is_d():
    h = random_instance(6, 50, seed=5)
    assert np.max(np.abs(h.weights)) <= 7 and np.max(np.abs(h.thresholds)) <= 7
    assert h.max_norm <= 7 * np.sqrt(7)


# ============================================================================
# Padding
# ============================================================================

def test_padding_zero_matrix():
    padded = pad_independent(np.zeros((3, 2)))
    assert padded.W_tilde.shape == (5, 2)
    assert padded.s_min == pytest.approx(1.0, abs=1e-15)


def test_padding_preserves_outputs_exactly():
    rng = np.random.default_rng(6)
    W = rng.integers(-4, 5, size=(6, 3))
    padded = pad_independent(W)
    X = rng.integers(-3, 4, size=(10_000, 6))
    gap = padded.network().predict(padded.lift(X)) - ClippedReluSum(W).predict(X)
    assert np.max(np.abs(gap)) == 0


def test_padding_preserves_float_outputs():
    rng = np.random.default_rng(7)
    W = rng.standard_normal((6, 3))
    padded = pad_independent(W)
    X = rng.standard_normal((10_000, 6))
    assert np.max(np.abs(padded.network().predict(padded.lift(X)) - ClippedReluSum(W).predict(X))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.integers(1, 8), n=st.integers(1, 6))
def test_padding_singular_value_identity(seed, d, n):
    W = np.random.default_rng(seed).standard_normal((d, n))
    padded = pad_independent(W)
    lam = float(np.linalg.eigvalsh(W.T @ W)[0])
    assert padded.s_min >= 1.0 - 1e-12
    assert abs(padded.s_min ** 2 - (lam + 1.0)) <= 1e-10 * max(1.0, lam + 1.0)


# ============================================================================
# Rounding
# ============================================================================

def test_rounding_perfect_predictor():
    g = np.random.default_rng(8).integers(0, 2, size=100)
    report = round_and_bound(1.0 - g, g)
    assert report.disagreement == 0.0 and report.mse == 0.0 and report.holds


def test_rounding_at_one_half():
    g = np.random.default_rng(9).integers(0, 2, size=1_000)
    report = round_and_bound(np.full(1_000, 0.5), g)
    assert report.disagreement == pytest.approx(np.mean(g == 0))
    assert report.mse == 0.25
    assert report.bound == 2.0 and report.holds


def test_rounding_on_many_random_pairs():
    rng = np.random.default_rng(10)
    report = round_and_bound(rng.uniform(0, 1, 100_000), rng.integers(0, 2, 100_000))
    assert report.holds
    assert report.n == 100_000


@settings(max_examples=100, deadline=None)
@given(pairs=st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=50))
def test_rounding_inequality_always_holds(pairs):
    f, g = zip(*pairs)
    assert round_and_bound(f, g).holds


def test_rounding_validation():
    with pytest.raises(DimensionError):
        round_and_bound([0.1, 0.2], [1])
    with pytest.raises(InvalidParameterError):
        round_and_bound([], [])
    with pytest.raises(InvalidParameterError):
        round_and_bound([0.1], [2])
