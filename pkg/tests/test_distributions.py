"""Tests for hardness_lab.distributions."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from hardness_lab.distributions import (
    ConcentrationProfile,
    GaussianComponent,
    GaussianMixture,
    bound_tail_sum,
    density,
    epsilon_profile,
    fourier_overlap,
    isotropic,
    load_mixture,
    mixture_from_spec,
    mixture_profile,
    mixture_to_spec,
    project,
    projected_cdf,
    sample,
    standard_normal,
)
from hardness_lab.errors import DimensionError, InvalidParameterError


def two_bumps(offset=3.0):
    return GaussianMixture((GaussianComponent([-offset, 0.0], 1.0, 0.5),
                            GaussianComponent([offset, 0.0], 1.0, 0.5)))


# ============================================================================
# Construction
# ============================================================================

def test_covariance_forms_expand():
    assert np.allclose(GaussianComponent([0, 0], 2.0).covariance, 2.0 * np.eye(2))
    assert np.allclose(GaussianComponent([0, 0], [1.0, 3.0]).covariance, np.diag([1.0, 3.0]))


def test_rejects_non_pd_and_asymmetric():
    with pytest.raises(InvalidParameterError):
        GaussianComponent([0, 0], [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(InvalidParameterError):
        GaussianComponent([0, 0], [[1.0, 0.5], [0.0, 1.0]])


def test_weights_must_sum_to_one():
    with pytest.raises(InvalidParameterError):
        GaussianMixture((GaussianComponent([0.0], 1.0, 0.5), GaussianComponent([1.0], 1.0, 0.4)))


def test_component_dimensions_must_agree():
    with pytest.raises(DimensionError):
        GaussianMixture((GaussianComponent([0.0], 1.0, 0.5), GaussianComponent([0.0, 0.0], 1.0, 0.5)))


def test_spec_round_trip_and_file(tmp_path):
    spec = {'dim': 2, 'components': [
        {'weight': 0.25, 'mean': [1.0, 0.0], 'cov': {'iso': 2.0}},
        {'weight': 0.75, 'mean': [0.0, 0.0], 'cov': {'full': [[2.0, 0.5], [0.5, 1.0]]}},
    ]}
    path = tmp_path / 'mix.json'
    path.write_text(json.dumps(spec))
    mix = load_mixture(str(path))
    again = mixture_from_spec(mixture_to_spec(mix))
    for a, b in zip(mix.components, again.components):
        assert np.array_equal(a.covariance, b.covariance)
        assert a.weight == b.weight
    assert mix.second_moment() == pytest.approx(0.25 * (1 + 4) + 0.75 * 3)


# ============================================================================
# Sampling
# ============================================================================

def test_standard_normal_sample_mean():
    X = sample(standard_normal(2), 100_000, seed=1)
    assert X.shape == (100_000, 2)
    assert np.all(np.abs(X.mean(axis=0)) < 0.02)


def test_shifted_sample_mean():
    X = sample(isotropic(2, 1.0, mean=[5.0, 0.0]), 100_000, seed=2)
    assert np.allclose(X.mean(axis=0), [5.0, 0.0], atol=0.02)


def test_two_bump_moments():
    X = sample(two_bumps(), 100_000, seed=3)
    assert np.allclose(X.mean(axis=0), 0.0, atol=0.05)
    assert X[:, 0].var() == pytest.approx(10.0, abs=0.2)


def test_sampling_is_deterministic_and_worker_independent():
    mix = two_bumps()
    a = sample(mix, 70_000, seed=11, workers=1)
    b = sample(mix, 70_000, seed=11, workers=4)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != sample(mix, 70_000, seed=12).tobytes()


def test_rejects_empty_sample():
    with pytest.raises(InvalidParameterError):
        sample(standard_normal(1), 0, seed=0)


def test_projection_matches_empirical_cdf():
    mix = GaussianMixture((GaussianComponent([1.0, -1.0, 0.0], [1.0, 2.0, 0.5], 0.3),
                           GaussianComponent([0.0, 2.0, 0.0], 1.0, 0.7)))
    u = np.random.default_rng(0).standard_normal(3)
    u /= np.linalg.norm(u)
    proj = sample(mix, 100_000, seed=4) @ u
    ks = stats.kstest(proj, projected_cdf(mix, u)).statistic
    assert ks <= 0.01
    line = project(mix, u)
    assert line.dim == 1
    assert line.weights.tolist() == [0.3, 0.7]


# ============================================================================
# Density
# ============================================================================

def test_density_textbook_values():
    assert density(standard_normal(1), [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert density(standard_normal(2), [0.0, 0.0]) == pytest.approx(1 / (2 * math.pi))
    mix = GaussianMixture((GaussianComponent([0.0], 1.0, 0.5), GaussianComponent([4.0], 1.0, 0.5)))
    assert density(mix, [2.0]) == pytest.approx(stats.norm.pdf(2.0), rel=1e-12)


def test_density_dimension_mismatch():
    with pytest.raises(DimensionError):
        density(standard_normal(2), [0.0, 0.0, 0.0])


def test_density_integrates_to_one_1d():
    mix = GaussianMixture((GaussianComponent([0.0], 1.0, 0.5), GaussianComponent([4.0], 0.25, 0.5)))
    h = 0.001
    t = np.arange(-14.0, 18.0, h) + h / 2
    assert float(np.sum(density(mix, t[:, None])) * h) == pytest.approx(1.0, abs=1e-6)


def test_density_integrates_to_one_2d():
    mix = standard_normal(2)
    h = 0.02
    t = np.arange(-10.0, 10.0, h) + h / 2
    a, b = np.meshgrid(t, t, indexing='ij')
    pts = np.stack([a.ravel(), b.ravel()], axis=1)
    assert float(np.sum(density(mix, pts)) * h * h) == pytest.approx(1.0, abs=1e-6)


# ============================================================================
# Fourier concentration
# ============================================================================

def test_epsilon_standard_gaussian_1d_matches_numeric_tail():
    eps = epsilon_profile(standard_normal(1).components[0])

    def tail(r):
        num, _ = integrate.quad(lambda xi: math.exp(-8 * math.pi ** 2 * xi * xi), r, np.inf,
                                epsabs=0, epsrel=1e-13)
        full = math.sqrt(1.0 / (8 * math.pi))
        return math.sqrt(2.0 * num / full)

    for r in (0.05, 0.1, 0.2, 0.3):
        assert eps(r) == pytest.approx(tail(r), abs=1e-10)
        assert eps(r) == pytest.approx(math.sqrt(2 * stats.norm.sf(4 * math.pi * r)), rel=1e-10)


def test_epsilon_at_zero_and_far_tail():
    eps = epsilon_profile(standard_normal(1).components[0])
    assert eps(0.0) == 1.0
    assert eps(1.0) < 1e-15
    with pytest.raises(InvalidParameterError):
        eps(-0.1)


@settings(max_examples=20, deadline=None)
@given(variance=st.floats(0.1, 10.0), dim=st.integers(1, 8))
def test_epsilon_is_monotone(variance, dim):
    eps = epsilon_profile(isotropic(dim, variance).components[0])
    values = [eps(r) for r in np.linspace(0.0, 2.0, 41)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_anisotropic_profile_lies_between_isotropic_ones():
    comp = GaussianComponent([0.0, 0.0], [1.0, 2.0])
    aniso = epsilon_profile(comp)
    lo = epsilon_profile(isotropic(2, 2.0).components[0])
    hi = epsilon_profile(isotropic(2, 1.0).components[0])
    values = []
    for r in (0.05, 0.1, 0.2, 0.3):
        v = aniso(r)
        assert lo(r) - 1e-9 <= v <= hi(r) + 1e-9
        values.append(v)
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert aniso(2.0) <= hi(2.0) + 1e-15


def test_mixture_profile_is_pointwise_max():
    mix = GaussianMixture((GaussianComponent([0.0], 1.0, 0.5), GaussianComponent([0.0], 4.0, 0.5)))
    prof = mixture_profile(mix)
    slowest = epsilon_profile(mix.components[0])
    assert prof(0.1) == slowest(0.1)
    assert prof(0.1) > epsilon_profile(mix.components[1])(0.1)


def test_fourier_overlap_closed_form():
    comp = GaussianComponent([0.0, 0.0], [1.0, 2.0])
    assert fourier_overlap(comp, [0.0, 0.0]) == 1.0
    assert fourier_overlap(comp, [0.1, 0.1]) == pytest.approx(math.exp(-2 * math.pi ** 2 * 0.03))


# ============================================================================
# Tail series
# ============================================================================

def test_tail_sum_degenerate_profile():
    assert bound_tail_sum(ConcentrationProfile.zero(), 1.0) == 0.0


def test_tail_sum_geometric():
    assert bound_tail_sum(ConcentrationProfile.geometric(2.0), 1.0, n_max=60) == pytest.approx(1.0, abs=1e-15)


def test_tail_sum_gaussian_is_tiny():
    prof = epsilon_profile(standard_normal(1).components[0])
    assert bound_tail_sum(prof, 3.0) < 1e-100


def test_tail_sum_rejects_bad_radius():
    with pytest.raises(InvalidParameterError):
        bound_tail_sum(ConcentrationProfile.zero(), 0.0)
