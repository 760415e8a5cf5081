"""Tests for hardness_lab.variance_lab."""

import math

import numpy as np
import pytest
from scipy import stats

from hardness_lab.distributions import ConcentrationProfile, epsilon_profile, isotropic, standard_normal
from hardness_lab.errors import DimensionError, InvalidParameterError
from hardness_lab.objective import grad_cos_gauss_parts
from hardness_lab.periodic import constant, cosine, fourier_coeffs, triangle
from hardness_lab.variance_lab import (
    VarianceScanConfig,
    correlation_bound,
    correlation_decay,
    double_sum_bound,
    fit_decay,
    is_monotone_in_r,
    log_trace_variance,
    sample_wstar_sphere,
    variance_of_gradient,
)

RADII = [0.5, 1.0, 1.5, 2.0, 2.5]


# ============================================================================
# Target draws
# ============================================================================

def test_sphere_rows_have_exact_norm():
    W = sample_wstar_sphere(7, 3.5, 1000, seed=0)
    assert np.max(np.abs(np.linalg.norm(W, axis=1) - 3.5)) <= 1e-12


def test_sphere_moments():
    n, d, radius = 100_000, 5, 2.0
    W = sample_wstar_sphere(d, radius, n, seed=1)
    assert np.all(np.abs(W.mean(axis=0)) <= 3 / math.sqrt(n) * radius)
    assert np.mean(W[:, 0] ** 2) == pytest.approx(radius ** 2 / d, rel=0.02)


def test_sphere_rejects_bad_arguments():
    with pytest.raises(InvalidParameterError):
        sample_wstar_sphere(0, 1.0, 10, seed=0)
    with pytest.raises(InvalidParameterError):
        sample_wstar_sphere(3, 0.0, 10, seed=0)


def test_log_trace_variance_survives_underflow():
    samples = 1e-200 * np.array([[1.0, 0.0], [-1.0, 0.0]])
    variance, log_variance = log_trace_variance(samples)
    assert variance == 0.0
    assert log_variance == pytest.approx(2 * math.log(1e-200) + math.log(2.0))
    assert log_trace_variance(np.zeros((3, 2))) == (0.0, -math.inf)


# ============================================================================
# Variance scan
# ============================================================================

def test_config_validation():
    with pytest.raises(InvalidParameterError):
        VarianceScanConfig(dims=[3], radii=[1.0], seed=0, n_wstar=5)
    with pytest.raises(InvalidParameterError):
        VarianceScanConfig(dims=[3], radii=[0.0], seed=0)
    with pytest.raises(DimensionError):
        VarianceScanConfig(dims=[3, 4], radii=[1.0], seed=0, probe=[0.0, 0.0, 0.0])
    config = VarianceScanConfig.from_dict({'dims': [2], 'radii': [1.0], 'seed': 3, 'unused': True})
    assert config.n_wstar == 200


def test_variance_vanishes_at_origin():
    config = VarianceScanConfig(dims=[4], radii=[0.5, 1.0], seed=2, probe=[0.0] * 4)
    report = variance_of_gradient(config)
    assert all(c.variance == 0.0 for c in report.cells)
    assert all(c.closed_form for c in report.cells)


@pytest.fixture(scope='module')
def decay_report():
    return variance_of_gradient(VarianceScanConfig(dims=[10], radii=RADII, seed=3, probe_scale=1.0))


def test_variance_decays_in_r(decay_report):
    cells = {c.r: c for c in decay_report.for_dim(10)}
    assert cells[2.0].variance * 1e3 <= cells[0.5].variance
    assert is_monotone_in_r(decay_report, 10)


def test_log_variance_is_linear_in_r_squared(decay_report):
    fit = fit_decay(decay_report)['log_variance_vs_r2']['10']
    assert fit['slope'] < 0
    assert fit['r_squared'] >= 0.95


def test_bound_columns(decay_report):
    for cell in decay_report.cells:
        assert cell.exp_term == pytest.approx(math.exp(-10))
        assert cell.bound_value == pytest.approx(cell.grad_norm_bound * (cell.exp_term + cell.bound_series))
        assert cell.mc_floor == 0.0
    rows = decay_report.to_rows()
    assert {'d', 'r', 'variance', 'mc_floor', 'bound_series', 'exp_term'} <= set(rows[0])


def test_monte_carlo_scan_is_worker_independent():
    base = dict(dims=[3], radii=[0.5, 1.0], seed=4, n_wstar=10, n_x=2_000, psi={'kind': 'triangle'})
    one = variance_of_gradient(VarianceScanConfig(**base, workers=1))
    many = variance_of_gradient(VarianceScanConfig(**base, workers=2))
    assert one.to_rows() == many.to_rows()
    assert all(not c.closed_form and c.mc_floor >= 0 and c.variance >= 0 for c in one.cells)


def test_variance_is_rotation_invariant():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    w = rng.normal(size=6) * 0.2
    w_stars = sample_wstar_sphere(6, 0.6, 50, seed=6)
    mix = standard_normal(6)
    _, plain = grad_cos_gauss_parts(w, w_stars, mix)
    _, rotated = grad_cos_gauss_parts(Q @ w, w_stars @ Q.T, mix)
    assert log_trace_variance(rotated)[0] == pytest.approx(log_trace_variance(plain)[0], rel=1e-9)


# ============================================================================
# Bound calculators and correlation decay
# ============================================================================

@pytest.mark.parametrize('psi', [cosine(), triangle()])
def test_double_sum_never_exceeds_series(psi):
    profile = epsilon_profile(standard_normal(1).components[0])
    for r in (0.05, 0.1, 0.3):
        lhs, rhs = double_sum_bound(fourier_coeffs(psi, 40), profile, r)
        assert 0 <= lhs <= rhs + 1e-15


def test_double_sum_with_zero_profile():
    assert double_sum_bound(fourier_coeffs(cosine(), 5), ConcentrationProfile.zero(), 1.0) == (0.0, 0.0)


def test_correlation_bound_formula():
    assert correlation_bound(ConcentrationProfile.zero(), 3, 1.0, 0.5) == pytest.approx(5 * math.exp(-3))


def test_constant_target_has_no_correlation():
    est = correlation_decay(standard_normal(4), constant(0.4), {'kind': 'cosine', 'norm': 0.5},
                            r=0.25, n_wstar=50, n_x=1_000, seed=7)
    assert est.closed_form and est.value == 0.0
    mc = correlation_decay(standard_normal(4), constant(0.4), {'kind': 'sign'},
                           r=0.25, n_wstar=50, n_x=1_000, seed=7)
    assert not mc.closed_form and mc.value == 0.0


def test_correlation_decays_with_radius():
    mix = standard_normal(10)
    q = {'kind': 'cosine', 'norm': 0.5}
    far = correlation_decay(mix, cosine(), q, r=3.0, n_wstar=200, n_x=1_000, seed=8)
    near = correlation_decay(mix, cosine(), q, r=0.25, n_wstar=200, n_x=1_000, seed=8)
    assert far.value <= 1e-6
    assert near.value >= 1e3 * far.value
    assert near.value > 0
    assert far.q_norm_sq == pytest.approx(0.5 * (1 + math.exp(-2 * math.pi ** 2)))


def test_sign_probe_agrees_with_closed_form_scale():
    mix = standard_normal(2)
    est = correlation_decay(mix, cosine(), {'kind': 'sign', 'v': [1.0, 0.0]},
                            r=0.1, n_wstar=20, n_x=20_000, seed=9)
    assert est.q_norm_sq == 1.0
    assert abs(est.value) <= 1.0


def test_unknown_probe_kind():
    with pytest.raises(InvalidParameterError):
        correlation_decay(standard_normal(2), cosine(), {'kind': 'bump'}, r=1.0, n_wstar=10, n_x=100, seed=0)


def test_sphere_directions_are_uniform():
    W = sample_wstar_sphere(3, 1.0, 20_000, seed=10)
    # the first coordinate of a uniform point on S^2 is uniform on [-1, 1]
    assert stats.kstest(W[:, 0], stats.uniform(-1, 2).cdf).statistic <= 0.015
