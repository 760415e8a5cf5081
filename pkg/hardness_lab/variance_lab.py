"""
Gradient Variance over Random Targets
=====================================

Var_{w*}(grad F_{w*}(w)) for w* uniform on the sphere of radius 2r, the
matching right-hand side c2 G_w (exp(-c3 d) + sum_n eps(n r)), and the
correlation-decay estimate E_{w*}[(E_x[q psi(<w*, x>)] - a_0 E_x[q])^2].
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .config import BOUND_C2, BOUND_C3, DEFAULT_SERIES_TERMS
from .distributions import (
    ConcentrationProfile,
    GaussianMixture,
    bound_tail_sum,
    isotropic,
    mixture_profile,
    sample,
)
from .errors import DimensionError, InvalidParameterError
from .objective import Problem, cos_mean, grad_cos_gauss_parts
from .parallel import derive_seed, ordered_map
from .periodic import FourierCoefficients, PeriodicFn, evaluate, fourier_coeffs, psi_from_spec
from .predictors import CosineFamily, cosine_grad_norm_exact, estimate_grad_norm_bound

logger = logging.getLogger(__name__)


def sample_wstar_sphere(d: int, radius: float, n: int, seed: int) -> np.ndarray:
    """n rows uniform on the sphere of the given radius in R^d."""
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    if not radius > 0:
        raise InvalidParameterError(f"radius must be positive, got {radius}")
    g = np.random.default_rng(seed).standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return radius * (g / norms)


def log_trace_variance(samples: np.ndarray) -> Tuple[float, float]:
    """
    (variance, log variance) of vector samples, variance = trace of the covariance.

    Computed on samples rescaled by their largest magnitude so the logarithm
    stays finite when the variance itself underflows.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] < 2:
        raise InvalidParameterError("need at least two samples for a variance")
    scale = float(np.max(np.abs(samples)))
    if scale == 0.0:
        return 0.0, -math.inf
    scaled = samples / scale
    v = float(np.sum(np.var(scaled, axis=0, ddof=1)))
    if v == 0.0:
        return 0.0, -math.inf
    return scale * scale * v, 2.0 * math.log(scale) + math.log(v)


# ============================================================================
# Variance scan
# ============================================================================

@dataclass
class VarianceScanConfig:
    dims: List[int]
    radii: List[float]
    seed: int
    n_wstar: int = 200
    n_x: int = 10_000
    probe_scale: float = 1.0
    probe: Optional[List[float]] = None
    variance: float = 1.0
    psi: Dict[str, Any] = field(default_factory=lambda: {'kind': 'cosine'})
    c2: float = BOUND_C2
    c3: float = BOUND_C3
    workers: int = 1

    def __post_init__(self):
        if self.n_wstar < 10:
            raise InvalidParameterError(f"n_wstar must be >= 10, got {self.n_wstar}")
        if not self.radii or any(r <= 0 for r in self.radii):
            raise InvalidParameterError(f"radii must be positive, got {self.radii}")
        if not self.dims or any(d < 1 for d in self.dims):
            raise InvalidParameterError(f"dimensions must be >= 1, got {self.dims}")
        if self.probe is not None and any(len(self.probe) != d for d in self.dims):
            raise DimensionError("an explicit probe needs every scanned dimension to match its length")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'VarianceScanConfig':
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def probe_point(self, d: int) -> np.ndarray:
        """Explicit probe, or a random unit direction (seeded by (seed, d)) times probe_scale."""
        if self.probe is not None:
            return np.asarray(self.probe, dtype=float)
        u = np.random.default_rng(derive_seed(self.seed, d)).standard_normal(d)
        return self.probe_scale * u / np.linalg.norm(u)


@dataclass
class VarianceCell:
    d: int
    r: float
    variance: float
    log_variance: float
    mc_floor: float
    bound_series: float
    exp_term: float
    grad_norm_bound: float
    bound_value: float
    closed_form: bool


@dataclass
class VarianceReport:
    cells: List[VarianceCell]
    c2: float
    c3: float

    def for_dim(self, d: int) -> List[VarianceCell]:
        return sorted((c for c in self.cells if c.d == d), key=lambda c: c.r)

    def to_rows(self) -> List[Dict[str, Any]]:
        return [asdict(c) for c in self.cells]


def _mc_gradients(problem: Problem, w: np.ndarray, w_stars: np.ndarray,
                  n_x: int, seed: int) -> Tuple[np.ndarray, float]:
    """Gradients at w for every w* on one shared sample, plus the split-half noise floor."""
    X = sample(problem.mixture, n_x, seed)
    f = problem.family.predict(w, X)
    df = problem.family.grad_w(w, X)
    residual = f[:, None] - evaluate(problem.psi, X @ w_stars.T)
    grads = 2.0 * residual.T @ df / n_x
    half = n_x // 2
    g1 = 2.0 * residual[:half].T @ df[:half] / half
    g2 = 2.0 * residual[half:].T @ df[half:] / (n_x - half)
    floor = float(np.mean(np.sum((g1 - g2) ** 2, axis=1)) / 4.0)
    return grads, floor


def _scan_cell(config: VarianceScanConfig, d: int, r: float, index: int) -> VarianceCell:
    mixture = isotropic(d, config.variance)
    psi = psi_from_spec(config.psi)
    family = CosineFamily(d)
    w = config.probe_point(d)
    w_stars = sample_wstar_sphere(d, 2.0 * r, config.n_wstar, derive_seed(config.seed, d, index))
    problem = Problem(mixture, psi, w_stars[0], family)

    if problem.has_closed_form:
        # the w*-free part of the gradient is common to every draw
        _, target = grad_cos_gauss_parts(w, w_stars, mixture)
        variance, log_variance = log_trace_variance(target)
        floor = 0.0
        g_w = cosine_grad_norm_exact(w, mixture)
    else:
        grads, floor = _mc_gradients(problem, w, w_stars, config.n_x, derive_seed(config.seed, d, index, 1))
        variance, log_variance = log_trace_variance(grads)
        g_w = estimate_grad_norm_bound(family, w, mixture, max(config.n_x, 100),
                                       derive_seed(config.seed, d, index, 2)).value

    series = bound_tail_sum(mixture_profile(mixture), r)
    exp_term = math.exp(-config.c3 * d)
    return VarianceCell(d=d, r=float(r), variance=variance, log_variance=log_variance, mc_floor=floor,
                        bound_series=series, exp_term=exp_term, grad_norm_bound=g_w,
                        bound_value=config.c2 * g_w * (exp_term + series),
                        closed_form=problem.has_closed_form)


def variance_of_gradient(config: VarianceScanConfig) -> VarianceReport:
    """Empirical Var_{w*}(grad F(w)) and the bound's right-hand side for every (d, r)."""
    jobs = [(d, r, i) for d in config.dims for i, r in enumerate(config.radii)]
    cells = ordered_map(lambda job: _scan_cell(config, *job), jobs, config.workers, desc='variance cells')
    for c in cells:
        logger.info("d=%d r=%g variance=%.3e (log %.2f) bound=%.3e", c.d, c.r, c.variance,
                    c.log_variance, c.bound_value)
    return VarianceReport(cells, config.c2, config.c3)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Dict[str, float]:
    """Least-squares line y = slope x + intercept with R^2."""
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return {'slope': float(res.slope), 'intercept': float(res.intercept),
            'r_squared': float(res.rvalue ** 2)}


def fit_decay(report: VarianceReport) -> Dict[str, Any]:
    """
    Log-variance regressions: against r^2 for each d, and against d for each r.

    Cells with zero variance are left out; a regression needs two distinct x values.
    """
    def fits(groups):
        out = {}
        for key, pts in groups.items():
            pts = [(x, y) for x, y in pts if math.isfinite(y)]
            if len({x for x, _ in pts}) >= 2:
                out[str(key)] = linear_fit(*zip(*pts))
        return out

    by_d: Dict[int, List[Tuple[float, float]]] = {}
    by_r: Dict[float, List[Tuple[float, float]]] = {}
    for c in report.cells:
        by_d.setdefault(c.d, []).append((c.r ** 2, c.log_variance))
        by_r.setdefault(c.r, []).append((float(c.d), c.log_variance))
    return {'log_variance_vs_r2': fits(by_d), 'log_variance_vs_d': fits(by_r)}


def is_monotone_in_r(report: VarianceReport, d: int, n_sigma: float = 2.0) -> bool:
    """Variance non-increasing in r for dimension d, up to n_sigma noise floors."""
    cells = report.for_dim(d)
    for a, b in zip(cells, cells[1:]):
        slack = n_sigma * (a.mc_floor + b.mc_floor)
        if b.variance > a.variance + slack:
            return False
    return True


# ============================================================================
# Bound calculators
# ============================================================================

def double_sum_bound(coeffs: FourierCoefficients, profile: ConcentrationProfile, r: float,
                     n_max: int = DEFAULT_SERIES_TERMS) -> Tuple[float, float]:
    """
    (sum_{z1 != z2} |a_z1| |a_z2| eps(r |z1 - z2|),  2 sum_{n >= 1} eps(n r)).

    The first never exceeds the second when sum |a_z|^2 <= 1.
    """
    mags = np.abs(coeffs.values)
    # lag-k autocorrelation of |a|, k = 1 .. 2 z_max
    auto = np.correlate(mags, mags, mode='full')[mags.size:]
    lags = np.arange(1, auto.size + 1)
    eps = np.array([profile(k * r) for k in lags])
    lhs = 2.0 * math.fsum(auto * eps)
    return lhs, 2.0 * bound_tail_sum(profile, r, n_max)


def correlation_bound(profile: ConcentrationProfile, d: int, r: float, q_norm_sq: float,
                      n_max: int = DEFAULT_SERIES_TERMS) -> float:
    """10 ||q||^2 (exp(-d) + sum_n eps(n r))."""
    return 10.0 * q_norm_sq * (math.exp(-d) + bound_tail_sum(profile, r, n_max))


# ============================================================================
# Correlation decay
# ============================================================================

@dataclass
class CorrelationEstimate:
    value: float
    std_error: float
    bound: float
    q_norm_sq: float
    closed_form: bool
    r: float
    n_wstar: int


def _probe_direction(q_spec: Dict[str, Any], d: int, seed: int) -> np.ndarray:
    if 'v' in q_spec:
        v = np.asarray(q_spec['v'], dtype=float)
        if v.shape != (d,):
            raise DimensionError(f"probe v has shape {v.shape}, expected ({d},)")
        return v
    u = np.random.default_rng(derive_seed(seed, 7)).standard_normal(d)
    return float(q_spec.get('norm', 1.0)) * u / np.linalg.norm(u)


def _probe_function(q_spec: Dict[str, Any], v: np.ndarray):
    kind = q_spec.get('kind', 'cosine')
    if kind == 'cosine':
        return lambda X: np.cos(2.0 * math.pi * (X @ v))
    if kind == 'sign':
        return lambda X: np.where(X @ v >= 0, 1.0, -1.0)
    raise InvalidParameterError(f"unknown probe function kind '{kind}'")


def correlation_decay(mixture: GaussianMixture, psi: PeriodicFn, q_spec: Dict[str, Any],
                      r: float, n_wstar: int, n_x: int, seed: int) -> CorrelationEstimate:
    """
    E_{w*}[(E_x[q(x) psi(<w*, x>)] - a_0 E_x[q(x)])^2] with ||w*|| = 2r.

    Cosine probes q(x) = cos(2 pi <v, x>) under zero-mean Gaussian mixtures use
    the exact inner expectation sum_{z != 0} a_z (chi(v + z w*) + chi(v - z w*)) / 2.
    Otherwise the inner expectation is estimated on two independent halves
    and their product is averaged, which is unbiased for the square.
    """
    d = mixture.dim
    v = _probe_direction(q_spec, d, seed)
    q = _probe_function(q_spec, v)
    coeffs = fourier_coeffs(psi)
    a0 = coeffs[0].real
    w_stars = sample_wstar_sphere(d, 2.0 * r, n_wstar, derive_seed(seed, 1))
    closed = q_spec.get('kind', 'cosine') == 'cosine' and mixture.is_zero_mean

    if closed:
        nonzero = {z: a for z, a in coeffs.nonzero().items() if z != 0}
        inner = np.zeros(n_wstar)
        for comp in mixture.components:
            S = comp.covariance
            for z, a in nonzero.items():
                term = 0.5 * (cos_mean(v + z * w_stars, S) + cos_mean(v - z * w_stars, S))
                inner += comp.weight * (a * term).real
        per_target = inner ** 2
        q_norm_sq = sum(c.weight * 0.5 * (1.0 + float(cos_mean(2.0 * v, c.covariance)))
                        for c in mixture.components)
    else:
        X = sample(mixture, n_x, derive_seed(seed, 2))
        qx = q(X)
        centred = evaluate(psi, X @ w_stars.T) - a0
        half = n_x // 2
        inner_a = (qx[:half, None] * centred[:half]).mean(axis=0)
        inner_b = (qx[half:, None] * centred[half:]).mean(axis=0)
        per_target = inner_a * inner_b
        q_norm_sq = float(np.mean(qx ** 2))

    value = float(np.mean(per_target))
    std_error = float(np.std(per_target, ddof=1) / math.sqrt(n_wstar)) if n_wstar > 1 else 0.0
    bound = correlation_bound(mixture_profile(mixture), d, r, q_norm_sq)
    logger.debug("correlation r=%g value=%.3e bound=%.3e closed=%s", r, value, bound, closed)
    return CorrelationEstimate(value, std_error, bound, q_norm_sq, closed, float(r), n_wstar)
