"""
Input Distributions
===================

Gaussian mixtures used as input densities phi^2, their seeded samplers and
densities, and the Fourier-concentration profile eps(r) of each component's
square root.

Fourier convention: f_hat(xi) = int exp(-2 pi i <x, xi>) f(x) dx. For a
component N(mu, Sigma), |phi_hat(xi)|^2 is proportional to
exp(-8 pi^2 xi' Sigma xi), i.e. a Gaussian density with covariance
(16 pi^2 Sigma)^{-1}; eps(r)^2 is its mass outside the ball of radius r.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from .config import (
    DEFAULT_SERIES_TERMS,
    IMHOF_FLOOR,
    SYMMETRY_TOL,
    WEIGHT_SUM_TOL,
)
from .errors import DimensionError, InvalidParameterError
from .parallel import chunk_sizes, ordered_map, spawn_generators

logger = logging.getLogger(__name__)

FOURIER_SCALE = 16.0 * math.pi ** 2


# ============================================================================
# Domain Types
# ============================================================================

def _as_covariance(cov: Any, dim: int) -> np.ndarray:
    """Expand isotropic (scalar) or diagonal (1-D) forms to a full matrix."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        return float(cov) * np.eye(dim)
    if cov.ndim == 1:
        if cov.size != dim:
            raise DimensionError(f"diagonal covariance has {cov.size} entries, expected {dim}")
        return np.diag(cov)
    if cov.shape != (dim, dim):
        raise DimensionError(f"covariance shape {cov.shape}, expected {(dim, dim)}")
    return cov.copy()


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """One Gaussian component N(mean, covariance) with mixture weight."""

    mean: np.ndarray
    covariance: np.ndarray
    weight: float = 1.0
    eigenvalues: np.ndarray = field(init=False, repr=False)
    cholesky: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.ndim != 1:
            raise DimensionError("component mean must be a vector")
        cov = _as_covariance(self.covariance, mean.size)
        scale = max(np.max(np.abs(cov)), 1.0)
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise InvalidParameterError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if not np.all(np.isfinite(eig)) or eig[0] <= 0:
            raise InvalidParameterError(f"covariance is not positive definite (min eigenvalue {eig[0]:.3e})")
        if not self.weight > 0:
            raise InvalidParameterError(f"component weight must be positive, got {self.weight}")

        object.__setattr__(self, 'mean', _frozen(mean))
        object.__setattr__(self, 'covariance', _frozen(cov))
        object.__setattr__(self, 'weight', float(self.weight))
        object.__setattr__(self, 'eigenvalues', _frozen(eig))
        object.__setattr__(self, 'cholesky', _frozen(np.linalg.cholesky(cov)))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def is_zero_mean(self) -> bool:
        return not np.any(self.mean)

    @property
    def is_isotropic(self) -> bool:
        off = self.covariance - np.diag(np.diag(self.covariance))
        lam = self.eigenvalues
        return not np.any(off) and lam[-1] - lam[0] <= 1e-12 * lam[-1]

    @classmethod
    def from_spec(cls, spec: Dict[str, Any], dim: int) -> 'GaussianComponent':
        """Build from ``{"weight", "mean", "cov": {"iso"|"diag"|"full": ...}}``."""
        cov_spec = spec.get('cov', {'iso': 1.0})
        if len(cov_spec) != 1:
            raise InvalidParameterError(f"cov must have exactly one of iso/diag/full: {cov_spec}")
        (form, value), = cov_spec.items()
        if form not in ('iso', 'diag', 'full'):
            raise InvalidParameterError(f"unknown covariance form: {form}")
        mean = spec.get('mean', [0.0] * dim)
        if len(mean) != dim:
            raise DimensionError(f"mean has length {len(mean)}, expected {dim}")
        return cls(mean=mean, covariance=_as_covariance(value, dim), weight=spec.get('weight', 1.0))

    def to_spec(self) -> Dict[str, Any]:
        if self.is_isotropic:
            cov = {'iso': float(self.covariance[0, 0])}
        elif not np.any(self.covariance - np.diag(np.diag(self.covariance))):
            cov = {'diag': np.diag(self.covariance).tolist()}
        else:
            cov = {'full': self.covariance.tolist()}
        return {'weight': self.weight, 'mean': self.mean.tolist(), 'cov': cov}


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite mixture of Gaussian components sharing one dimension."""

    components: Tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidParameterError("mixture needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DimensionError(f"components have different dimensions: {sorted(dims)}")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidParameterError(f"mixture weights sum to {total!r}, not 1")
        object.__setattr__(self, 'components', comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def is_zero_mean(self) -> bool:
        return all(c.is_zero_mean for c in self.components)

    def second_moment(self) -> float:
        """E||x||^2 = sum_i alpha_i (||mu_i||^2 + tr Sigma_i)."""
        return math.fsum(c.weight * (float(c.mean @ c.mean) + float(np.trace(c.covariance)))
                         for c in self.components)


@dataclass(frozen=True)
class ConcentrationProfile:
    """A non-increasing map r -> eps(r) in [0, 1]."""

    evaluator: Callable[[float], float]
    description: str = ''

    def __call__(self, r: float) -> float:
        if r < 0:
            raise InvalidParameterError(f"radius must be non-negative, got {r}")
        return float(min(1.0, max(0.0, self.evaluator(float(r)))))

    @classmethod
    def zero(cls) -> 'ConcentrationProfile':
        return cls(lambda r: 1.0 if r == 0 else 0.0, 'degenerate')

    @classmethod
    def geometric(cls, base: float) -> 'ConcentrationProfile':
        """eps(r) = base^{-r}."""
        return cls(lambda r: base ** (-r), f'geometric(base={base})')


# ============================================================================
# Construction helpers
# ============================================================================

def standard_normal(dim: int) -> GaussianMixture:
    return isotropic(dim, 1.0)


def isotropic(dim: int, variance: float = 1.0, mean: Optional[Sequence[float]] = None) -> GaussianMixture:
    if dim < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
    mean = np.zeros(dim) if mean is None else mean
    return GaussianMixture((GaussianComponent(mean, variance, 1.0),))


def mixture_from_spec(spec: Dict[str, Any]) -> GaussianMixture:
    """Parse ``{"dim": d, "components": [...]}``."""
    try:
        dim = int(spec['dim'])
        comps = spec['components']
    except (KeyError, TypeError) as e:
        raise InvalidParameterError(f"mixture spec needs 'dim' and 'components': {e}") from e
    return GaussianMixture(tuple(GaussianComponent.from_spec(c, dim) for c in comps))


def mixture_to_spec(mixture: GaussianMixture) -> Dict[str, Any]:
    return {'dim': mixture.dim, 'components': [c.to_spec() for c in mixture.components]}


def load_mixture(path: str) -> GaussianMixture:
    with open(path, 'r', encoding='utf-8') as f:
        return mixture_from_spec(json.load(f))


# ============================================================================
# Sampling and density
# ============================================================================

def _sample_chunk(mixture: GaussianMixture, size: int, rng: np.random.Generator) -> np.ndarray:
    comps = mixture.components
    if len(comps) > 1:
        labels = rng.choice(len(comps), size=size, p=mixture.weights)
    else:
        labels = np.zeros(size, dtype=int)
    z = rng.standard_normal((size, mixture.dim))
    out = np.empty_like(z)
    for k, comp in enumerate(comps):
        idx = labels == k
        out[idx] = comp.mean + z[idx] @ comp.cholesky.T
    return out


def sample_chunks(mixture: GaussianMixture, n: int, seed: int, workers: int = 1) -> List[np.ndarray]:
    """The seeded chunks that ``sample`` concatenates."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1 samples, got {n}")
    sizes = chunk_sizes(n)
    rngs = spawn_generators(seed, len(sizes))
    return ordered_map(lambda job: _sample_chunk(mixture, *job), list(zip(sizes, rngs)), workers)


def iter_sample_chunks(mixture: GaussianMixture, n: int, seed: int) -> Iterator[np.ndarray]:
    """Lazily yield the same chunks as ``sample_chunks``."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1 samples, got {n}")
    sizes = chunk_sizes(n)
    for size, rng in zip(sizes, spawn_generators(seed, len(sizes))):
        yield _sample_chunk(mixture, size, rng)


def map_sample_chunks(mixture: GaussianMixture, n: int, seed: int,
                      fn: Callable[[np.ndarray], Any], workers: int = 1) -> List[Any]:
    """Apply ``fn`` to each seeded chunk without holding all samples at once."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1 samples, got {n}")
    sizes = chunk_sizes(n)
    jobs = list(zip(sizes, spawn_generators(seed, len(sizes))))
    return ordered_map(lambda job: fn(_sample_chunk(mixture, *job)), jobs, workers)


def sample(mixture: GaussianMixture, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """
    Draw n i.i.d. samples (rows) from the mixture.

    Output is bit-identical for identical (mixture, n, seed) whatever the
    worker count.
    """
    return np.concatenate(sample_chunks(mixture, n, seed, workers), axis=0)


def density(mixture: GaussianMixture, x: Any) -> Any:
    """Mixture density at a point (d,) or at each row of an (n, d) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.ndim != 2 or X.shape[1] != mixture.dim:
        raise DimensionError(f"point dimension {X.shape[-1]} does not match mixture dimension {mixture.dim}")
    total = np.zeros(X.shape[0])
    for c in mixture.components:
        pdf = stats.multivariate_normal(mean=c.mean, cov=c.covariance).pdf(X)
        total += c.weight * np.atleast_1d(pdf).reshape(-1)
    return float(total[0]) if single else total


def project(mixture: GaussianMixture, u: Sequence[float]) -> GaussianMixture:
    """Law of <u, x> for x drawn from the mixture."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mixture.dim,):
        raise DimensionError(f"direction has shape {u.shape}, expected ({mixture.dim},)")
    return GaussianMixture(tuple(
        GaussianComponent([float(u @ c.mean)], [[float(u @ c.covariance @ u)]], c.weight)
        for c in mixture.components
    ))


def projected_cdf(mixture: GaussianMixture, u: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """Analytic CDF of <u, x>."""
    line = project(mixture, u)
    means = np.array([c.mean[0] for c in line.components])
    stds = np.sqrt([c.covariance[0, 0] for c in line.components])
    weights = line.weights

    def cdf(t):
        t = np.asarray(t, dtype=float)[..., None]
        return (weights * stats.norm.cdf((t - means) / stds)).sum(axis=-1)

    return cdf


# ============================================================================
# Fourier concentration
# ============================================================================

def _isotropic_tail(variance: float, dim: int) -> Callable[[float], float]:
    # ||xi||^2 ~ chi2_d / (16 pi^2 variance)
    def eps(r: float) -> float:
        if r == 0:
            return 1.0
        return math.sqrt(stats.chi2.sf(FOURIER_SCALE * variance * r * r, dim))
    return eps


def _imhof_sf(t: float, c: np.ndarray) -> float:
    """P(sum_i c_i Z_i^2 > t) by Imhof's one-dimensional inversion integral."""
    def integrand(u):
        if u == 0.0:
            return 0.5 * (c.sum() - t)
        theta = 0.5 * np.arctan(c * u).sum() - 0.5 * t * u
        rho = np.prod((1.0 + (c * u) ** 2) ** 0.25)
        return math.sin(theta) / (u * rho)

    value, _ = integrate.quad(integrand, 0.0, np.inf, limit=500, epsabs=1e-13, epsrel=1e-10)
    return min(1.0, max(0.0, 0.5 + value / math.pi))


def _anisotropic_tail(eigenvalues: np.ndarray) -> Callable[[float], float]:
    c = 1.0 / (FOURIER_SCALE * eigenvalues)
    majorant = _isotropic_tail(float(eigenvalues[0]), eigenvalues.size)

    def eps(r: float) -> float:
        if r == 0:
            return 1.0
        tail = _imhof_sf(r * r, c)
        if tail >= IMHOF_FLOOR:
            return math.sqrt(tail)
        # Below the floor Imhof's integral is cancellation-limited.
        return min(majorant(r), math.sqrt(IMHOF_FLOOR))

    return eps


def epsilon_profile(component: GaussianComponent) -> ConcentrationProfile:
    """
    Fourier-concentration profile of one component.

    eps(r) = ||phi_hat 1_{>=r}|| / ||phi_hat||, computed from the zero-mean
    shape (translation only changes the phase of phi_hat). Isotropic
    components use the exact chi-square tail; anisotropic ones use Imhof's
    integral for the generalized chi-square tail.
    """
    lam = component.eigenvalues
    if component.is_isotropic:
        return ConcentrationProfile(_isotropic_tail(float(lam.mean()), component.dim),
                                    f'gaussian-isotropic(d={component.dim}, var={lam.mean():.6g})')
    return ConcentrationProfile(_anisotropic_tail(lam),
                                f'gaussian-anisotropic(d={component.dim}, lambda_min={lam[0]:.6g})')


def mixture_profile(mixture: GaussianMixture) -> ConcentrationProfile:
    """Common profile for all components: pointwise maximum."""
    profiles = [epsilon_profile(c) for c in mixture.components]
    if len(profiles) == 1:
        return profiles[0]
    return ConcentrationProfile(lambda r: max(p(r) for p in profiles),
                                'max(' + ', '.join(p.description for p in profiles) + ')')


def fourier_overlap(component: GaussianComponent, v: Sequence[float]) -> float:
    """<|phi_hat|, |phi_hat(. - v)|> with ||phi_hat|| = 1; equals exp(-2 pi^2 v' Sigma v)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (component.dim,):
        raise DimensionError(f"shift has shape {v.shape}, expected ({component.dim},)")
    return math.exp(-2.0 * math.pi ** 2 * float(v @ component.covariance @ v))


def bound_tail_sum(profile: ConcentrationProfile, r: float,
                   n_max: int = DEFAULT_SERIES_TERMS) -> float:
    """
    sum_{n>=1} eps(n r): the first n_max terms plus a geometric remainder.

    The remainder bounds the tail by eps(n_max r) q / (1 - q) with
    q = eps(n_max r) / eps((n_max - 1) r), valid when the term ratio is
    non-increasing (Gaussian and geometric profiles).
    """
    if r <= 0:
        raise InvalidParameterError(f"r must be positive, got {r}")
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be >= 1, got {n_max}")
    terms = [profile(n * r) for n in range(1, n_max + 1)]
    remainder = 0.0
    last = terms[-1]
    prev = terms[-2] if n_max > 1 else profile(0.0)
    if last > 0:
        q = last / prev if prev > 0 else 1.0
        if q < 1:
            remainder = last * q / (1.0 - q)
        else:
            logger.warning("tail series has not started decaying after %d terms (r=%g)", n_max, r)
            remainder = math.inf
    return math.fsum(terms) + remainder
