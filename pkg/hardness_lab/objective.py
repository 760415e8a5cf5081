"""
Population Objective
====================

F_{w*}(w) = E_{x ~ phi^2} [(f(w, x) - psi(<w*, x>))^2], its gradient, Monte-Carlo
estimators with common random numbers, and the closed form for the
cosine family with cosine target under zero-mean Gaussian inputs.

With chi(v) = E cos(2 pi <v, x>) = exp(-2 pi^2 v' S v):

    F(w) = 1 - chi(w - w*) - chi(w + w*) + (chi(2w) + chi(2w*)) / 2
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from .distributions import GaussianMixture, map_sample_chunks
from .errors import DimensionError, InvalidParameterError, UnsupportedError
from .parallel import Moments, merge_moments, ordered_map
from .periodic import PeriodicFn, evaluate
from .predictors import CosineFamily, PredictorFamily

logger = logging.getLogger(__name__)

PI2 = math.pi ** 2

CovarianceSource = Union[float, np.ndarray, GaussianMixture]


@dataclass(frozen=True, eq=False)
class Problem:
    """Input mixture, periodic target psi(<w*, x>) and predictor family."""

    mixture: GaussianMixture
    psi: PeriodicFn
    w_star: np.ndarray
    family: PredictorFamily

    def __post_init__(self):
        w_star = np.asarray(self.w_star, dtype=float).reshape(-1)
        if w_star.size != self.mixture.dim:
            raise DimensionError(f"w* has {w_star.size} entries, mixture dimension is {self.mixture.dim}")
        if self.family.dim != self.mixture.dim:
            raise DimensionError(f"family dimension {self.family.dim} != mixture dimension {self.mixture.dim}")
        w_star.setflags(write=False)
        object.__setattr__(self, 'w_star', w_star)

    @property
    def dim(self) -> int:
        return self.mixture.dim

    @property
    def target_norm(self) -> float:
        return float(np.linalg.norm(self.w_star))

    @property
    def has_closed_form(self) -> bool:
        return (isinstance(self.family, CosineFamily) and self.psi.kind == 'cosine'
                and self.mixture.is_zero_mean)

    def with_target(self, w_star: Any) -> 'Problem':
        return Problem(self.mixture, self.psi, w_star, self.family)

    def target(self, X: np.ndarray) -> np.ndarray:
        return evaluate(self.psi, X @ self.w_star)

    def residual(self, w: np.ndarray, X: np.ndarray) -> np.ndarray:
        return self.family.predict(w, X) - self.target(X)


@dataclass
class EstimatorResult:
    """Monte-Carlo estimate (scalar or vector) with its standard error."""

    value: Any
    std_error: Any
    n_samples: int
    seed: int

    def to_dict(self):
        return {'value': np.asarray(self.value).tolist(),
                'std_error': np.asarray(self.std_error).tolist(),
                'n_samples': self.n_samples, 'seed': self.seed}


# ============================================================================
# Monte-Carlo estimators
# ============================================================================

def _check_w(problem: Problem, w: Any) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != problem.family.n_params:
        raise DimensionError(f"w has {w.size} entries, family expects {problem.family.n_params}")
    return w


def objective_mc(problem: Problem, w: Any, n: int, seed: int, workers: int = 1) -> EstimatorResult:
    """
    Mean of squared residuals over n seeded samples.

    The sample stream depends only on (mixture, n, seed), so calls at
    different w share common random numbers.
    """
    if n < 2:
        raise InvalidParameterError(f"need n >= 2 samples, got {n}")
    w = _check_w(problem, w)
    parts = map_sample_chunks(problem.mixture, n, seed,
                              lambda X: Moments.of(problem.residual(w, X) ** 2), workers)
    m = merge_moments(parts)
    return EstimatorResult(float(m.mean), float(m.std_error), n, seed)


def grad_mc(problem: Problem, w: Any, n: int, seed: int, workers: int = 1) -> EstimatorResult:
    """Mean of 2 (f(w, x) - psi(<w*, x>)) d f(w, x)/dw with per-coordinate std errors."""
    if n < 2:
        raise InvalidParameterError(f"need n >= 2 samples, got {n}")
    w = _check_w(problem, w)

    def chunk(X):
        per_sample = 2.0 * problem.residual(w, X)[:, None] * problem.family.grad_w(w, X)
        return Moments.of(per_sample)

    m = merge_moments(map_sample_chunks(problem.mixture, n, seed, chunk, workers))
    return EstimatorResult(np.asarray(m.mean), np.asarray(m.std_error), n, seed)


# ============================================================================
# Closed form (cosine family, cosine target, zero-mean Gaussian inputs)
# ============================================================================

def _components(covariance: CovarianceSource, dim: int) -> List[Tuple[float, np.ndarray]]:
    if isinstance(covariance, GaussianMixture):
        if not covariance.is_zero_mean:
            raise UnsupportedError("closed form needs zero-mean components; use objective_mc")
        return [(c.weight, c.covariance) for c in covariance.components]
    S = np.asarray(covariance, dtype=float)
    if S.ndim == 0:
        S = float(S) * np.eye(dim)
    if S.shape != (dim, dim):
        raise DimensionError(f"covariance shape {S.shape}, expected {(dim, dim)}")
    return [(1.0, S)]


def cos_mean(V: np.ndarray, S: np.ndarray) -> np.ndarray:
    """E cos(2 pi <v, x>) for x ~ N(0, S), over the last axis of V."""
    return np.exp(-2.0 * PI2 * np.einsum('...i,ij,...j->...', V, S, V))


def objective_cos_gauss_closed(w: Any, w_star: Any, covariance: CovarianceSource) -> Any:
    """
    Exact F for the cosine family and target.

    ``w`` may be one point (d,) or a batch (m, d). ``covariance`` is a scalar,
    a d x d matrix, or a zero-mean GaussianMixture (weighted sum).
    """
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    if w.shape[-1] != w_star.size:
        raise DimensionError(f"w has dimension {w.shape[-1]}, w* has {w_star.size}")
    total = 0.0
    for alpha, S in _components(covariance, w_star.size):
        cross = cos_mean(w - w_star, S) + cos_mean(w + w_star, S)
        total = total + alpha * ((1.0 - cross) + 0.5 * (cos_mean(2.0 * w, S) + cos_mean(2.0 * w_star, S)))
    return float(total) if np.ndim(total) == 0 else total


def grad_cos_gauss_parts(w: Any, w_star: Any, covariance: CovarianceSource) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split of the closed-form gradient into a w*-free and a w*-dependent part.

    base   = -8 pi^2 chi(2w) S w
    target =  4 pi^2 [chi(w - w*) S (w - w*) + chi(w + w*) S (w + w*)]
    """
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    if w.shape[-1] != w_star.shape[-1]:
        raise DimensionError(f"w has dimension {w.shape[-1]}, w* has {w_star.shape[-1]}")
    dim = w.shape[-1]
    base = np.zeros(w.shape)
    target = np.zeros(np.broadcast_shapes(w.shape, w_star.shape))
    for alpha, S in _components(covariance, dim):
        minus, plus = w - w_star, w + w_star
        base = base - alpha * 8.0 * PI2 * cos_mean(2.0 * w, S)[..., None] * (w @ S)
        target = target + alpha * 4.0 * PI2 * (cos_mean(minus, S)[..., None] * (minus @ S)
                                               + cos_mean(plus, S)[..., None] * (plus @ S))
    return base, target


def grad_cos_gauss_closed(w: Any, w_star: Any, covariance: CovarianceSource) -> np.ndarray:
    """Exact gradient of ``objective_cos_gauss_closed`` with respect to w."""
    base, target = grad_cos_gauss_parts(w, w_star, covariance)
    return base + target


def objective(problem: Problem, w: Any, n: Optional[int] = None, seed: int = 0) -> float:
    """F(w): closed form when available, else Monte Carlo with n samples."""
    w = _check_w(problem, w)
    if problem.has_closed_form:
        return objective_cos_gauss_closed(w, problem.w_star, problem.mixture)
    if n is None:
        raise UnsupportedError("no closed form for this problem; pass n for Monte Carlo")
    return objective_mc(problem, w, n, seed).value


def gradient(problem: Problem, w: Any, n: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """grad F(w): closed form when available, else Monte Carlo with n samples."""
    w = _check_w(problem, w)
    if problem.has_closed_form:
        return grad_cos_gauss_closed(w, problem.w_star, problem.mixture)
    if n is None:
        raise UnsupportedError("no closed form for this problem; pass n for Monte Carlo")
    return grad_mc(problem, w, n, seed).value


# ============================================================================
# Landscape grid
# ============================================================================

@dataclass
class LandscapeGrid:
    """F on the tensor grid axes[0] x axes[1]; values[i, j] = F(axes[0][i], axes[1][j])."""

    axes: Tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    grad_norms: Optional[np.ndarray] = None
    closed_form: bool = True
    anchors: List[Tuple[float, float]] = field(default_factory=list)

    def points(self) -> np.ndarray:
        a, b = np.meshgrid(self.axes[0], self.axes[1], indexing='ij')
        return np.stack([a, b], axis=-1)

    def rows(self):
        """(w1, w2, F) triples in row-major grid order."""
        for i, a in enumerate(self.axes[0]):
            for j, b in enumerate(self.axes[1]):
                yield float(a), float(b), float(self.values[i, j])

    def flat_fraction(self, centers: Sequence[Sequence[float]], radius: float,
                      threshold: float = 1e-6) -> float:
        """Fraction of cells farther than radius from every center with ||grad F|| < threshold."""
        if self.grad_norms is None:
            raise UnsupportedError("gradient norms are only available for closed-form grids")
        pts = self.points()
        outside = np.ones(self.values.shape, dtype=bool)
        for c in centers:
            outside &= np.linalg.norm(pts - np.asarray(c, dtype=float), axis=-1) > radius
        return float(np.mean(self.grad_norms[outside] < threshold))


def grid_axis(lo: float, hi: float, resolution: int, anchors: Sequence[float] = ()) -> np.ndarray:
    """linspace(lo, hi, resolution) with in-range anchors inserted exactly."""
    if not lo < hi or resolution < 2:
        raise InvalidParameterError(f"bad grid axis [{lo}, {hi}] with resolution {resolution}")
    axis = np.linspace(lo, hi, resolution)
    inside = [float(a) for a in anchors if lo <= a <= hi]
    for a in inside:
        axis = axis[np.abs(axis - a) > 1e-9]
    return np.unique(np.concatenate([axis, inside]))


def landscape_grid(problem: Problem, bounds: Sequence[Sequence[float]], resolution: int,
                   anchors: bool = True, n: int = 10_000, seed: int = 0,
                   workers: int = 1) -> LandscapeGrid:
    """
    Evaluate F on a 2-D grid.

    ``bounds`` is ((lo1, hi1), (lo2, hi2)). With ``anchors`` the coordinates of
    +-w* and 0 are inserted into the axes. Problems without a closed form use
    one shared sample of size n for every cell.
    """
    if problem.family.n_params != 2:
        raise DimensionError("landscape grids need a two-parameter family")
    anchor_pts = [tuple(problem.w_star), tuple(-problem.w_star), (0.0, 0.0)] if anchors else []
    axes = tuple(grid_axis(lo, hi, resolution, [p[k] for p in anchor_pts])
                 for k, (lo, hi) in enumerate(bounds))
    anchor_pts = [p for p in anchor_pts
                  if all(lo <= p[k] <= hi for k, (lo, hi) in enumerate(bounds))]
    pts = np.stack(np.meshgrid(axes[0], axes[1], indexing='ij'), axis=-1)

    if problem.has_closed_form:
        values = objective_cos_gauss_closed(pts, problem.w_star, problem.mixture)
        grads = grad_cos_gauss_closed(pts, problem.w_star, problem.mixture)
        return LandscapeGrid(axes, values, np.linalg.norm(grads, axis=-1), True, anchor_pts)

    logger.info("no closed form; Monte-Carlo landscape with n=%d", n)
    X = np.concatenate(map_sample_chunks(problem.mixture, n, seed, lambda chunk: chunk, workers))
    target = problem.target(X)

    def row(i):
        return [float(np.mean((problem.family.predict(pts[i, j], X) - target) ** 2))
                for j in range(pts.shape[1])]

    values = np.array(ordered_map(row, list(range(pts.shape[0])), workers))
    return LandscapeGrid(axes, values, None, False, anchor_pts)
