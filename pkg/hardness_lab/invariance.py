"""
Whitening and Invariance
========================

SVD whitening P = D^{-1} U' of a data matrix X = U D V' (instances as
columns), the whitened pipeline x -> f((P'W)' x) around an inner
algorithm, paired-transform invariance harnesses for orthogonal and
invertible M, the transport matrix M with W = M' W_star, and span-coverage
estimates for fresh draws.

Algorithms follow one contract: ``algorithm(dataset, rng) -> Predictor``,
where a Predictor is a link name from ``LINKS`` plus a weight matrix W and
predicts f(W' x).
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .config import GRAM_TOL, RANK_TOL, SPAN_TOL
from .errors import DimensionError, InvalidParameterError, LabError, RankDeficientError
from .parallel import derive_seed, ordered_map

logger = logging.getLogger(__name__)


# ============================================================================
# Data types
# ============================================================================

@dataclass(frozen=True, eq=False)
class Dataset:
    """Instances as the columns of X (d x m) with labels y (m)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DimensionError(f"X must be d x m with m >= 1, got shape {X.shape}")
        if y.size != X.shape[1]:
            raise DimensionError(f"{y.size} labels for {X.shape[1]} instances")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("dataset entries must be finite")
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'y', y)

    @property
    def dim(self) -> int:
        return self.X.shape[0]

    @property
    def size(self) -> int:
        return self.X.shape[1]

    def transformed(self, M: np.ndarray) -> 'Dataset':
        return Dataset(M @ self.X, self.y)

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> 'Dataset':
        """From an m x (d+1) array of rows x1..xd, y."""
        rows = np.asarray(rows, dtype=float)
        return cls(rows[:, :-1].T, rows[:, -1])


def _link_linear(Z):
    return Z.sum(axis=0)


def _link_cosine(Z):
    return np.cos(2.0 * math.pi * Z).sum(axis=0)


def _link_clipped_relu_sum(Z):
    return np.clip(np.maximum(Z, 0.0).sum(axis=0), 0.0, 1.0)


LINKS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    'linear': _link_linear,
    'cosine': _link_cosine,
    'clipped_relu_sum': _link_clipped_relu_sum,
}


@dataclass(frozen=True, eq=False)
class Predictor:
    """x -> f(W' x) with f taken from the link registry."""

    link: str
    W: np.ndarray

    def __post_init__(self):
        if self.link not in LINKS:
            raise InvalidParameterError(f"unknown link '{self.link}', expected one of {sorted(LINKS)}")
        W = np.asarray(self.W, dtype=float)
        object.__setattr__(self, 'W', W.reshape(-1, 1) if W.ndim == 1 else W)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predictions for the columns of X."""
        return LINKS[self.link](self.W.T @ np.asarray(X, dtype=float))


@dataclass
class WhiteningTransform:
    P: np.ndarray
    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    rank: int

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.P @ X


@dataclass
class InvarianceVerdict:
    max_discrepancy: float
    max_holdout_discrepancy: float
    passed: bool
    tol: float
    n_trials: int
    kind: str = 'orthogonal'

    def to_dict(self) -> Dict[str, Any]:
        return {'max_discrepancy': self.max_discrepancy,
                'max_holdout_discrepancy': self.max_holdout_discrepancy,
                'passed': self.passed, 'tol': self.tol, 'n_trials': self.n_trials, 'kind': self.kind}


# ============================================================================
# Whitening
# ============================================================================

def whiten(dataset: Any) -> WhiteningTransform:
    """
    Thin SVD X = U D V' truncated at RANK_TOL * sigma_max, with P = D^{-1} U'.

    Singular vectors are sign-fixed so the largest-magnitude entry of each
    column of U is positive. The transformed data P X has identity Gram
    matrix (P X)(P X)' = I_r.
    """
    X = dataset.X if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    if not np.any(X):
        raise RankDeficientError("cannot whiten an all-zero data matrix")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    U, s, Vt = U[:, :rank], s[:rank], Vt[:rank]
    signs = np.sign(U[np.argmax(np.abs(U), axis=0), np.arange(rank)])
    U, Vt = U * signs, Vt * signs[:, None]
    P = U.T / s[:, None]
    Z = P @ X
    gap = float(np.max(np.abs(Z @ Z.T - np.eye(rank))))
    if gap > GRAM_TOL:
        raise LabError(f"whitened Gram matrix deviates from identity by {gap:.3e}")
    return WhiteningTransform(P, U, s, Vt.T, rank)


def whitened_pipeline(inner: Callable, dataset: Dataset,
                      rng: Optional[np.random.Generator] = None) -> Predictor:
    """Run ``inner`` on (P X, y) and return x -> f((P' W)' x)."""
    wt = whiten(dataset)
    pred = inner(Dataset(wt.apply(dataset.X), dataset.y), rng)
    return Predictor(pred.link, wt.P.T @ pred.W)


def whitened(inner: Callable) -> Callable:
    """The whitened pipeline around ``inner`` as an algorithm."""
    def algorithm(dataset, rng=None):
        return whitened_pipeline(inner, dataset, rng)
    algorithm.__name__ = f'whitened_{getattr(inner, "__name__", "inner")}'
    return algorithm


# ============================================================================
# Inner algorithms
# ============================================================================

def first_column(dataset: Dataset, rng=None) -> Predictor:
    """W = x_1."""
    return Predictor('linear', dataset.X[:, :1])


def gd_linear(dataset: Dataset, rng=None, steps: int = 50) -> Predictor:
    """GD on (1/2m)||X'w - y||^2 from w = 0 with step m / sigma_max(X)^2."""
    X, y = dataset.X, dataset.y
    m = dataset.size
    sigma = float(np.linalg.norm(X, 2))
    eta = m / sigma ** 2 if sigma > 0 else 0.0
    w = np.zeros(dataset.dim)
    for _ in range(steps):
        w = w - eta * X @ (X.T @ w - y) / m
    return Predictor('linear', w)


def min_norm_least_squares(dataset: Dataset, rng=None) -> Predictor:
    """Minimum-norm solution of X'w = y in the least-squares sense."""
    w, *_ = np.linalg.lstsq(dataset.X.T, dataset.y, rcond=None)
    return Predictor('linear', w)


def sgd_linear(dataset: Dataset, rng: Optional[np.random.Generator] = None, epochs: int = 5) -> Predictor:
    """Single-sample SGD from w = 0 with step 1 / (2 max ||x_i||^2)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    X, y = dataset.X, dataset.y
    max_sq = float(np.max(np.sum(X * X, axis=0)))
    eta = 0.5 / max_sq if max_sq > 0 else 0.0
    w = np.zeros(dataset.dim)
    for _ in range(epochs):
        for i in rng.permutation(dataset.size):
            w = w - eta * (X[:, i] @ w - y[i]) * X[:, i]
    return Predictor('linear', w)


def coordinate_descent(dataset: Dataset, rng=None, steps: int = 1) -> Predictor:
    """Greedy exact line search along the coordinate with the largest gradient entry."""
    X, y = dataset.X, dataset.y
    w = np.zeros(dataset.dim)
    for _ in range(steps):
        g = X @ (X.T @ w - y)
        j = int(np.argmax(np.abs(g)))
        denom = float(X[j] @ X[j])
        if denom == 0.0:
            break
        w[j] -= g[j] / denom
    return Predictor('linear', w)


INNER_ALGORITHMS: Dict[str, Callable] = {
    'first_column': first_column,
    'gd_linear': gd_linear,
    'min_norm_least_squares': min_norm_least_squares,
    'sgd_linear': sgd_linear,
}

CONTROL_ALGORITHMS: Dict[str, Callable] = {
    'coordinate_descent': coordinate_descent,
}


def get_algorithm(name: str) -> Callable:
    """Look up an algorithm; a ``whitened_`` prefix wraps it in the whitened pipeline."""
    registry = {**INNER_ALGORITHMS, **CONTROL_ALGORITHMS}
    if name.startswith('whitened_'):
        return whitened(get_algorithm(name[len('whitened_'):]))
    if name not in registry:
        raise InvalidParameterError(f"unknown algorithm '{name}', expected one of {sorted(registry)}")
    return registry[name]


# ============================================================================
# Random transforms and harnesses
# ============================================================================

def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian with sign(diag R) fixed."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_invertible(d: int, rng: np.random.Generator, max_condition: float = 1e3) -> np.ndarray:
    """Q1 diag(s) Q2 with s log-uniform in [c^{-1/2}, c^{1/2}], so cond(M) <= c."""
    if max_condition < 1:
        raise InvalidParameterError(f"condition bound must be >= 1, got {max_condition}")
    half = 0.5 * math.log(max_condition)
    s = np.exp(rng.uniform(-half, half, size=d))
    return haar_orthogonal(d, rng) @ np.diag(s) @ haar_orthogonal(d, rng)


def paired_discrepancy(algorithm: Callable, dataset: Dataset, M: np.ndarray, holdout: np.ndarray,
                       seed: int = 0) -> Tuple[float, float]:
    """Max prediction gaps (training set, holdout) between runs on X and on M X."""
    base = algorithm(dataset, np.random.default_rng(seed))
    moved = algorithm(dataset.transformed(M), np.random.default_rng(seed))
    train = float(np.max(np.abs(base.predict(dataset.X) - moved.predict(M @ dataset.X))))
    held = float(np.max(np.abs(base.predict(holdout) - moved.predict(M @ holdout))))
    return train, held


def _check_invariance(kind: str, algorithm: Callable, dataset: Dataset, n_trials: int, seed: int,
                      tol: float, max_condition: float, holdout: Optional[np.ndarray],
                      workers: int) -> InvarianceVerdict:
    if holdout is None:
        holdout = np.random.default_rng(derive_seed(seed, 0)).standard_normal((dataset.dim, 100))

    def trial(i):
        rng = np.random.default_rng(derive_seed(seed, 1, i))
        if kind == 'orthogonal':
            M = haar_orthogonal(dataset.dim, rng)
        else:
            M = random_invertible(dataset.dim, rng, max_condition)
        return paired_discrepancy(algorithm, dataset, M, holdout, derive_seed(seed, 2, i))

    results = ordered_map(trial, list(range(n_trials)), workers, desc=f'{kind} trials')
    train = max((r[0] for r in results), default=0.0)
    held = max((r[1] for r in results), default=0.0)
    return InvarianceVerdict(train, held, train <= tol, tol, n_trials, kind)


def check_orthogonal_invariance(algorithm: Callable, dataset: Dataset, n_trials: int, seed: int,
                                tol: float = 1e-8, holdout: Optional[np.ndarray] = None,
                                workers: int = 1) -> InvarianceVerdict:
    """
    Compare training-set predictions W'x_i and W_M'(M x_i) over random orthogonal M.

    Both runs of a trial receive the same seed. Holdout discrepancies are
    reported but do not decide the verdict.
    """
    return _check_invariance('orthogonal', algorithm, dataset, n_trials, seed, tol, 1.0, holdout, workers)


def check_linear_invariance(algorithm: Callable, dataset: Dataset, n_trials: int, seed: int,
                            tol: float = 1e-6, max_condition: float = 1e3,
                            holdout: Optional[np.ndarray] = None, workers: int = 1) -> InvarianceVerdict:
    """Same as ``check_orthogonal_invariance`` for random invertible M with cond(M) <= max_condition."""
    return _check_invariance('linear', algorithm, dataset, n_trials, seed, tol, max_condition,
                             holdout, workers)


# ============================================================================
# Transport
# ============================================================================

@dataclass
class Transport:
    M: np.ndarray
    residual: float
    norm: float
    certificate: float


def _check_full_column_rank(A: np.ndarray, name: str) -> None:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[-1] <= RANK_TOL * max(s[0], 1.0) or A.shape[1] > A.shape[0]:
        raise RankDeficientError(f"{name} is not full column rank")


def _orthonormal_complement(A: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(A, mode='complete')
    return Q[:, A.shape[1]:]


def transport_construct(W_star: Any, W: Any) -> Transport:
    """
    Invertible M with W = M' W_star: M' = [W  W_hat][W_star  W_star_hat]^{-1}.

    Complements are orthonormal bases from complete QR. The certificate is
    ||[W W_hat]|| ||[W_star W_star_hat]^{-1}||, an upper bound on ||M||.
    """
    W_star = np.asarray(W_star, dtype=float)
    W = np.asarray(W, dtype=float)
    if W_star.shape != W.shape or W.ndim != 2:
        raise DimensionError(f"shapes differ: {W_star.shape} vs {W.shape}")
    _check_full_column_rank(W_star, 'W_star')
    _check_full_column_rank(W, 'W')
    A = np.hstack([W, _orthonormal_complement(W)])
    B = np.hstack([W_star, _orthonormal_complement(W_star)])
    M = np.linalg.solve(B.T, A.T)
    residual = float(np.linalg.norm(W - M.T @ W_star) / np.linalg.norm(W))
    s_B = np.linalg.svd(B, compute_uv=False)
    certificate = float(np.linalg.norm(A, 2) / s_B[-1])
    return Transport(M, residual, float(np.linalg.norm(M, 2)), certificate)


# ============================================================================
# Span coverage
# ============================================================================

@dataclass
class SpanSource:
    """Instance source: 'gaussian' (full-dimensional), 'atomic' (k fixed directions) or 'empirical'."""

    kind: str
    dim: int
    k: int = 0
    directions: Optional[np.ndarray] = None
    rows: Optional[np.ndarray] = None

    @classmethod
    def gaussian(cls, dim: int) -> 'SpanSource':
        return cls('gaussian', dim)

    @classmethod
    def atomic(cls, dim: int, k: int, seed: int) -> 'SpanSource':
        if not 1 <= k:
            raise InvalidParameterError(f"k must be >= 1, got {k}")
        u = np.random.default_rng(seed).standard_normal((k, dim))
        return cls('atomic', dim, k, u / np.linalg.norm(u, axis=1, keepdims=True))

    @classmethod
    def empirical(cls, rows: np.ndarray) -> 'SpanSource':
        rows = np.asarray(rows, dtype=float)
        return cls('empirical', rows.shape[1], rows=rows)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n instances as rows."""
        if self.kind == 'gaussian':
            return rng.standard_normal((n, self.dim))
        if self.kind == 'atomic':
            idx = rng.integers(0, self.k, size=n)
            return rng.standard_normal(n)[:, None] * self.directions[idx]
        if self.kind == 'empirical':
            return self.rows[rng.integers(0, self.rows.shape[0], size=n)]
        raise InvalidParameterError(f"unknown source kind '{self.kind}'")


@dataclass
class SpanCoverageReport:
    mean: float
    std_error: float
    bound: float
    probabilities: List[float] = field(repr=False)
    exact: Optional[float] = None
    markov_threshold: Optional[float] = None
    markov_fraction: Optional[float] = None
    delta: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean, 'std_error': self.std_error, 'bound': self.bound,
                'exact': self.exact, 'delta': self.delta, 'markov_threshold': self.markov_threshold,
                'markov_fraction': self.markov_fraction, 'n_datasets': len(self.probabilities)}


def out_of_span_fraction(dataset_rows: np.ndarray, fresh_rows: np.ndarray, tol: float = SPAN_TOL) -> float:
    """Fraction of fresh rows whose residual off span(dataset rows) exceeds tol * ||x||."""
    U, s, _ = np.linalg.svd(dataset_rows.T, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        basis = np.zeros((dataset_rows.shape[1], 0))
    else:
        basis = U[:, s > RANK_TOL * s[0]]
    resid = fresh_rows.T - basis @ (basis.T @ fresh_rows.T)
    out = np.linalg.norm(resid, axis=0) > tol * np.linalg.norm(fresh_rows.T, axis=0)
    return float(np.mean(out))


def atomic_exact_out_of_span(k: int, m: int, max_patterns: int = 1_000_000) -> float:
    """
    Expected out-of-span probability for the atomic source with k independent directions.

    Enumerates the k^m index patterns, averaging (k - #distinct)/k; large
    pattern counts use the equal value (1 - 1/k)^m.
    """
    if k ** m > max_patterns:
        return (1.0 - 1.0 / k) ** m
    total = math.fsum((k - len(set(p))) / k for p in itertools.product(range(k), repeat=m))
    return total / k ** m


def span_coverage(source: SpanSource, m: int, n_holdout: int, n_datasets: int, seed: int,
                  delta: Optional[float] = None, workers: int = 1) -> SpanCoverageReport:
    """
    Empirical E[Pr(x not in span(x_1..x_m))] over n_datasets dataset draws.

    The expectation is bounded by d/(m+1); with ``delta`` the fraction of
    datasets whose probability exceeds d/(delta (m+1)) is also reported.
    """
    if m < 1:
        raise InvalidParameterError(f"m must be >= 1, got {m}")
    if n_datasets < 1 or n_holdout < 1:
        raise InvalidParameterError("need at least one dataset and one holdout draw")

    def one(i):
        rng = np.random.default_rng(derive_seed(seed, i))
        data = source.draw(m, rng)
        return out_of_span_fraction(data, source.draw(n_holdout, rng))

    probs = ordered_map(one, list(range(n_datasets)), workers, desc='span datasets')
    arr = np.asarray(probs)
    std = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    bound = source.dim / (m + 1)
    report = SpanCoverageReport(float(arr.mean()), std, bound, list(probs))
    if source.kind == 'atomic' and source.k <= source.dim:
        report.exact = atomic_exact_out_of_span(source.k, m)
    if delta is not None:
        if not 0 < delta <= 1:
            raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
        report.delta = delta
        report.markov_threshold = source.dim / (delta * (m + 1))
        report.markov_fraction = float(np.mean(arr > report.markov_threshold))
    return report
