"""
Halfspace-Intersection Reduction
================================

Integer-exact correspondence between intersections of halfspaces
x -> AND_i (<w_i, x> >= b_i) on {0,1}^{d-1} and clipped ReLU-sum networks
evaluated at (x, 1), the padding W -> [W; I_n] that forces
s_min >= 1, and the rounding inequality Pr(f_tilde != g) <= 8 E[((1-f) - g)^2].
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import DimensionError, InvalidParameterError
from .parallel import ordered_map
from .predictors import ClippedReluSum

logger = logging.getLogger(__name__)

CUBE_BLOCK = 1 << 14


def _as_integer(a: Any, name: str) -> np.ndarray:
    a = np.asarray(a)
    if np.issubdtype(a.dtype, np.integer):
        return a.astype(np.int64)
    if np.issubdtype(a.dtype, np.floating) and np.all(np.isfinite(a)) and np.all(a == np.round(a)):
        return a.astype(np.int64)
    raise InvalidParameterError(f"{name} must have integer entries")


def _as_boolean(x: Any) -> np.ndarray:
    x = np.asarray(x)
    if not np.all((x == 0) | (x == 1)):
        raise InvalidParameterError("inputs must be Boolean (0/1) vectors")
    return x.astype(np.int64)


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection:
    """n constraints <w_i, x> >= b_i with integer w_i (length d-1) and b_i."""

    weights: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        W = _as_integer(self.weights, 'weights')
        b = _as_integer(self.thresholds, 'thresholds').reshape(-1)
        if W.ndim != 2 or W.shape[0] < 1:
            raise DimensionError(f"weights must be an n x (d-1) matrix, got shape {W.shape}")
        if b.size != W.shape[0]:
            raise DimensionError(f"{b.size} thresholds for {W.shape[0]} constraints")
        object.__setattr__(self, 'weights', W)
        object.__setattr__(self, 'thresholds', b)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def max_norm(self) -> float:
        """max_i ||(w_i, b_i)||."""
        full = np.column_stack([self.weights, self.thresholds]).astype(float)
        return float(np.max(np.linalg.norm(full, axis=1)))

    def to_dict(self) -> Dict[str, Any]:
        return {'weights': self.weights.tolist(), 'thresholds': self.thresholds.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'HalfspaceIntersection':
        try:
            return cls(np.asarray(data['weights']), np.asarray(data['thresholds']))
        except KeyError as e:
            raise InvalidParameterError(f"instance is missing {e}") from e


def intersection_eval(h: HalfspaceIntersection, x: Any) -> Any:
    """1 iff every constraint holds; x is one Boolean vector or rows of them."""
    x = _as_boolean(x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != h.input_dim:
        raise DimensionError(f"input length {X.shape[1]}, instance expects {h.input_dim}")
    out = np.all(X @ h.weights.T >= h.thresholds, axis=1).astype(np.int64)
    return int(out[0]) if single else out


def to_clipped_network(h: HalfspaceIntersection) -> ClippedReluSum:
    """
    Columns (-w_i, b_i): at (x, 1) each unit is [b_i - <w_i, x>]_+, an integer,
    so the clipped sum is 0 when all constraints hold and 1 otherwise.
    """
    W = np.vstack([-h.weights.T, h.thresholds[None, :]])
    return ClippedReluSum(W)


def lift_boolean(x: Any) -> np.ndarray:
    """x -> (x, 1)."""
    X = _as_boolean(x)
    ones = np.ones(X.shape[:-1] + (1,), dtype=np.int64)
    return np.concatenate([X, ones], axis=-1)


@dataclass(frozen=True, eq=False)
class PaddedNetwork:
    W_tilde: np.ndarray
    W: np.ndarray
    s_min: float

    @property
    def pad(self) -> int:
        return self.W.shape[1]

    def lift(self, x: Any) -> np.ndarray:
        """x -> (x, 0, ..., 0)."""
        X = np.asarray(x)
        zeros = np.zeros(X.shape[:-1] + (self.pad,), dtype=X.dtype)
        return np.concatenate([X, zeros], axis=-1)

    def network(self) -> ClippedReluSum:
        return ClippedReluSum(self.W_tilde)


def pad_independent(W: Any) -> PaddedNetwork:
    """W_tilde = [W; I_n], so W_tilde' W_tilde = W'W + I and s_min(W_tilde) >= 1."""
    W = np.asarray(W)
    if W.ndim != 2:
        raise DimensionError(f"W must be a matrix, got shape {W.shape}")
    n = W.shape[1]
    eye = np.eye(n, dtype=W.dtype if np.issubdtype(W.dtype, np.integer) else float)
    W_tilde = np.vstack([W, eye])
    s_min = float(np.linalg.svd(W_tilde.astype(float), compute_uv=False)[-1])
    return PaddedNetwork(W_tilde, W, s_min)


# ============================================================================
# Rounding inequality
# ============================================================================

@dataclass
class RoundingReport:
    disagreement: float
    mse: float
    bound: float
    holds: bool
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {'disagreement': self.disagreement, 'mse': self.mse, 'bound': self.bound,
                'holds': self.holds, 'n': self.n}


def round_and_bound(f: Any, g: Any) -> RoundingReport:
    """
    f_tilde = 1 - rnd(f) with rnd(z) = 0 for z <= 1/2; compare Pr(f_tilde != g)
    with 8 E[((1 - f) - g)^2].
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    g = _as_boolean(g).reshape(-1)
    if f.size != g.size:
        raise DimensionError(f"{f.size} predictions for {g.size} labels")
    if f.size == 0:
        raise InvalidParameterError("need at least one pair")
    f_tilde = 1 - (f > 0.5).astype(np.int64)
    disagreement = float(np.mean(f_tilde != g))
    mse = math.fsum(((1.0 - f) - g) ** 2) / f.size
    bound = 8.0 * mse
    return RoundingReport(disagreement, mse, bound, disagreement <= bound, f.size)


# ============================================================================
# Instances and exhaustive checks
# ============================================================================

def random_instance(d_minus_1: int, n: int, seed: int,
                    weight_bound: Optional[int] = None) -> HalfspaceIntersection:
    """Integer weights and thresholds uniform in [-B, B], B = d by default."""
    if d_minus_1 < 1 or n < 1:
        raise InvalidParameterError(f"need d-1 >= 1 and n >= 1, got {d_minus_1}, {n}")
    bound = d_minus_1 + 1 if weight_bound is None else int(weight_bound)
    rng = np.random.default_rng(seed)
    return HalfspaceIntersection(rng.integers(-bound, bound + 1, size=(n, d_minus_1)),
                                 rng.integers(-bound, bound + 1, size=n))


def cube_block(dim: int, start: int, stop: int) -> np.ndarray:
    """Rows of {0,1}^dim with indices start..stop-1 (bit k of the index is coordinate k)."""
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    return (idx >> np.arange(dim, dtype=np.int64)) & 1


@dataclass
class ExhaustiveReport:
    n_points: int
    mismatches: int
    first_mismatch: Optional[List[int]]

    @property
    def exact(self) -> bool:
        return self.mismatches == 0

    def to_dict(self) -> Dict[str, Any]:
        return {'n_points': self.n_points, 'mismatches': self.mismatches,
                'first_mismatch': self.first_mismatch, 'exact': self.exact}


def exhaustive_check(h: HalfspaceIntersection, workers: int = 1,
                     block: int = CUBE_BLOCK) -> ExhaustiveReport:
    """Compare intersection(x) with 1 - network((x, 1)) on the whole cube."""
    net = to_clipped_network(h)
    dim = h.input_dim
    total = 1 << dim
    starts = list(range(0, total, block))

    def run(start):
        X = cube_block(dim, start, min(start + block, total))
        bad = np.nonzero(intersection_eval(h, X) != 1 - net.predict(lift_boolean(X)))[0]
        return int(bad.size), (X[bad[0]].tolist() if bad.size else None)

    results = ordered_map(run, starts, workers)
    mismatches = sum(r[0] for r in results)
    first = next((r[1] for r in results if r[1] is not None), None)
    if mismatches:
        logger.warning("reduction mismatch on %d of %d cube points", mismatches, total)
    return ExhaustiveReport(total, mismatches, first)
