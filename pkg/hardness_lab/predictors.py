"""
Predictor Families
==================

Parametric predictors f(w, x) with analytic parameter gradients.

Every family works on a flat parameter vector ``w`` and a batch of inputs
``X`` of shape (n, d) (a single input of shape (d,) is also accepted).
Flattening order for matrix parameters is column-major for W, followed by
b, v and c, so gradient vectors line up across runs.

Subgradient convention: d/dz [z]_+ at 0 is 0; the derivative of the clip
[z]_{[0,1]} at 0 and 1 is 0.
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .distributions import GaussianMixture, iter_sample_chunks
from .errors import DimensionError, InvalidParameterError
from .parallel import Moments, merge_moments

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def _as_batch(X: Any, dim: int) -> Tuple[np.ndarray, bool]:
    X = np.asarray(X)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != dim:
        raise DimensionError(f"input dimension {X.shape[-1]} does not match family dimension {dim}")
    return X, single


class PredictorFamily(ABC):
    """Base class for a family x -> f(w, x)."""

    name: str = ''

    def __init__(self, dim: int):
        if dim < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
        self.dim = dim

    @property
    @abstractmethod
    def n_params(self) -> int:
        ...

    @abstractmethod
    def _predict(self, w: np.ndarray, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _grad(self, w: np.ndarray, X: np.ndarray) -> np.ndarray:
        ...

    def param_blocks(self) -> List[Tuple[str, slice]]:
        """Named slices of the flat parameter vector."""
        return [('w', slice(0, self.n_params))]

    def _check_params(self, w: Any) -> np.ndarray:
        w = np.asarray(w, dtype=float).reshape(-1)
        if w.size != self.n_params:
            raise DimensionError(f"{self.name} expects {self.n_params} parameters, got {w.size}")
        return w

    def predict(self, w: Any, X: Any) -> Any:
        """f(w, x) for one input or each row of a batch."""
        w = self._check_params(w)
        X, single = _as_batch(X, self.dim)
        out = self._predict(w, X.astype(float))
        return float(out[0]) if single else out

    def grad_w(self, w: Any, X: Any) -> np.ndarray:
        """d f(w, x) / d w, shape (n_params,) or (n, n_params)."""
        w = self._check_params(w)
        X, single = _as_batch(X, self.dim)
        out = self._grad(w, X.astype(float))
        return out[0] if single else out


class CosineFamily(PredictorFamily):
    """x -> cos(2 pi <w, x>)."""

    name = 'cosine'

    @property
    def n_params(self) -> int:
        return self.dim

    def _predict(self, w, X):
        return np.cos(TWO_PI * (X @ w))

    def _grad(self, w, X):
        return (-TWO_PI * np.sin(TWO_PI * (X @ w)))[:, None] * X


class ClippedReluSumFamily(PredictorFamily):
    """x -> [sum_i [<w_i, x>]_+]_{[0,1]} with W = [w_1 ... w_n] flattened column-major."""

    name = 'clipped_relu_sum'

    def __init__(self, dim: int, n_units: int):
        super().__init__(dim)
        if n_units < 1:
            raise InvalidParameterError(f"need at least one unit, got {n_units}")
        self.n_units = n_units

    @property
    def n_params(self) -> int:
        return self.dim * self.n_units

    def param_blocks(self):
        d = self.dim
        return [(f'w_{i}', slice(i * d, (i + 1) * d)) for i in range(self.n_units)]

    def unflatten(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w).reshape((self.dim, self.n_units), order='F')

    def _predict(self, w, X):
        return np.clip(np.maximum(X @ self.unflatten(w), 0.0).sum(axis=1), 0.0, 1.0)

    def _grad(self, w, X):
        pre = X @ self.unflatten(w)
        s = np.maximum(pre, 0.0).sum(axis=1)
        mask = (pre > 0) & ((s > 0) & (s < 1))[:, None]
        return (mask[:, :, None] * X[:, None, :]).reshape(X.shape[0], -1)


class OneHiddenReluFamily(PredictorFamily):
    """x -> v' [W' x + b]_+ + c, parameters (W col-major, b, v, c)."""

    name = 'one_hidden_relu'

    def __init__(self, dim: int, width: int):
        super().__init__(dim)
        if width < 1:
            raise InvalidParameterError(f"width must be >= 1, got {width}")
        self.width = width

    @property
    def n_params(self) -> int:
        return self.dim * self.width + 2 * self.width + 1

    def param_blocks(self):
        d, k = self.dim, self.width
        blocks = [(f'W_{j}', slice(j * d, (j + 1) * d)) for j in range(k)]
        off = d * k
        return blocks + [('b', slice(off, off + k)), ('v', slice(off + k, off + 2 * k)),
                         ('c', slice(off + 2 * k, off + 2 * k + 1))]

    def unflatten(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        d, k = self.dim, self.width
        W = w[:d * k].reshape((d, k), order='F')
        return W, w[d * k:d * k + k], w[d * k + k:d * k + 2 * k], float(w[-1])

    def _predict(self, w, X):
        W, b, v, c = self.unflatten(w)
        return np.maximum(X @ W + b, 0.0) @ v + c

    def _grad(self, w, X):
        W, b, v, c = self.unflatten(w)
        pre = X @ W + b
        mask = (pre > 0).astype(float)
        n = X.shape[0]
        gW = ((v * mask)[:, :, None] * X[:, None, :]).reshape(n, -1)
        return np.concatenate([gW, v * mask, np.maximum(pre, 0.0), np.ones((n, 1))], axis=1)


def family_from_spec(spec: Any, dim: int) -> PredictorFamily:
    """'cosine', {'kind': 'clipped_relu_sum', 'units': n} or {'kind': 'one_hidden_relu', 'width': k}."""
    if isinstance(spec, str):
        spec = {'kind': spec}
    kind = (spec or {}).get('kind', 'cosine')
    if kind == 'cosine':
        return CosineFamily(dim)
    if kind == 'clipped_relu_sum':
        return ClippedReluSumFamily(dim, int(spec.get('units', 1)))
    if kind == 'one_hidden_relu':
        return OneHiddenReluFamily(dim, int(spec.get('width', 1)))
    raise InvalidParameterError(f"unknown predictor family '{kind}'")


# ============================================================================
# Concrete networks
# ============================================================================

@dataclass(frozen=True, eq=False)
class ClippedReluSum:
    """A fixed clipped ReLU-sum network; integer W and X stay integer-exact."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W)
        if W.ndim != 2 or W.shape[1] < 1:
            raise DimensionError(f"W must be a d x n matrix with n >= 1, got shape {W.shape}")
        object.__setattr__(self, 'W', W)

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def n_units(self) -> int:
        return self.W.shape[1]

    def family(self) -> ClippedReluSumFamily:
        return ClippedReluSumFamily(self.dim, self.n_units)

    def flat(self) -> np.ndarray:
        return self.W.reshape(-1, order='F').astype(float)

    def predict(self, X: Any) -> Any:
        X, single = _as_batch(X, self.dim)
        out = np.clip(np.maximum(X @ self.W, 0).sum(axis=1), 0, 1)
        return out[0] if single else out


@dataclass(frozen=True, eq=False)
class OneHiddenReluNet:
    """x -> v' [W' x + b]_+ + c with W of shape d x k."""

    W: np.ndarray
    b: np.ndarray
    v: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if W.ndim != 2 or W.shape[1] < 1 or b.size != W.shape[1] or v.size != W.shape[1]:
            raise DimensionError(f"inconsistent shapes W{W.shape}, b{b.shape}, v{v.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b)) and np.all(np.isfinite(v))
                and math.isfinite(self.c)):
            raise InvalidParameterError("network parameters must be finite")
        object.__setattr__(self, 'W', W)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'v', v)
        object.__setattr__(self, 'c', float(self.c))

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def width(self) -> int:
        return self.W.shape[1]

    def family(self) -> OneHiddenReluFamily:
        return OneHiddenReluFamily(self.dim, self.width)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.reshape(-1, order='F'), self.b, self.v, [self.c]])

    @classmethod
    def from_flat(cls, w: np.ndarray, dim: int, width: int) -> 'OneHiddenReluNet':
        return cls(*OneHiddenReluFamily(dim, width).unflatten(np.asarray(w, dtype=float)))

    def predict(self, X: Any) -> Any:
        return self.family().predict(self.flat(), X)

    @classmethod
    def from_relu_network(cls, net1d, w_star: Any) -> 'OneHiddenReluNet':
        """
        Realize x -> psi(<w*, x>) from a one-dimensional ReLU realization of psi.

        Exact wherever <w*, x> lies in the realization's interval.
        """
        w_star = np.asarray(w_star, dtype=float).reshape(-1)
        k = net1d.n_units
        if k == 0:
            return cls(np.zeros((w_star.size, 1)), [0.0], [0.0], net1d.bias)
        W = np.repeat(w_star[:, None], k, axis=1)
        return cls(W, -net1d.knots, net1d.coefs, net1d.bias)

    def to_dict(self) -> Dict[str, Any]:
        return {'d': self.dim, 'k': self.width, 'W': self.W.tolist(),
                'b': self.b.tolist(), 'v': self.v.tolist(), 'c': self.c}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'OneHiddenReluNet':
        W = np.asarray(data['W'], dtype=float)
        if W.shape != (data['d'], data['k']):
            raise DimensionError(f"W has shape {W.shape}, header says {(data['d'], data['k'])}")
        return cls(W, data['b'], data['v'], data['c'])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'OneHiddenReluNet':
        return cls.from_dict(json.loads(text))


# ============================================================================
# Gradient-norm bounds
# ============================================================================

@dataclass
class GradNormBound:
    """Estimate of G_w = E ||d f(w, x) / d w||^2 at one parameter."""

    value: float
    std_error: float
    n_samples: int
    w: np.ndarray
    blocks: Dict[str, float] = field(default_factory=dict)
    analytic: Optional[float] = None
    majorant: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'value': self.value, 'std_error': self.std_error, 'n_samples': self.n_samples,
                'w': self.w.tolist(), 'blocks': self.blocks, 'analytic': self.analytic,
                'majorant': self.majorant}


def cosine_grad_norm_exact(w: Any, mixture: GaussianMixture) -> float:
    """
    E ||grad||^2 for the cosine family under a zero-mean Gaussian mixture.

    2 pi^2 sum_i alpha_i [tr S_i - exp(-8 pi^2 w'S_i w) (tr S_i - 16 pi^2 ||S_i w||^2)]
    """
    w = np.asarray(w, dtype=float)
    total = []
    for comp in mixture.components:
        S = comp.covariance
        tr = float(np.trace(S))
        Sw = S @ w
        total.append(comp.weight * (tr - math.exp(-8.0 * math.pi ** 2 * float(w @ Sw))
                                    * (tr - 16.0 * math.pi ** 2 * float(Sw @ Sw))))
    return 2.0 * math.pi ** 2 * math.fsum(total)


def estimate_grad_norm_bound(family: PredictorFamily, w: Any, mixture: GaussianMixture,
                             n: int, seed: int) -> GradNormBound:
    """Monte-Carlo E ||d f / d w||^2 with standard error and per-block breakdown."""
    if n < 100:
        raise InvalidParameterError(f"need n >= 100 samples, got {n}")
    if mixture.dim != family.dim:
        raise DimensionError(f"mixture dimension {mixture.dim} != family dimension {family.dim}")
    w = family._check_params(w)
    blocks = family.param_blocks()

    parts = []
    for X in iter_sample_chunks(mixture, n, seed):
        g2 = family.grad_w(w, X) ** 2
        per_block = np.stack([g2[:, sl].sum(axis=1) for _, sl in blocks], axis=1)
        parts.append(Moments.of(np.column_stack([per_block.sum(axis=1), per_block])))
    moments = merge_moments(parts)

    result = GradNormBound(
        value=float(moments.mean[0]),
        std_error=float(moments.std_error[0]),
        n_samples=n,
        w=w,
        blocks={name: float(m) for (name, _), m in zip(blocks, moments.mean[1:])},
    )
    if isinstance(family, CosineFamily):
        result.majorant = 4.0 * math.pi ** 2 * mixture.second_moment()
        if mixture.is_zero_mean:
            result.analytic = cosine_grad_norm_exact(w, mixture)
    logger.debug("G_w estimate %.6g +/- %.2g (%s)", result.value, result.std_error, family.name)
    return result
