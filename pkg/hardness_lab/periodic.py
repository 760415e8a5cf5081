"""
Periodic Targets
================

Period-1 bounded-variation functions psi: R -> [-1, 1], their Fourier
coefficients a_z = int_0^1 psi(x) exp(-2 pi i z x) dx, and the exact
one-dimensional ReLU realization of the piecewise-linear ones.

Built-in kinds:
    cosine      psi(t) = cos(2 pi t)
    triangle    psi(t) = 4 |u - 1/2| - 1,  u = t mod 1   (1 at 0, -1 at 1/2)
    square      psi(t) = 1 on [0, 1/2), -1 on [1/2, 1)
    constant    psi(t) = c
    pl          continuous piecewise linear through (t_k, v_k), closed by (1, v_0)
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .config import COEFF_QUAD_TOL, DEFAULT_Z_MAX
from .errors import InvalidParameterError, UnsupportedShapeError

KINDS = ('cosine', 'triangle', 'square', 'constant', 'pl')

TRIANGLE_POINTS = ((0.0, 1.0), (0.5, -1.0))


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """Coefficients a_z for |z| <= z_max, stored densely from -z_max to z_max."""

    z_max: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2 * self.z_max + 1,):
            raise InvalidParameterError("coefficient array does not match z_max")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.z_max, self.z_max + 1)

    def __getitem__(self, z: int) -> complex:
        if abs(z) > self.z_max:
            return 0j
        return complex(self.values[z + self.z_max])

    def items(self) -> Iterator[Tuple[int, complex]]:
        for z, a in zip(self.orders, self.values):
            yield int(z), complex(a)

    def nonzero(self, tol: float = 0.0) -> Dict[int, complex]:
        return {z: a for z, a in self.items() if abs(a) > tol}


@dataclass(frozen=True, eq=False)
class PeriodicFn:
    """A period-1 target psi with a closed-form pointwise evaluator."""

    kind: str
    points: Tuple[Tuple[float, float], ...] = ()
    value: float = 0.0
    z_max: int = DEFAULT_Z_MAX
    _knots: np.ndarray = field(init=False, repr=False)
    _levels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown periodic kind '{self.kind}', expected one of {KINDS}")
        if self.z_max < 1:
            raise InvalidParameterError(f"z_max must be >= 1, got {self.z_max}")
        if self.kind == 'constant' and abs(self.value) > 1:
            raise InvalidParameterError(f"constant must lie in [-1, 1], got {self.value}")

        points = TRIANGLE_POINTS if self.kind == 'triangle' else tuple(
            (float(t), float(v)) for t, v in self.points)
        if self.kind == 'pl':
            if len(points) < 2:
                raise InvalidParameterError("piecewise-linear psi needs at least two points")
            ts = [t for t, _ in points]
            if ts[0] < 0 or ts[-1] >= 1 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise InvalidParameterError("breakpoints must be strictly ascending in [0, 1)")
            if any(abs(v) > 1 for _, v in points):
                raise InvalidParameterError("piecewise-linear values must lie in [-1, 1]")
        object.__setattr__(self, 'points', points)

        if points:
            # knots span [0, 1] and the level at 1 equals the level at 0
            ts = np.array([t for t, _ in points])
            vs = np.array([v for _, v in points])
            if ts[0] > 0:
                v_at_0 = vs[-1] + (vs[0] - vs[-1]) * (1.0 - ts[-1]) / (1.0 - ts[-1] + ts[0])
                ts = np.concatenate([[0.0], ts])
                vs = np.concatenate([[v_at_0], vs])
            knots = np.concatenate([ts, [1.0]])
            levels = np.concatenate([vs, [vs[0]]])
        else:
            knots = levels = np.empty(0)
        object.__setattr__(self, '_knots', knots)
        object.__setattr__(self, '_levels', levels)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def __call__(self, t: Any) -> Any:
        return evaluate(self, t)

    @property
    def is_piecewise_linear(self) -> bool:
        return self.kind in ('triangle', 'pl', 'constant')

    def breakpoints(self) -> np.ndarray:
        """Points of [0, 1) where psi or its slope may jump."""
        if self.kind == 'square':
            return np.array([0.0, 0.5])
        if self._knots.size:
            return self._knots[:-1]
        return np.empty(0)

    def slopes(self) -> np.ndarray:
        """Slope on each segment between consecutive knots (piecewise-linear kinds)."""
        return np.diff(self._levels) / np.diff(self._knots)

    def to_spec(self) -> Dict[str, Any]:
        spec: Dict[str, Any] = {'kind': self.kind}
        if self.kind == 'pl':
            spec['points'] = [list(p) for p in self.points]
        if self.kind == 'constant':
            spec['value'] = self.value
        return spec


# ============================================================================
# Construction helpers
# ============================================================================

def cosine(z_max: int = DEFAULT_Z_MAX) -> PeriodicFn:
    return PeriodicFn('cosine', z_max=z_max)


def triangle(z_max: int = DEFAULT_Z_MAX) -> PeriodicFn:
    return PeriodicFn('triangle', z_max=z_max)


def square(z_max: int = DEFAULT_Z_MAX) -> PeriodicFn:
    return PeriodicFn('square', z_max=z_max)


def constant(value: float, z_max: int = DEFAULT_Z_MAX) -> PeriodicFn:
    return PeriodicFn('constant', value=float(value), z_max=z_max)


def piecewise_linear(points: Sequence[Sequence[float]], z_max: int = DEFAULT_Z_MAX) -> PeriodicFn:
    return PeriodicFn('pl', points=tuple(tuple(p) for p in points), z_max=z_max)


def psi_from_spec(spec: Dict[str, Any]) -> PeriodicFn:
    """Parse ``{"kind": ..., "points": [[t, v], ...], "value": c, "z_max": Z}``."""
    if 'kind' not in spec:
        raise InvalidParameterError(f"psi spec needs a 'kind': {spec}")
    return PeriodicFn(
        kind=spec['kind'],
        points=tuple(tuple(p) for p in spec.get('points', ())),
        value=float(spec.get('value', 0.0)),
        z_max=int(spec.get('z_max', DEFAULT_Z_MAX)),
    )


def load_psi(path: str) -> PeriodicFn:
    with open(path, 'r', encoding='utf-8') as f:
        return psi_from_spec(json.load(f))


# ============================================================================
# Operations
# ============================================================================

def evaluate(psi: PeriodicFn, t: Any) -> Any:
    """psi(t), elementwise for arrays."""
    t_arr = np.asarray(t, dtype=float)
    u = np.mod(t_arr, 1.0)
    if psi.kind == 'cosine':
        out = np.cos(2.0 * math.pi * t_arr)
    elif psi.kind == 'square':
        out = np.where(u < 0.5, 1.0, -1.0)
    elif psi.kind == 'constant':
        out = np.full_like(u, psi.value)
    elif psi.kind == 'triangle':
        out = 4.0 * np.abs(u - 0.5) - 1.0
    else:
        out = np.interp(u, psi._knots, psi._levels)
    return float(out) if np.ndim(out) == 0 else out


def _closed_form_coeffs(psi: PeriodicFn, z_max: int) -> Optional[np.ndarray]:
    z = np.arange(-z_max, z_max + 1)
    a = np.zeros(z.size, dtype=complex)
    odd = (z % 2) != 0
    if psi.kind == 'cosine':
        a[np.abs(z) == 1] = 0.5
    elif psi.kind == 'constant':
        a[z == 0] = psi.value
    elif psi.kind == 'triangle':
        a[odd] = 4.0 / (math.pi ** 2 * z[odd] ** 2)
    elif psi.kind == 'square':
        a[odd] = -2j / (math.pi * z[odd])
    else:
        return None
    return a


def _segments(psi: PeriodicFn) -> List[Tuple[float, float]]:
    edges = sorted(set(psi.breakpoints().tolist()) | {0.0, 1.0})
    return list(zip(edges[:-1], edges[1:]))


def quadrature_coeffs(psi: PeriodicFn, z_max: Optional[int] = None) -> FourierCoefficients:
    """
    Coefficients by adaptive quadrature, for any kind.

    Each smooth segment between breakpoints is integrated separately with
    QUADPACK's Fourier weights (cos / sin), so a_z = C_z - i S_z.
    """
    z_max = psi.z_max if z_max is None else z_max
    if z_max < 1:
        raise InvalidParameterError(f"z_max must be >= 1, got {z_max}")
    segments = _segments(psi)
    positive = np.zeros(z_max + 1, dtype=complex)
    for z in range(z_max + 1):
        re = im = 0.0
        for lo, hi in segments:
            # sample strictly inside the segment so jump values never leak in
            f = (lambda x, lo=lo, hi=hi: evaluate(psi, min(max(x, lo + 1e-15), hi - 1e-15)))
            if z == 0:
                re += integrate.quad(f, lo, hi, epsabs=COEFF_QUAD_TOL, limit=200)[0]
                continue
            omega = 2.0 * math.pi * z
            re += integrate.quad(f, lo, hi, weight='cos', wvar=omega, epsabs=COEFF_QUAD_TOL, limit=200)[0]
            im -= integrate.quad(f, lo, hi, weight='sin', wvar=omega, epsabs=COEFF_QUAD_TOL, limit=200)[0]
        positive[z] = complex(re, im)
    values = np.concatenate([np.conj(positive[:0:-1]), positive])
    return FourierCoefficients(z_max, values)


def fourier_coeffs(psi: PeriodicFn, z_max: Optional[int] = None) -> FourierCoefficients:
    """a_z for |z| <= z_max: closed form for built-ins, quadrature for custom ψ."""
    z_max = psi.z_max if z_max is None else z_max
    if z_max < 1:
        raise InvalidParameterError(f"z_max must be >= 1, got {z_max}")
    values = _closed_form_coeffs(psi, z_max)
    if values is None:
        return quadrature_coeffs(psi, z_max)
    return FourierCoefficients(z_max, values)


def reconstruct(coeffs: FourierCoefficients, t: Any, real: bool = True) -> Any:
    """Truncated series sum_z a_z exp(2 pi i z t)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    phase = np.exp(2j * math.pi * np.outer(t_arr, coeffs.orders))
    out = phase @ coeffs.values
    if real:
        out = out.real
    return out if np.ndim(t) else out[0]


def energy(coeffs: FourierCoefficients) -> float:
    """Truncated Parseval sum sum_z |a_z|^2."""
    return math.fsum(np.abs(coeffs.values) ** 2)


def mean_square(psi: PeriodicFn) -> float:
    """int_0^1 psi^2, exactly."""
    if psi.kind == 'cosine':
        return 0.5
    if psi.kind == 'square':
        return 1.0
    if psi.kind == 'constant':
        return psi.value ** 2
    v0, v1 = psi._levels[:-1], psi._levels[1:]
    return math.fsum(np.diff(psi._knots) * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0)


def total_variation(psi: PeriodicFn) -> float:
    """Total variation over one period."""
    if psi.kind in ('cosine', 'square'):
        return 4.0
    if psi.kind == 'constant':
        return 0.0
    return math.fsum(np.abs(np.diff(psi._levels)))


# ============================================================================
# ReLU realization
# ============================================================================

@dataclass(frozen=True, eq=False)
class ReluNetwork1D:
    """t -> bias + sum_k coefs[k] * [t - knots[k]]_+ on [lo, hi]."""

    bias: float
    knots: np.ndarray
    coefs: np.ndarray
    interval: Tuple[float, float]

    @property
    def n_units(self) -> int:
        return int(self.knots.size)

    def __call__(self, t: Any) -> Any:
        t_arr = np.asarray(t, dtype=float)
        out = self.bias + np.maximum(t_arr[..., None] - self.knots, 0.0) @ self.coefs
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> Dict[str, Any]:
        return {'bias': self.bias, 'knots': self.knots.tolist(), 'coefs': self.coefs.tolist(),
                'interval': list(self.interval)}


def _slope_right(psi: PeriodicFn, t: float) -> float:
    u = t - math.floor(t)
    idx = int(np.searchsorted(psi._knots, u, side='right')) - 1
    return float(psi.slopes()[min(idx, psi.slopes().size - 1)])


def as_relu_network(psi: PeriodicFn, interval: Sequence[float]) -> ReluNetwork1D:
    """
    Exact realization of a piecewise-linear psi on [lo, hi].

    psi(t) = psi(lo) + s_0 [t - lo]_+ + sum_k (s_k^+ - s_k^-) [t - t_k]_+ with one
    unit per breakpoint t_k in (lo, hi]; breakpoints without a slope change
    are skipped.
    """
    lo, hi = (float(v) for v in interval)
    if not lo < hi:
        raise InvalidParameterError(f"interval must satisfy lo < hi, got [{lo}, {hi}]")
    if psi.kind == 'square':
        raise UnsupportedShapeError("square wave is discontinuous; no ReLU realization")
    if not psi.is_piecewise_linear:
        raise UnsupportedShapeError(f"'{psi.kind}' is not piecewise linear")
    if psi.kind == 'constant':
        return ReluNetwork1D(psi.value, np.empty(0), np.empty(0), (lo, hi))

    knots = [lo]
    coefs = [_slope_right(psi, lo)]
    base = psi.breakpoints()
    for period in range(math.floor(lo), math.floor(hi) + 1):
        for b in base + period:
            if lo < b <= hi:
                change = _slope_right(psi, b) - _slope_right(psi, b - 0.5 * _min_gap(psi))
                if change != 0.0:
                    knots.append(float(b))
                    coefs.append(change)
    return ReluNetwork1D(float(evaluate(psi, lo)), np.array(knots), np.array(coefs), (lo, hi))


def _min_gap(psi: PeriodicFn) -> float:
    return float(np.min(np.diff(psi._knots)))
