"""
Approximate-Gradient Oracle Simulation
======================================

Training through an epsilon-approximate gradient oracle that answers with
the target-averaged gradient E_{w*}[grad F_{w*}(w)] whenever the true
gradient lies within epsilon of it, plus honest (S)GD baselines and the
cross-target trajectory-independence check.

The averaged gradient is taken over w* uniform on the sphere of radius
||w*|| and depends only on (mixture, psi, family, radius, w), never on the
particular target.
"""

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from .config import BOUND_C2, BOUND_C3, DEFAULT_MEAN_DRAWS, DEFAULT_MC_SAMPLES, MEAN_GRADIENT_SEED
from .distributions import bound_tail_sum, mixture_profile, sample
from .errors import DivergenceError, InvalidParameterError, UnsupportedError
from .objective import Problem, grad_cos_gauss_parts, grad_mc, objective_cos_gauss_closed
from .parallel import derive_seed, ordered_map
from .periodic import evaluate
from .predictors import ClippedReluSumFamily, CosineFamily
from .variance_lab import sample_wstar_sphere

logger = logging.getLogger(__name__)

PI2 = math.pi ** 2

TRAINER_KINDS = ('gd', 'normalized_gd', 'sgd')
MEAN_SOURCES = ('mc', 'quadrature')


# ============================================================================
# Configuration types
# ============================================================================

@dataclass
class OracleConfig:
    epsilon: float
    mean_source: str = 'mc'
    n_mean_draws: int = DEFAULT_MEAN_DRAWS
    mean_seed: int = MEAN_GRADIENT_SEED
    n_x: int = DEFAULT_MC_SAMPLES

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.mean_source not in MEAN_SOURCES:
            raise InvalidParameterError(f"mean_source must be one of {MEAN_SOURCES}")


@dataclass
class Trainer:
    kind: str = 'gd'
    step_size: float = 0.01
    schedule: str = 'constant'
    init: Dict[str, Any] = field(default_factory=lambda: {'rule': 'random_unit', 'scale': 1.0})
    projection_radius: Optional[float] = None
    batch_size: int = 100
    n_train: int = 10_000
    n_x: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TRAINER_KINDS:
            raise InvalidParameterError(f"trainer kind must be one of {TRAINER_KINDS}, got '{self.kind}'")
        if not self.step_size > 0:
            raise InvalidParameterError(f"step size must be positive, got {self.step_size}")
        if self.schedule not in ('constant', 'inverse_sqrt'):
            raise InvalidParameterError(f"unknown step-size schedule '{self.schedule}'")

    def step(self, t: int) -> float:
        if self.schedule == 'inverse_sqrt':
            return self.step_size / math.sqrt(t + 1)
        return self.step_size

    def initial_point(self, problem: Problem) -> np.ndarray:
        rule = self.init.get('rule', 'random_unit')
        scale = float(self.init.get('scale', 1.0))
        n = problem.family.n_params
        if rule == 'vector':
            w = np.asarray(self.init['w'], dtype=float)
            if w.size != n:
                raise InvalidParameterError(f"initial vector has {w.size} entries, expected {n}")
            return w.copy()
        u = np.random.default_rng(derive_seed(self.seed, 1)).standard_normal(n)
        u /= np.linalg.norm(u)
        if rule == 'random_unit':
            return scale * u
        if rule == 'near_target':
            return problem.w_star + scale * u
        raise InvalidParameterError(f"unknown init rule '{rule}'")


@dataclass
class OracleResponse:
    gradient: np.ndarray
    branch: str
    distance: float
    mean_error: float


@dataclass
class TrajectoryRecord:
    iterates: np.ndarray
    branches: List[str]
    distances: List[float]
    objectives: List[Optional[float]]
    final_objective: Optional[float]
    invalid: bool = False

    @property
    def n_true_branch(self) -> int:
        return sum(b == 'true' for b in self.branches)

    def to_records(self) -> List[Dict[str, Any]]:
        """One JSON-ready record per iterate: {t, w, branch, F}."""
        out = []
        for t, w in enumerate(self.iterates):
            out.append({'t': t, 'w': w.tolist(),
                        'branch': self.branches[t - 1] if t > 0 else None,
                        'F': self.objectives[t]})
        return out


@dataclass
class IndependenceReport:
    n_targets: int
    n_pairs: int
    identical_pairs: int
    first_divergence: Dict[str, int]
    true_branch_flags: int
    invalid_runs: int
    records: List[TrajectoryRecord] = field(repr=False, default_factory=list)

    @property
    def fraction_identical(self) -> float:
        return self.identical_pairs / self.n_pairs if self.n_pairs else 1.0

    @property
    def earliest_divergence(self) -> Optional[int]:
        return min(self.first_divergence.values()) if self.first_divergence else None

    def summary(self) -> Dict[str, Any]:
        return {'n_targets': self.n_targets, 'n_pairs': self.n_pairs,
                'identical_pairs': self.identical_pairs,
                'fraction_identical': self.fraction_identical,
                'first_divergence': self.first_divergence,
                'earliest_divergence': self.earliest_divergence,
                'true_branch_flags': self.true_branch_flags, 'invalid_runs': self.invalid_runs,
                'final_objectives': [r.final_objective for r in self.records]}


# ============================================================================
# Target-averaged gradient
# ============================================================================

def _sphere_weight_integral(fn, d: int) -> float:
    """E fn(t) for t the first coordinate of a uniform point on S^{d-1}, d >= 2."""
    alpha = (d - 3) / 2.0
    value, _ = integrate.quad(fn, -1.0, 1.0, weight='alg', wvar=(alpha, alpha),
                              epsabs=0.0, epsrel=1e-10, limit=200)
    return value / math.exp(special.betaln(0.5, (d - 1) / 2.0))


def sphere_mean_gradient_quadrature(w: Any, radius: float, variances: Any,
                                    weights: Optional[Any] = None) -> np.ndarray:
    """
    E_{w*}[grad F_{w*}(w)] for the cosine problem under a zero-mean isotropic mixture.

    For one component N(0, s I) the w*-dependent part averages to
    8 pi^2 s w_hat int (|w| - R t) exp(-2 pi^2 s ((|w| - R)^2 + 2 |w| R (1 - t))) f_d(t) dt
    with f_d(t) proportional to (1 - t^2)^{(d-3)/2}.
    """
    w = np.asarray(w, dtype=float)
    d = w.size
    variances = np.atleast_1d(np.asarray(variances, dtype=float))
    weights = np.ones(1) if weights is None else np.atleast_1d(np.asarray(weights, dtype=float))
    if weights.size != variances.size:
        raise InvalidParameterError("weights and variances differ in length")
    norm = float(np.linalg.norm(w))
    total = np.zeros(d)
    for alpha, s in zip(weights, variances):
        total += alpha * -8.0 * PI2 * s * math.exp(-8.0 * PI2 * s * norm * norm) * w
        if norm == 0.0:
            continue
        if d == 1:
            # w* = +-R with equal mass; both signs give the same target part
            _, target = grad_cos_gauss_parts(w, np.array([radius]), s)
            total += alpha * target
            continue

        def integrand(t, s=s):
            gap = (norm - radius) ** 2 + 2.0 * norm * radius * (1.0 - t)
            return (norm - radius * t) * math.exp(-2.0 * PI2 * s * gap)

        total += alpha * 8.0 * PI2 * s * _sphere_weight_integral(integrand, d) * (w / norm)
    return total


def _shared_sample_gradients(problem: Problem, w: np.ndarray, w_stars: np.ndarray,
                             X: np.ndarray) -> np.ndarray:
    f = problem.family.predict(w, X)
    df = problem.family.grad_w(w, X)
    residual = f[:, None] - evaluate(problem.psi, X @ w_stars.T)
    return 2.0 * residual.T @ df / X.shape[0]


class MeanGradientTable:
    """
    Write-once cache of target-averaged gradients keyed by probe point.

    Entries hold (mean gradient, estimated error). Closed-form problems store
    only the averaged w*-dependent part; the w*-free part is added on lookup.
    """

    def __init__(self, problem: Problem, oracle: OracleConfig):
        self.problem = problem
        self.oracle = oracle
        self.radius = problem.target_norm
        self._lock = threading.Lock()
        self._entries: Dict[bytes, Tuple[np.ndarray, float]] = {}
        d = problem.dim
        self._draws = sample_wstar_sphere(d, self.radius, oracle.n_mean_draws, oracle.mean_seed)
        self._X = None
        if not problem.has_closed_form:
            self._X = sample(problem.mixture, oracle.n_x, derive_seed(oracle.mean_seed, 1))

    def __len__(self) -> int:
        return len(self._entries)

    def _compute(self, w: np.ndarray) -> Tuple[np.ndarray, float]:
        p = self.problem
        if p.has_closed_form and self.oracle.mean_source == 'quadrature':
            comps = p.mixture.components
            if not all(c.is_isotropic for c in comps):
                raise UnsupportedError("quadrature mean needs isotropic components")
            full = sphere_mean_gradient_quadrature(
                w, self.radius, [c.covariance[0, 0] for c in comps], [c.weight for c in comps])
            base, _ = grad_cos_gauss_parts(w, np.zeros_like(w), p.mixture)
            return full - base, 0.0
        if p.has_closed_form:
            _, targets = grad_cos_gauss_parts(w, self._draws, p.mixture)
        else:
            targets = _shared_sample_gradients(p, w, self._draws, self._X)
        mean = targets.mean(axis=0)
        err = math.sqrt(float(np.sum(np.var(targets, axis=0, ddof=1))) / targets.shape[0])
        return mean, err

    def lookup(self, w: np.ndarray) -> Tuple[np.ndarray, float]:
        key = w.tobytes()
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                entry = self._compute(w)
                self._entries[key] = entry
        return entry


def _true_gradient_parts(problem: Problem, w: np.ndarray, table: MeanGradientTable) -> Tuple[np.ndarray, np.ndarray]:
    """(w*-free part, w*-dependent part) of the gradient used by the oracle."""
    if problem.has_closed_form:
        return grad_cos_gauss_parts(w, problem.w_star, problem.mixture)
    g = _shared_sample_gradients(problem, w, problem.w_star[None, :], table._X)[0]
    return np.zeros_like(g), g


def oracle_query(problem: Problem, oracle: OracleConfig, w: Any,
                 table: Optional[MeanGradientTable] = None) -> OracleResponse:
    """
    Answer a gradient query at w.

    Returns the target-averaged gradient when ||grad F_{w*}(w) - mean|| <= epsilon
    (branch 'mean'), else the true gradient (branch 'true').
    """
    w = np.asarray(w, dtype=float).reshape(-1)
    table = table or MeanGradientTable(problem, oracle)
    mean_target, err = table.lookup(w)
    base, target = _true_gradient_parts(problem, w, table)
    distance = float(np.linalg.norm(target - mean_target))
    if distance <= oracle.epsilon:
        return OracleResponse(base + mean_target, 'mean', distance, err)
    return OracleResponse(base + target, 'true', distance, err)


def theorem_epsilon(problem: Problem, r: float, c2: float = BOUND_C2, c3: float = BOUND_C3) -> float:
    """epsilon = cbrt(c2 sup_w G_w (exp(-c3 d) + sum_n eps(n r)))."""
    fam = problem.family
    second = problem.mixture.second_moment()
    if isinstance(fam, CosineFamily):
        g_sup = 4.0 * PI2 * second
    elif isinstance(fam, ClippedReluSumFamily):
        g_sup = fam.n_units * second
    else:
        raise UnsupportedError(f"no uniform gradient bound for family '{fam.name}'")
    series = bound_tail_sum(mixture_profile(problem.mixture), r)
    return (c2 * g_sup * (math.exp(-c3 * problem.dim) + series)) ** (1.0 / 3.0)


# ============================================================================
# Trainers
# ============================================================================

def _honest_gradient(problem: Problem, trainer: Trainer, w: np.ndarray, t: int,
                     train: Optional[np.ndarray], rng: Optional[np.random.Generator]) -> np.ndarray:
    if trainer.kind == 'sgd':
        idx = rng.integers(0, train.shape[0], size=trainer.batch_size)
        X = train[idx]
        return np.mean(2.0 * problem.residual(w, X)[:, None] * problem.family.grad_w(w, X), axis=0)
    if problem.has_closed_form:
        base, target = grad_cos_gauss_parts(w, problem.w_star, problem.mixture)
        return base + target
    return grad_mc(problem, w, trainer.n_x, derive_seed(trainer.seed, 2, t)).value


def _objective_value(problem: Problem, w: np.ndarray) -> Optional[float]:
    if problem.has_closed_form:
        return float(objective_cos_gauss_closed(w, problem.w_star, problem.mixture))
    return None


def run_trainer(problem: Problem, trainer: Trainer, T: int, oracle: Optional[OracleConfig] = None,
                table: Optional[MeanGradientTable] = None) -> TrajectoryRecord:
    """
    Run T steps of (normalized / stochastic) gradient descent.

    With an oracle every gradient comes from ``oracle_query``; without one the
    honest gradient is used. Iterates hold w_1 .. w_{T+1}.
    """
    if T < 0:
        raise InvalidParameterError(f"T must be >= 0, got {T}")
    if oracle is not None and table is None:
        table = MeanGradientTable(problem, oracle)
    w = trainer.initial_point(problem)
    iterates = [w.copy()]
    branches: List[str] = []
    distances: List[float] = []
    objectives = [_objective_value(problem, w)]
    invalid = False

    train = rng = None
    if trainer.kind == 'sgd' and oracle is None:
        train = sample(problem.mixture, trainer.n_train, derive_seed(trainer.seed, 3))
        rng = np.random.default_rng(derive_seed(trainer.seed, 4))

    for t in range(T):
        if oracle is not None:
            resp = oracle_query(problem, oracle, w, table)
            g = resp.gradient
            branches.append(resp.branch)
            distances.append(resp.distance)
            if resp.mean_error >= oracle.epsilon / 10.0:
                invalid = True
        else:
            g = _honest_gradient(problem, trainer, w, t, train, rng)
            branches.append('honest')
            distances.append(0.0)
        if trainer.kind == 'normalized_gd':
            norm = float(np.linalg.norm(g))
            g = g / norm if norm > 0 else g
        w = w - trainer.step(t) * g
        if trainer.projection_radius is not None:
            norm = float(np.linalg.norm(w))
            if norm > trainer.projection_radius:
                w = w * (trainer.projection_radius / norm)
        if not np.all(np.isfinite(w)):
            raise DivergenceError(t + 1)
        iterates.append(w.copy())
        objectives.append(_objective_value(problem, w))

    if invalid:
        logger.warning("mean-gradient error reached epsilon/10; oracle branch test not meaningful")
    return TrajectoryRecord(np.array(iterates), branches, distances, objectives,
                            objectives[-1], invalid)


def first_divergence(a: TrajectoryRecord, b: TrajectoryRecord) -> Optional[int]:
    """Index of the first iterate whose bytes differ, or None."""
    for t, (x, y) in enumerate(zip(a.iterates, b.iterates)):
        if x.tobytes() != y.tobytes():
            return t
    return None


def trajectory_independence_check(problem: Problem, n_targets: int, trainer: Trainer, T: int,
                                  oracle: Optional[OracleConfig] = None, seed: int = 0,
                                  workers: int = 1) -> IndependenceReport:
    """
    Train against n_targets random w* (same radius as the template) with one seed.

    Pairs of trajectories are compared byte for byte.
    """
    if n_targets < 2:
        raise InvalidParameterError(f"need at least two targets, got {n_targets}")
    w_stars = sample_wstar_sphere(problem.dim, problem.target_norm, n_targets, seed)
    table = MeanGradientTable(problem, oracle) if oracle is not None else None

    def run(w_star):
        return run_trainer(problem.with_target(w_star), trainer, T, oracle, table)

    records = ordered_map(run, list(w_stars), workers, desc='trajectories')
    divergence: Dict[str, int] = {}
    identical = 0
    n_pairs = 0
    for i in range(n_targets):
        for j in range(i + 1, n_targets):
            n_pairs += 1
            t = first_divergence(records[i], records[j])
            if t is None:
                identical += 1
            else:
                divergence[f'{i}-{j}'] = t
    report = IndependenceReport(n_targets, n_pairs, identical, divergence,
                                sum(r.n_true_branch for r in records),
                                sum(r.invalid for r in records), records)
    logger.info("trajectory pairs identical: %d/%d, true-branch flags: %d",
                identical, n_pairs, report.true_branch_flags)
    return report
