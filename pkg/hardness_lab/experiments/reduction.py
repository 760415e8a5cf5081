"""
Reduction Experiment
====================

Exhaustive checks of the halfspace-intersection to clipped ReLU-sum
reduction on random (or given) instances, the padding construction, and
the rounding inequality on random pairs.
"""

import logging
from typing import Any, Dict, List

import numpy as np

from ..parallel import derive_seed
from ..reductions import (
    HalfspaceIntersection,
    cube_block,
    exhaustive_check,
    lift_boolean,
    pad_independent,
    random_instance,
    round_and_bound,
    to_clipped_network,
)
from .base import Experiment, require

logger = logging.getLogger(__name__)

PADDING_TOL = 1e-10


def padding_check(h: HalfspaceIntersection) -> Dict[str, Any]:
    """Padded network agrees on lifted cube points; s_min^2 = lambda_min(W'W) + 1."""
    net = to_clipped_network(h)
    padded = pad_independent(net.W)
    X = lift_boolean(cube_block(h.input_dim, 0, 1 << h.input_dim))
    same = bool(np.array_equal(net.predict(X), padded.network().predict(padded.lift(X))))
    W = net.W.astype(float)
    lam_min = float(np.linalg.eigvalsh(W.T @ W)[0])
    gap = abs(padded.s_min ** 2 - (lam_min + 1.0))
    return {'outputs_preserved': same, 's_min': padded.s_min, 'lambda_min': lam_min,
            'gap': gap, 'passed': same and gap <= PADDING_TOL * max(1.0, lam_min + 1.0)}


class ReductionExperiment(Experiment):
    name = "reduction_check"
    description = """Verify the reduction from halfspace intersections exactly.
    Writes reduction.json and instances.jsonl."""

    def _instances(self, config: Dict[str, Any], seed: int) -> List[HalfspaceIntersection]:
        if config.get('instance'):
            return [self.reader.read_instance(config['instance'])]
        n_instances = int(require(config, 'n_instances'))
        max_dim = int(require(config, 'd_minus_1'))
        max_n = int(require(config, 'n'))
        rng = np.random.default_rng(derive_seed(seed, 0))
        out = []
        for i in range(n_instances):
            d1 = int(rng.integers(1, max_dim + 1))
            n = int(rng.integers(1, max_n + 1))
            out.append(random_instance(d1, n, derive_seed(seed, 1, i), config.get('weight_bound')))
        return out

    def execute(self, config: Dict[str, Any]) -> Dict[str, Any]:
        seed = int(config['seed'])
        instances = self._instances(config, seed)

        mismatches = 0
        padding_ok = True
        records = []
        for i, h in enumerate(instances):
            rep = exhaustive_check(h, self.workers)
            pad = padding_check(h)
            mismatches += rep.mismatches
            padding_ok = padding_ok and pad['passed']
            records.append({'index': i, 'instance': h.to_dict(), 'exhaustive': rep.to_dict(),
                            'padding': pad})
        self.save_jsonl('instances.jsonl', records)
        logger.info("reduction: %d instances, %d mismatches", len(instances), mismatches)

        n_pairs = int(config.get('n_rounding_pairs', 100_000))
        rng = np.random.default_rng(derive_seed(seed, 2))
        rounding = round_and_bound(rng.uniform(0.0, 1.0, n_pairs), rng.integers(0, 2, n_pairs))

        summary = {
            'n_instances': len(instances),
            'n_points': sum(r['exhaustive']['n_points'] for r in records),
            'mismatches': mismatches,
            'padding_passed': padding_ok,
            'rounding': rounding.to_dict(),
            'passed': mismatches == 0 and padding_ok and rounding.holds,
        }
        self.save_json('reduction.json', summary)
        return summary
