"""
Trajectory Experiment
=====================

Gradient descent against several random targets with one shared seed,
either through the approximate-gradient oracle or with honest gradients,
and a byte-level comparison of the resulting trajectories.
"""

import logging
from typing import Any, Dict

import numpy as np

from ..errors import ConfigError
from ..objective import Problem
from ..oracle_sim import OracleConfig, Trainer, theorem_epsilon, trajectory_independence_check
from ..predictors import family_from_spec
from .base import Experiment, require

logger = logging.getLogger(__name__)


class TrajectoryExperiment(Experiment):
    name = "trajectory"
    description = """Run seeded training against random targets of norm 2r.
    Writes trajectories.jsonl and independence.json."""

    def execute(self, config: Dict[str, Any]) -> Dict[str, Any]:
        seed = int(config['seed'])
        d = int(require(config, 'dim'))
        r = float(require(config, 'r'))
        T = int(require(config, 'T'))
        n_targets = int(require(config, 'n_targets'))
        if r <= 0:
            raise ConfigError(f"r must be positive, got {r}")

        mixture = self.load_mixture(config.get('mixture'), d, float(config.get('variance', 1.0)))
        template = np.zeros(d)
        template[0] = 2.0 * r
        problem = Problem(mixture, self.load_psi(config.get('psi')), template,
                          family_from_spec(config.get('family', 'cosine'), d))

        trainer = Trainer(**{'seed': seed, **(config.get('trainer') or {})})
        oracle_cfg = dict(config.get('oracle') or {})
        oracle = None
        epsilon = None
        if oracle_cfg.pop('enabled', True):
            epsilon = oracle_cfg.pop('epsilon', None)
            if epsilon is None:
                epsilon = theorem_epsilon(problem, r, float(config.get('c2', 1.0)),
                                          float(config.get('c3', 1.0)))
            oracle = OracleConfig(epsilon=float(epsilon), **oracle_cfg)
            logger.info("oracle epsilon = %.6e", epsilon)

        report = trajectory_independence_check(problem, n_targets, trainer, T, oracle,
                                               seed=seed, workers=self.workers)

        if config.get('dump_trajectories', True):
            records = []
            for k, rec in enumerate(report.records):
                records.extend({'target': k, **row} for row in rec.to_records())
            self.save_jsonl('trajectories.jsonl', records)

        summary = {**report.summary(), 'epsilon': epsilon, 'oracle': oracle is not None,
                   'dim': d, 'r': r, 'T': T, 'target_norm': 2.0 * r}
        if oracle is not None:
            summary['passed'] = (report.identical_pairs == report.n_pairs
                                 and report.true_branch_flags == 0 and report.invalid_runs == 0)
        else:
            summary['passed'] = None
        self.save_json('independence.json', summary)
        return summary
