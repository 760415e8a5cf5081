"""
Landscape Experiment
====================

Objective F(w) over a 2-D grid of predictor parameters: grid CSV, SVG
heatmap and a JSON summary of the grid extrema and of how flat the
landscape is away from the critical points.
"""

import logging
from typing import Any, Dict

import numpy as np

from ..errors import ConfigError
from ..objective import Problem, landscape_grid
from ..predictors import family_from_spec
from ..tools import plotting
from .base import Experiment, require

logger = logging.getLogger(__name__)


class LandscapeExperiment(Experiment):
    name = "landscape"
    description = """Sweep F(w) over a two-parameter grid.
    Writes landscape.csv, landscape.svg and summary.json."""

    def execute(self, config: Dict[str, Any]) -> Dict[str, Any]:
        w_star = np.asarray(require(config, 'w_star'), dtype=float)
        if w_star.size != 2:
            raise ConfigError(f"landscape needs a 2-D target, got {w_star.size} entries")
        bounds = require(config, 'bounds')
        if len(bounds) != 2 or any(len(b) != 2 for b in bounds):
            raise ConfigError(f"bounds must be [[lo1, hi1], [lo2, hi2]], got {bounds}")
        resolution = int(require(config, 'resolution'))

        problem = Problem(self.load_mixture(config.get('mixture'), 2),
                          self.load_psi(config.get('psi')), w_star,
                          family_from_spec(config.get('family', 'cosine'), 2))
        grid = landscape_grid(problem, bounds, resolution,
                              anchors=bool(config.get('anchors', True)),
                              n=int(config.get('n_samples', 10_000)),
                              seed=int(config['seed']), workers=self.workers)
        logger.info("landscape grid %dx%d (closed form: %s)",
                    grid.values.shape[0], grid.values.shape[1], grid.closed_form)

        rows = []
        for i, a in enumerate(grid.axes[0]):
            for j, b in enumerate(grid.axes[1]):
                row = {'w1': float(a), 'w2': float(b), 'F': float(grid.values[i, j])}
                if grid.grad_norms is not None:
                    row['grad_norm'] = float(grid.grad_norms[i, j])
                rows.append(row)
        self.save_csv('landscape.csv', rows)

        probes = [w_star.tolist(), (-w_star).tolist(), [0.0, 0.0]]
        extrema = self.analyzer.grid_extrema(grid, probes)
        summary: Dict[str, Any] = {
            'w_star': w_star.tolist(),
            'closed_form': grid.closed_form,
            'shape': list(grid.values.shape),
            'anchors': [list(p) for p in grid.anchors],
            'min_value': extrema['min_value'],
            'minima': extrema['minima'],
            'maximum': extrema['maximum'],
            'nearest': extrema['nearest'],
            'passed': None,
        }
        if grid.grad_norms is not None:
            radius = float(config.get('flat_radius', 0.5))
            threshold = float(config.get('flat_threshold', 1e-6))
            summary['flat'] = {'radius': radius, 'threshold': threshold,
                               'fraction': grid.flat_fraction(probes, radius, threshold)}
        self.save_json('summary.json', summary)

        fig = plotting.landscape_figure(grid, scale=config.get('scale', 'log'),
                                        marks=[p for p in probes[:2]])
        self.save_svg('landscape.svg', fig)
        return summary
