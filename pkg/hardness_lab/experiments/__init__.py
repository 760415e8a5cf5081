"""
Experiments Module
==================

Runnable experiments, one per command-line subcommand:
- landscape: objective heatmap over a 2-D parameter grid
- variance_scan: gradient variance over random targets
- trajectory: oracle-driven and honest training against random targets
- invariance: invariance verdicts, transport, span coverage
- reduction_check: halfspace-intersection reduction checks
"""

from .base import Experiment
from .invariance import InvarianceExperiment
from .landscape import LandscapeExperiment
from .reduction import ReductionExperiment
from .trajectory import TrajectoryExperiment
from .variance_scan import VarianceScanExperiment

EXPERIMENTS = {
    'landscape': LandscapeExperiment,
    'variance_scan': VarianceScanExperiment,
    'trajectory': TrajectoryExperiment,
    'invariance': InvarianceExperiment,
    'reduction_check': ReductionExperiment,
}

__all__ = [
    'EXPERIMENTS',
    'Experiment',
    'LandscapeExperiment',
    'VarianceScanExperiment',
    'TrajectoryExperiment',
    'InvarianceExperiment',
    'ReductionExperiment',
]
