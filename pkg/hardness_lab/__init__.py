"""
Hardness Lab
============

Numerical experiments on why gradient methods fail to learn periodic
targets ψ(⟨w*, x⟩) under Fourier-concentrated inputs, and on invariance
and reduction arguments for shallow networks.

Modules:
- distributions: Gaussian mixtures, sampling, concentration profiles ε(r)
- periodic: 1-periodic targets, Fourier coefficients, ReLU realisations
- predictors: predictor families with analytic gradients
- objective: F(w) by Monte Carlo or closed form, landscape grids
- variance_lab: gradient variance over random targets, decay bounds
- oracle_sim: approximate-gradient oracle and trajectory independence
- invariance: whitening, invariance checks, transport, span coverage
- reductions: halfspace intersections as clipped ReLU-sum networks
"""

from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    InvalidParameterError,
    LabError,
    RankDeficientError,
    UnsupportedError,
    UnsupportedShapeError,
)

__version__ = '0.1.0'

__all__ = [
    'LabError',
    'DimensionError',
    'InvalidParameterError',
    'UnsupportedShapeError',
    'UnsupportedError',
    'RankDeficientError',
    'DivergenceError',
    'ConfigError',
]
