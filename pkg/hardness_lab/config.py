"""
Hardness Lab Configuration
==========================

Central configuration file for all lab components.

Built-in experiment defaults live in ``project_config.yaml`` at the project
root; environment overrides are read from ``.env``.
"""

import copy
import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

load_dotenv()

# ============================================================================
# Directory Paths
# ============================================================================

# Base directory (project root, one level above the package)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

PROJECT_CONFIG_FILE = os.path.join(BASE_DIR, 'project_config.yaml')

# Output directory
OUTPUT_DIR = os.getenv('LAB_OUTPUT_DIR', os.path.join(BASE_DIR, 'output'))

# ============================================================================
# File Handling
# ============================================================================

# Inputs the config reader accepts
READABLE_EXTENSIONS = ['.json', '.yaml', '.yml', '.csv']

# Outputs the result writer produces
WRITABLE_EXTENSIONS = ['.csv', '.json', '.jsonl', '.svg']

# Max file size to read (in bytes)
MAX_FILE_SIZE = 50 * 1024 * 1024  # 50MB

# ============================================================================
# Runtime Configuration
# ============================================================================

LOG_LEVEL = os.getenv('LAB_LOG_LEVEL', 'INFO')

# Progress bars on stderr
VERBOSE = os.getenv('LAB_VERBOSE', '1').lower() not in ('0', 'false', 'no')

# Default worker count for chunked sampling and cell sweeps
DEFAULT_WORKERS = int(os.getenv('LAB_WORKERS', '1'))

# ============================================================================
# Numerical Configuration
# ============================================================================

# Samples per seeded chunk; never depends on the worker count
SAMPLE_CHUNK_SIZE = 1 << 15

# Mixture weights must sum to one within this tolerance
WEIGHT_SUM_TOL = 1e-12

# Symmetry tolerance for covariance matrices (relative to max |entry|)
SYMMETRY_TOL = 1e-12

# Default Fourier truncation order
DEFAULT_Z_MAX = 200

# Absolute error target for Fourier coefficient quadrature
COEFF_QUAD_TOL = 1e-12

# Generalized chi-square tails below this level use the isotropic majorant
IMHOF_FLOOR = 1e-8

# Terms of the tail series summed explicitly
DEFAULT_SERIES_TERMS = 50

# Singular values below RANK_TOL * sigma_max are treated as zero
RANK_TOL = 1e-12

# Whitening Gram identity check
GRAM_TOL = 1e-10

# Relative least-squares residual below which a vector is "in the span"
SPAN_TOL = 1e-8

# Default Monte-Carlo sizes
DEFAULT_MC_SAMPLES = 100_000

# Sphere draws used to estimate the w*-averaged gradient
DEFAULT_MEAN_DRAWS = 10_000
MEAN_GRADIENT_SEED = 20_240_601

# Universal constants of the variance bound (unspecified; declared convention)
BOUND_C2 = 1.0
BOUND_C3 = 1.0

# Fixed salt so matplotlib SVG output is byte-identical across runs
SVG_HASH_SALT = 'hardness-lab'

# ============================================================================
# Exit Codes
# ============================================================================

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERDICT_FAILED = 2
EXIT_DIVERGENCE = 3

# ============================================================================
# Helper Functions
# ============================================================================

_PROJECT_CONFIG: Optional[Dict[str, Any]] = None


def load_project_config(path: str = PROJECT_CONFIG_FILE) -> Dict[str, Any]:
    """Load (and cache) the YAML project configuration."""
    global _PROJECT_CONFIG
    if path != PROJECT_CONFIG_FILE:
        with open(path, 'r', encoding='utf-8') as f:
            return yaml.safe_load(f) or {}
    if _PROJECT_CONFIG is None:
        with open(path, 'r', encoding='utf-8') as f:
            _PROJECT_CONFIG = yaml.safe_load(f) or {}
    return copy.deepcopy(_PROJECT_CONFIG)


def get_experiment_defaults(name: str) -> Dict[str, Any]:
    """Built-in defaults for one experiment block of project_config.yaml."""
    experiments = load_project_config().get('experiments', {})
    return copy.deepcopy(experiments.get(name, {}))


def merge_config(defaults: Dict[str, Any],
                 file_config: Optional[Dict[str, Any]] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Merge configuration layers: overrides > file_config > defaults.

    Nested dictionaries are merged recursively; ``None`` override values are
    ignored so unset CLI flags never mask the lower layers.
    """
    merged = copy.deepcopy(defaults)
    for layer in (file_config or {}, overrides or {}):
        _deep_update(merged, layer)
    return merged


def _deep_update(base: Dict[str, Any], layer: Dict[str, Any]) -> None:
    for key, value in layer.items():
        if value is None:
            continue
        if isinstance(value, dict):
            if not isinstance(base.get(key), dict):
                base[key] = {}
            _deep_update(base[key], value)
        else:
            base[key] = copy.deepcopy(value)


def ensure_directories(*dirs: str) -> None:
    """Create the given directories (the output root when none are given)."""
    for d in dirs or (OUTPUT_DIR,):
        os.makedirs(d, exist_ok=True)


def get_output_path(*parts: str) -> str:
    """Path under the output root, e.g. get_output_path('landscape')."""
    return os.path.join(OUTPUT_DIR, *parts)
