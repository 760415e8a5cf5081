"""
Experiment Base
===============

Shared plumbing for the experiment runners: config validation, output
writing, and the mapping from library errors to result dictionaries.
"""

import logging
import os
from typing import Any, Dict

from ..config import EXIT_DIVERGENCE, EXIT_OK, EXIT_USAGE, EXIT_VERDICT_FAILED, ensure_directories
from ..distributions import GaussianMixture, isotropic, mixture_from_spec
from ..errors import ConfigError, DivergenceError, LabError
from ..periodic import PeriodicFn, psi_from_spec
from ..tools import AnalyzerTool, ConfigReaderTool, ResultWriterTool

logger = logging.getLogger(__name__)


class Experiment:
    """
    One experiment: ``run(config)`` writes its files into ``out_dir`` and
    returns a result dictionary with 'success', 'exit_code', 'files' and,
    when the experiment has a pass/fail verdict, 'passed'.
    """

    name = "experiment"
    description = ""

    def __init__(self, out_dir: str, workers: int = 1, strict: bool = False):
        self.out_dir = os.path.abspath(out_dir)
        self.workers = max(1, int(workers))
        self.strict = strict
        self.reader = ConfigReaderTool()
        self.writer = ResultWriterTool(self.out_dir)
        self.analyzer = AnalyzerTool()
        self.files: list = []

    def execute(self, config: Dict[str, Any]) -> Dict[str, Any]:
        raise NotImplementedError

    def run(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run the experiment with an already-merged configuration.

        Returns:
            Dict with 'success', 'exit_code', 'files' and 'summary' or 'error'
        """
        self.files = []
        try:
            if config.get('seed') is None:
                raise ConfigError("a seed is required (--seed or 'seed' in the config file)")
            ensure_directories(self.out_dir)
            self.save_json('effective_config.json', config)
            summary = self.execute(config)
        except DivergenceError as e:
            logger.error("%s diverged: %s", self.name, e)
            return {'success': False, 'error': str(e), 'exit_code': EXIT_DIVERGENCE,
                    'iteration': e.iteration, 'files': self.files}
        except (LabError, ValueError, OSError) as e:
            logger.error("%s failed: %s", self.name, e)
            return {'success': False, 'error': str(e), 'exit_code': EXIT_USAGE, 'files': self.files}

        passed = summary.get('passed')
        exit_code = EXIT_OK
        if self.strict and passed is False:
            exit_code = EXIT_VERDICT_FAILED
        return {'success': True, 'exit_code': exit_code, 'passed': passed,
                'summary': summary, 'files': self.files}

    # ------------------------------------------------------------------
    # Writing
    # ------------------------------------------------------------------

    def _record(self, result: Dict[str, Any]) -> None:
        if not result['success']:
            raise ConfigError(result['error'])
        self.files.append(result['file_path'])

    def save_json(self, name: str, data: Any) -> None:
        self._record(self.writer.write_json(name, data))

    def save_jsonl(self, name: str, records) -> None:
        self._record(self.writer.write_jsonl(name, records))

    def save_csv(self, name: str, rows, fieldnames=None) -> None:
        self._record(self.writer.write_csv(name, rows, fieldnames))

    def save_svg(self, name: str, figure) -> None:
        from ..tools import plotting
        try:
            self._record(self.writer.write_svg(name, figure))
        finally:
            plotting.close(figure)

    # ------------------------------------------------------------------
    # Config helpers
    # ------------------------------------------------------------------

    def load_mixture(self, spec: Any, dim: int, variance: float = 1.0) -> GaussianMixture:
        """None -> N(0, variance I_dim); a dict is a mixture spec; a string is a spec file."""
        if spec is None:
            return isotropic(dim, variance)
        mixture = self.reader.read_mixture(spec) if isinstance(spec, str) else mixture_from_spec(spec)
        if mixture.dim != dim:
            raise ConfigError(f"mixture dimension {mixture.dim} does not match dim {dim}")
        return mixture

    def load_psi(self, spec: Any) -> PeriodicFn:
        if spec is None:
            spec = {'kind': 'cosine'}
        return self.reader.read_psi(spec) if isinstance(spec, str) else psi_from_spec(spec)


def require(config: Dict[str, Any], key: str) -> Any:
    if config.get(key) is None:
        raise ConfigError(f"missing required setting '{key}'")
    return config[key]

