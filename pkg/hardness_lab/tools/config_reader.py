"""
Config Reader Tool
==================

Tool for reading experiment inputs (json, yaml, csv): run configurations,
mixture specs, psi specs, halfspace instances and CSV datasets.
"""

import json
import os
from typing import Any, Dict

import numpy as np
import yaml

from ..config import BASE_DIR, MAX_FILE_SIZE, READABLE_EXTENSIONS
from ..distributions import GaussianMixture, mixture_from_spec
from ..errors import ConfigError, LabError
from ..invariance import Dataset
from ..periodic import PeriodicFn, psi_from_spec
from ..reductions import HalfspaceIntersection


class ConfigReaderTool:
    """
    Tool for reading and parsing experiment input files.

    Supported formats: .json, .yaml, .yml, .csv
    """

    name = "config_reader"
    description = """Read an experiment input file.
    Supported formats: json, yaml, csv.
    Input should be the file path (relative to workspace or absolute).
    Returns the raw text and, for json/yaml, the parsed object."""

    def __init__(self, base_dir: str = BASE_DIR):
        self.base_dir = base_dir

    def _resolve_path(self, file_path: str) -> str:
        """Resolve relative paths to absolute paths."""
        if os.path.isabs(file_path):
            return file_path
        return os.path.join(self.base_dir, file_path)

    def _validate_path(self, file_path: str) -> tuple[bool, str]:
        """Validate file path for existence, type and size."""
        abs_path = self._resolve_path(file_path)

        if not os.path.exists(abs_path):
            return False, f"File not found: {file_path}"

        if not os.path.isfile(abs_path):
            return False, f"Not a file: {file_path}"

        ext = os.path.splitext(abs_path)[1].lower()
        if ext not in READABLE_EXTENSIONS:
            return False, f"Unsupported file type: {ext}. Allowed: {READABLE_EXTENSIONS}"

        size = os.path.getsize(abs_path)
        if size > MAX_FILE_SIZE:
            return False, f"File too large: {size} bytes (max: {MAX_FILE_SIZE})"

        return True, abs_path

    def run(self, file_path: str) -> Dict[str, Any]:
        """
        Read a file and parse it when it is json or yaml.

        Args:
            file_path: Path to the file (relative or absolute)

        Returns:
            Dict with 'success', 'content', 'parsed' or 'error' keys
        """
        valid, result = self._validate_path(file_path)

        if not valid:
            return {
                'success': False,
                'error': result
            }

        abs_path = result
        ext = os.path.splitext(abs_path)[1].lower()

        try:
            with open(abs_path, 'r', encoding='utf-8') as f:
                content = f.read()
        except (OSError, UnicodeDecodeError) as e:
            return {
                'success': False,
                'error': f"Failed to read file: {str(e)}"
            }

        parsed = None
        try:
            if ext == '.json':
                parsed = json.loads(content)
            elif ext in ('.yaml', '.yml'):
                parsed = yaml.safe_load(content)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            return {
                'success': False,
                'error': f"Failed to parse {ext[1:]}: {str(e)}"
            }

        return {
            'success': True,
            'content': content,
            'parsed': parsed,
            'file_path': abs_path,
            'file_type': ext[1:],
            'size': len(content)
        }

    def read_mapping(self, file_path: str) -> Dict[str, Any]:
        """Parsed json/yaml object, which must be a mapping; raises ConfigError otherwise."""
        result = self.run(file_path)
        if not result['success']:
            raise ConfigError(result['error'])
        parsed = result['parsed']
        if parsed is None:
            return {}
        if not isinstance(parsed, dict):
            raise ConfigError(f"{file_path}: expected a mapping at top level")
        return parsed

    def read_mixture(self, file_path: str) -> GaussianMixture:
        return mixture_from_spec(self.read_mapping(file_path))

    def read_psi(self, file_path: str) -> PeriodicFn:
        return psi_from_spec(self.read_mapping(file_path))

    def read_instance(self, file_path: str) -> HalfspaceIntersection:
        return HalfspaceIntersection.from_dict(self.read_mapping(file_path))

    def read_dataset_csv(self, file_path: str) -> Dataset:
        """
        One instance per row: feature columns followed by the label column.
        A non-numeric first line is treated as a header.
        """
        result = self.run(file_path)
        if not result['success']:
            raise ConfigError(result['error'])
        lines = [ln for ln in result['content'].splitlines() if ln.strip()]
        if lines:
            try:
                [float(v) for v in lines[0].split(',')]
            except ValueError:
                lines = lines[1:]
        if not lines:
            raise ConfigError(f"{file_path}: no data rows")
        try:
            table = np.array([[float(v) for v in ln.split(',')] for ln in lines])
        except ValueError as e:
            raise ConfigError(f"{file_path}: {e}") from e
        if table.ndim != 2 or table.shape[1] < 2:
            raise ConfigError(f"{file_path}: need at least one feature and a label per row")
        try:
            return Dataset(table[:, :-1].T, table[:, -1])
        except LabError as e:
            raise ConfigError(f"{file_path}: {e}") from e
