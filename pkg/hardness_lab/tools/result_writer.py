"""
Result Writer Tool
==================

Tool for writing experiment results (csv, json, jsonl, svg) into a run's
output directory. Output is byte-stable: sorted JSON keys, repr floats in
CSV, and SVG without dates.
"""

import csv
import io
import json
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..config import WRITABLE_EXTENSIONS


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return 'nan' if math.isnan(x) else ('inf' if x > 0 else '-inf')
    return obj


def _csv_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ''
    return str(value)


class ResultWriterTool:
    """
    Tool for writing result files inside one output directory.

    Supported formats: .csv, .json, .jsonl, .svg
    """

    name = "result_writer"
    description = """Write an experiment result file.
    Supported formats: csv, json, jsonl, svg.
    Writes are restricted to the run output directory.
    Returns success status and file info."""

    def __init__(self, out_dir: str):
        self.out_dir = os.path.abspath(out_dir)

    def _resolve_path(self, file_path: str) -> str:
        """Resolve relative paths against the output directory."""
        if os.path.isabs(file_path):
            return file_path
        return os.path.join(self.out_dir, file_path)

    def _validate_path(self, file_path: str) -> tuple[bool, str]:
        """Validate file path for type and location."""
        abs_path = os.path.normpath(self._resolve_path(file_path))

        ext = os.path.splitext(abs_path)[1].lower()
        if ext not in WRITABLE_EXTENSIONS:
            return False, f"Unsupported file type: {ext}. Allowed: {WRITABLE_EXTENSIONS}"

        if os.path.commonpath([abs_path, self.out_dir]) != self.out_dir:
            return False, f"Write not allowed outside the output directory: {self.out_dir}"

        return True, abs_path

    def run(self, file_path: str, content: Any) -> Dict[str, Any]:
        """
        Write text or bytes to a file.

        Args:
            file_path: Path inside the output directory
            content: str or bytes

        Returns:
            Dict with 'success', 'file_path', 'size' or 'error' keys
        """
        valid, result = self._validate_path(file_path)

        if not valid:
            return {
                'success': False,
                'error': result
            }

        abs_path = result

        data = content.encode('utf-8') if isinstance(content, str) else bytes(content)
        try:
            os.makedirs(os.path.dirname(abs_path), exist_ok=True)
            with open(abs_path, 'wb') as f:
                f.write(data)
        except OSError as e:
            return {
                'success': False,
                'error': f"Failed to write file: {str(e)}"
            }

        return {
            'success': True,
            'file_path': abs_path,
            'size': len(data)
        }

    def write_json(self, file_path: str, data: Any) -> Dict[str, Any]:
        text = json.dumps(to_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False)
        return self.run(file_path, text + '\n')

    def write_jsonl(self, file_path: str, records: Iterable[Any]) -> Dict[str, Any]:
        lines = [json.dumps(to_jsonable(r), sort_keys=True, separators=(',', ':')) for r in records]
        return self.run(file_path, ''.join(line + '\n' for line in lines))

    def write_csv(self, file_path: str, rows: Sequence[Dict[str, Any]],
                  fieldnames: Optional[List[str]] = None) -> Dict[str, Any]:
        """Rows of dicts; columns in ``fieldnames`` order (first row's keys by default)."""
        if fieldnames is None:
            fieldnames = list(rows[0].keys()) if rows else []
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_csv_cell(row.get(k)) for k in fieldnames])
        return self.run(file_path, buf.getvalue())

    def write_svg(self, file_path: str, figure: Any) -> Dict[str, Any]:
        """Save a matplotlib figure as SVG without the date stamp."""
        buf = io.BytesIO()
        figure.savefig(buf, format='svg', metadata={'Date': None}, bbox_inches='tight')
        return self.run(file_path, buf.getvalue())

