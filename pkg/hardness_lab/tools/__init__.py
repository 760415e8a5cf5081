"""
Lab Tools Module
================

Small single-purpose tools used by the experiments:
- config_reader: Read json/yaml configs, mixture and psi specs, csv datasets
- result_writer: Write csv/json/jsonl/svg into the run output directory
- analyzer: Landscape extrema
- plotting: Deterministic SVG figures
"""

from .analyzer import AnalyzerTool
from .config_reader import ConfigReaderTool
from .result_writer import ResultWriterTool

__all__ = [
    'ConfigReaderTool',
    'ResultWriterTool',
    'AnalyzerTool'
]
