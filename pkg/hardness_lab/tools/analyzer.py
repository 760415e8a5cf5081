"""
Analyzer Tool
=============

Tool for summarising a landscape grid: its minima, its maximum and the
cells nearest a set of probe points.
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..objective import LandscapeGrid

# Cells within this distance of the grid minimum all count as minima
MINIMUM_TIE_TOL = 1e-12


class AnalyzerTool:
    """Tool for locating the critical cells of a landscape grid."""

    name = "analyzer"
    description = """Analyze a landscape grid.
    Locates the minima and the maximum, and the cells nearest given points."""

    def grid_extrema(self, grid: LandscapeGrid,
                     probes: Optional[Sequence[Sequence[float]]] = None) -> Dict[str, Any]:
        """
        Minima (every cell within MINIMUM_TIE_TOL of the smallest value), the
        maximum cell, and the cell nearest each probe point.
        """
        values = grid.values
        lo = float(np.min(values))
        hi_idx = np.unravel_index(int(np.argmax(values)), values.shape)

        def cell(i, j) -> Dict[str, Any]:
            return {'w': [float(grid.axes[0][i]), float(grid.axes[1][j])],
                    'index': [int(i), int(j)], 'F': float(values[i, j])}

        minima = [cell(i, j) for i, j in zip(*np.nonzero(values <= lo + MINIMUM_TIE_TOL))]
        nearest: List[Dict[str, Any]] = []
        for p in probes or []:
            i = int(np.argmin(np.abs(grid.axes[0] - p[0])))
            j = int(np.argmin(np.abs(grid.axes[1] - p[1])))
            nearest.append({'probe': [float(p[0]), float(p[1])], **cell(i, j)})

        return {
            'success': True,
            'min_value': lo,
            'minima': minima,
            'maximum': cell(*hi_idx),
            'nearest': nearest,
        }
