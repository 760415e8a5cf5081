"""Tests for hardness_lab.tools."""

import json
import math

import numpy as np
import pytest

from hardness_lab.errors import ConfigError
from hardness_lab.objective import LandscapeGrid
from hardness_lab.tools import AnalyzerTool, ConfigReaderTool, ResultWriterTool
from hardness_lab.tools.result_writer import to_jsonable


# ============================================================================
# Config reader
# ============================================================================

def test_reads_json_and_yaml(tmp_path):
    (tmp_path / 'a.json').write_text('{"seed": 3, "dims": [1, 2]}')
    (tmp_path / 'b.yaml').write_text('seed: 4\nradii:\n  - 0.5\n')
    reader = ConfigReaderTool(str(tmp_path))
    assert reader.run('a.json')['parsed'] == {'seed': 3, 'dims': [1, 2]}
    result = reader.run(str(tmp_path / 'b.yaml'))
    assert result['success'] and result['file_type'] == 'yaml'
    assert result['parsed'] == {'seed': 4, 'radii': [0.5]}


def test_reader_errors(tmp_path):
    (tmp_path / 'bad.json').write_text('{"seed": ')
    (tmp_path / 'list.json').write_text('[1, 2]')
    (tmp_path / 'notes.txt').write_text('hello')
    reader = ConfigReaderTool(str(tmp_path))
    assert not reader.run('missing.json')['success']
    assert 'Unsupported' in reader.run('notes.txt')['error']
    assert not reader.run('bad.json')['success']
    with pytest.raises(ConfigError):
        reader.read_mapping('list.json')
    with pytest.raises(ConfigError):
        reader.read_mapping('bad.json')


def test_reads_domain_objects(tmp_path):
    (tmp_path / 'mix.json').write_text(json.dumps(
        {'dim': 2, 'components': [{'weight': 1.0, 'mean': [0, 0], 'cov': {'iso': 1.0}}]}))
    (tmp_path / 'psi.json').write_text('{"kind": "triangle"}')
    (tmp_path / 'h.json').write_text('{"weights": [[1, 1]], "thresholds": [2]}')
    reader = ConfigReaderTool(str(tmp_path))
    assert reader.read_mixture('mix.json').dim == 2
    assert reader.read_psi('psi.json').kind == 'triangle'
    assert reader.read_instance('h.json').n == 1


def test_reads_dataset_csv(tmp_path):
    (tmp_path / 'with_header.csv').write_text('x1,x2,y\n1,2,3\n4,5,6\n')
    (tmp_path / 'plain.csv').write_text('1,2,3\n4,5,6\n')
    (tmp_path / 'labels_only.csv').write_text('1\n2\n')
    (tmp_path / 'ragged.csv').write_text('1,2,3\n4,5\n')
    reader = ConfigReaderTool(str(tmp_path))
    for name in ('with_header.csv', 'plain.csv'):
        ds = reader.read_dataset_csv(name)
        assert ds.X.tolist() == [[1.0, 4.0], [2.0, 5.0]]
        assert ds.y.tolist() == [3.0, 6.0]
    for name in ('labels_only.csv', 'ragged.csv'):
        with pytest.raises(ConfigError):
            reader.read_dataset_csv(name)


# ============================================================================
# Result writer
# ============================================================================

def test_to_jsonable():
    data = {'a': np.float64(1.5), 'b': np.array([1, 2]), 'c': (np.bool_(True), math.inf, -math.inf),
            1: math.nan}
    assert to_jsonable(data) == {'a': 1.5, 'b': [1, 2], 'c': [True, 'inf', '-inf'], '1': 'nan'}


def test_json_is_sorted_and_stable(tmp_path):
    writer = ResultWriterTool(str(tmp_path))
    writer.write_json('out.json', {'b': 1, 'a': [0.1, 2]})
    text = (tmp_path / 'out.json').read_text()
    assert text == '{\n  "a": [\n    0.1,\n    2\n  ],\n  "b": 1\n}\n'


def test_jsonl_one_record_per_line(tmp_path):
    writer = ResultWriterTool(str(tmp_path))
    writer.write_jsonl('t.jsonl', [{'t': 0, 'w': [1.0]}, {'t': 1, 'w': [0.5], 'branch': 'mean'}])
    assert (tmp_path / 't.jsonl').read_text() == '{"t":0,"w":[1.0]}\n{"branch":"mean","t":1,"w":[0.5]}\n'


def test_csv_uses_repr_floats(tmp_path):
    writer = ResultWriterTool(str(tmp_path))
    writer.write_csv('grid.csv', [{'w1': 0.1, 'F': 1 / 3, 'ok': True}, {'w1': -2.0, 'F': None, 'ok': False}],
                     fieldnames=['w1', 'F', 'ok'])
    assert (tmp_path / 'grid.csv').read_text() == 'w1,F,ok\n0.1,0.3333333333333333,true\n-2.0,,false\n'


def test_writer_confines_paths_and_replaces_files(tmp_path):
    writer = ResultWriterTool(str(tmp_path / 'run'))
    assert not writer.run('../escape.json', '{}')['success']
    assert not writer.run('notes.txt', 'x')['success']
    assert writer.run('nested/ok.json', '{}')['success']
    assert writer.run('nested/ok.json', '[]')['success']
    assert (tmp_path / 'run' / 'nested' / 'ok.json').read_text() == '[]'


def test_svg_is_byte_stable(tmp_path):
    from hardness_lab.tools import plotting

    writer = ResultWriterTool(str(tmp_path))
    for name in ('a.svg', 'b.svg'):
        fig = plotting.decay_figure({'d=5': [(0.25, -1.0), (1.0, -4.0), (2.25, -math.inf)]})
        writer.write_svg(name, fig)
        plotting.close(fig)
    a = (tmp_path / 'a.svg').read_bytes()
    assert b'<dc:date>' not in a
    assert a == (tmp_path / 'b.svg').read_bytes()


def test_landscape_figure_handles_exact_zeros(tmp_path):
    from hardness_lab.tools import plotting

    axes = (np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    grid = LandscapeGrid(axes, np.abs(np.add.outer(axes[0], axes[1])))
    for scale in ('log', 'linear'):
        fig = plotting.landscape_figure(grid, scale=scale, marks=[(0.0, 0.0)])
        assert ResultWriterTool(str(tmp_path)).write_svg(f'{scale}.svg', fig)['success']
        plotting.close(fig)


# ============================================================================
# Analyzer
# ============================================================================

def test_grid_extrema():
    axes = (np.array([-1.0, 0.0, 1.0]), np.array([-1.0, 0.0, 1.0]))
    values = np.array([[0.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 0.0]])
    result = AnalyzerTool().grid_extrema(LandscapeGrid(axes, values), probes=[[0.9, 1.2]])
    assert result['min_value'] == 0.0
    assert [m['w'] for m in result['minima']] == [[-1.0, -1.0], [1.0, 1.0]]
    assert result['maximum']['w'] == [0.0, 0.0]
    assert result['nearest'][0]['index'] == [2, 2]
