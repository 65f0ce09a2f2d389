import json
import math
import os

import numpy as np

from cli.emitters import TableWriter, atomic_write, dump_mesh_csv, format_field, render_csv, write_json
from cli.run_manifest import RunManifest, toolkit_version
from graphs.metric_graph import graph_hash


def test_format_field():
    assert format_field(math.pi) == '3.14159265359'
    assert format_field(np.float64(0.5)) == '0.5'
    assert format_field(True) == 'true'
    assert format_field(np.bool_(False)) == 'false'
    assert format_field(np.int64(7)) == '7'
    assert format_field(math.nan) == 'nan'
    assert format_field(-math.inf) == '-inf'
    assert format_field('a,b') == '"a,b"'
    assert format_field('say "hi"') == '"say ""hi"""'
    assert format_field('plain') == 'plain'


def test_render_csv():
    text = render_csv(('index', 'lambda', 'multiplicity'), [(1, 0.0, 1), (2, 39.5, 2)])
    assert text == 'index,lambda,multiplicity\n1,0,1\n2,39.5,2\n'


def test_atomic_write_leaves_no_temporaries(tmp_path):
    path = tmp_path / 'sub' / 'table.csv'
    atomic_write(str(path), 'a\n')
    atomic_write(str(path), 'b\n')
    assert path.read_text() == 'b\n'
    assert os.listdir(path.parent) == ['table.csv']


def test_write_json_nulls_non_finite(tmp_path):
    path = write_json(str(tmp_path / 'out.json'), {'slope': math.nan, 'values': np.array([1.0, math.inf]),
                                                  'k': np.int64(3), 'z': 1 + 2j})
    data = json.loads(open(path).read())
    assert data == {'slope': None, 'values': [1.0, None], 'k': 3, 'z': [1.0, 2.0]}


def test_table_writer_appends(tmp_path):
    path = str(tmp_path / 'study.csv')
    table = TableWriter(path, ('eps', 'k'))
    table.append([(0.2, 1)])
    assert open(path).read() == 'eps,k\n0.2,1\n'
    table.append(row for row in [(0.1, 1)])
    table.rows = [(0.1, 2)]
    table.flush()
    assert open(path).read() == 'eps,k\n0.1,2\n'


def test_dump_mesh(star_mesh, tmp_path):
    paths = dump_mesh_csv(star_mesh, str(tmp_path))
    assert [os.path.basename(p) for p in paths] == ['mesh_eps0.1_nodes.csv', 'mesh_eps0.1_triangles.csv',
                                                    'mesh_eps0.1_regions.csv']
    nodes = open(paths[0]).read().splitlines()
    assert nodes[0] == 'node,region,conforming,x,y'
    assert len(nodes) == star_mesh.n_broken + 1
    regions = open(dump_mesh_csv(star_mesh, str(tmp_path), 'star')[2]).read().splitlines()
    # three strips and four vertex regions
    assert len(regions) == 1 + 3 + 4


def test_run_manifest(loop, tmp_path):
    manifest = RunManifest.start('graph-spec', ['graph-spec', '--graph', 'g.json'], loop, lambda_max=100.0)
    manifest.seeds['inequality_inputs'] = 5
    manifest.add_output(str(tmp_path / 'spectrum.csv'), str(tmp_path))
    path = manifest.finish(str(tmp_path))
    assert os.path.basename(path) == 'manifest.json'
    data = json.loads(open(path).read())
    assert data['command'] == 'graph-spec'
    assert data['graph_hash'] == graph_hash(loop)
    assert data['parameters'] == {'lambda_max': 100.0}
    assert data['outputs'] == ['spectrum.csv']
    assert data['wall_clock'] >= 0.0
    assert RunManifest.start('check', []).graph_hash is None
    assert isinstance(toolkit_version(), str)
