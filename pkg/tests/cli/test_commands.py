import csv
import json
import os

import pytest

from cli.cli_config import EXIT_CHECK_FAILED, EXIT_CONVERGENCE, EXIT_FORMAT, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION
from cli.commands import check_graphs, dispatch
from graphs.errors import SolverConvergenceError
from graphs.library import loop_with_lead, unit_interval, unit_loop


def read_csv(path):
    with open(path, newline='') as f:
        return list(csv.reader(f))


@pytest.mark.parametrize('argv', [[], ['nope'], ['graph-spec'], ['check', '--checks', 'cn,poincare'],
                                  ['graph-spec', '--graph', 'g.json', '--emit', 'xml'],
                                  ['check', '--log-level', 'LOUD']])
def test_usage_errors(argv, tmp_path):
    assert dispatch(argv + ['--outdir', str(tmp_path)] if argv else argv) == EXIT_USAGE


def test_help():
    assert dispatch(['--help']) == EXIT_OK


def test_graph_spec_writes_table_and_manifest(graph_file, tmp_path):
    outdir = str(tmp_path / 'out')
    code = dispatch(['graph-spec', '--graph', graph_file(unit_loop()), '--lambda-max', '180',
                     '--outdir', outdir, '--emit', 'csv,json'])
    assert code == EXIT_OK
    rows = read_csv(os.path.join(outdir, 'spectrum.csv'))
    assert rows[0] == ['index', 'lambda', 'multiplicity']
    assert [(r[0], r[2]) for r in rows[1:]] == [('1', '1'), ('2', '2'), ('4', '2')]
    assert float(rows[2][1]) == pytest.approx(39.4784176044)
    mirror = json.loads(open(os.path.join(outdir, 'spectrum.json')).read())
    assert mirror[0] == {'index': 1, 'lambda': 0.0, 'multiplicity': 1}
    manifest = json.loads(open(os.path.join(outdir, 'manifest.json')).read())
    assert manifest['command'] == 'graph-spec'
    assert manifest['outputs'] == ['spectrum.csv', 'spectrum.json']
    assert manifest['parameters']['lambda_max'] == 180.0


def test_missing_and_malformed_files(tmp_path):
    assert dispatch(['graph-spec', '--graph', str(tmp_path / 'absent.json'), '--outdir', str(tmp_path)]) == EXIT_USAGE
    bad = tmp_path / 'bad.json'
    bad.write_text('{"vertices": [\n')
    assert dispatch(['graph-spec', '--graph', str(bad), '--outdir', str(tmp_path)]) == EXIT_FORMAT


def test_validation_failure(graph_file, tmp_path):
    path = graph_file(loop_with_lead())
    assert dispatch(['graph-spec', '--graph', path, '--outdir', str(tmp_path)]) == EXIT_VALIDATION
    assert dispatch(['fat-spec', '--graph', path, '--outdir', str(tmp_path)]) == EXIT_VALIDATION


def test_solver_failure_maps_to_its_exit_code(graph_file, tmp_path, monkeypatch):
    def fail(*args, **kwargs):
        raise SolverConvergenceError("no convergence")

    monkeypatch.setattr('cli.commands.eigenvalues', fail)
    path = graph_file(unit_loop())
    assert dispatch(['graph-spec', '--graph', path, '--outdir', str(tmp_path)]) == EXIT_CONVERGENCE


def test_fat_spec_with_mesh_dump(graph_file, tmp_path):
    outdir = str(tmp_path)
    code = dispatch(['fat-spec', '--graph', graph_file(unit_interval()), '--eps', '0.2', '--hmesh', '0.05',
                     '--lambda-max', '30', '--outdir', outdir, '--dump-mesh'])
    assert code == EXIT_OK
    rows = read_csv(os.path.join(outdir, 'fat_spectrum.csv'))
    assert rows[1][1] == '0'
    assert len(rows) >= 3
    manifest = json.loads(open(os.path.join(outdir, 'manifest.json')).read())
    assert 'mesh_eps0.2_nodes.csv' in manifest['outputs']
    assert manifest['parameters']['hmesh'] == 0.05


def test_graph_res(graph_file, tmp_path):
    code = dispatch(['graph-res', '--graph', graph_file(loop_with_lead()), '--window', '5,7,-1.5,0',
                     '--outdir', str(tmp_path)])
    assert code == EXIT_OK
    rows = read_csv(os.path.join(str(tmp_path), 'resonances.csv'))
    assert rows[0][:2] == ['re_k', 'im_k']
    im = sorted(float(r[1]) for r in rows[1:])
    assert im[0] == pytest.approx(-1.0986122887, abs=1e-6)
    assert im[-1] == pytest.approx(0.0, abs=1e-6)


def test_check_on_one_graph(graph_file, tmp_path):
    code = dispatch(['check', '--graph', graph_file(unit_loop(), 'loop.json'), '--samples', '6',
                     '--eps', '0.1', '--checks', 'cn,trace', '--outdir', str(tmp_path)])
    assert code == EXIT_OK
    rows = read_csv(os.path.join(str(tmp_path), 'checks.csv'))
    assert rows[0] == ['graph', 'eps', 'mode', 'samples', 'min_margin', 'violations']
    assert [(r[0], r[2], r[3], r[5]) for r in rows[1:]] == [('loop.json', 'cn', '6', '0'),
                                                           ('loop.json', 'trace', '6', '0')]


def test_check_reports_violations(graph_file, tmp_path, monkeypatch):
    monkeypatch.setattr('cli.commands._run_checks',
                        lambda graph, name, eps, modes, samples, seed: [(name, eps, 'cn', samples, -1.0, 2)])
    code = dispatch(['check', '--graph', graph_file(unit_loop()), '--outdir', str(tmp_path)])
    assert code == EXIT_CHECK_FAILED


def test_builtin_check_graphs():
    graphs = check_graphs()
    assert {'unit_loop', 'unit_interval', 'star3'} <= set(graphs)
    assert all(g.is_compact for g in graphs.values())


@pytest.mark.slow
def test_converge_single_eps(graph_file, tmp_path):
    code = dispatch(['converge', '--graph', graph_file(unit_loop()), '--eps', '0.1', '--kmax', '2',
                     '--no-defects', '--emit', 'csv,json', '--outdir', str(tmp_path)])
    assert code == EXIT_OK
    study = read_csv(os.path.join(str(tmp_path), 'study.csv'))
    assert study[0] == ['eps', 'k', 'lambda_0', 'lambda_eps', 'diff', 'slope']
    assert len(study) == 3 and study[1][-1] == 'nan'
    summary = json.loads(open(os.path.join(str(tmp_path), 'study.json')).read())
    assert any('table only' in flag for flag in summary['flags'])


def test_threads_belong_to_graph_spec(graph_file, tmp_path):
    path = graph_file(unit_loop())
    assert dispatch(['graph-spec', '--graph', path, '--lambda-max', '50', '--threads', '2', '--outdir', str(tmp_path)]) == EXIT_OK
    manifest = json.loads(open(os.path.join(str(tmp_path), 'manifest.json')).read())
    assert manifest['parameters']['threads'] == 2
    assert dispatch(['check', '--graph', path, '--threads', '2', '--outdir', str(tmp_path)]) == EXIT_USAGE
    assert dispatch(['fat-spec', '--graph', path, '--threads', '2', '--outdir', str(tmp_path)]) == EXIT_USAGE
