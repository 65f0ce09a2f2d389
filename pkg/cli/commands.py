"""
Command-line entry point: graph-spec, graph-res, fat-spec, converge, check.

Every subcommand writes its tables and a run manifest into --outdir.
Exceptions map to exit codes (see cli_config); tracebacks are logged at
DEBUG level only.
"""

import argparse
import cmath
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

from cli.cli_config import (CHECK_EPS, CHECK_GRAPH_SEEDS, DEFAULT_EPS, DEFAULT_KMAX, DEFAULT_LAMBDA_MAX,
                            DEFAULT_THETA, EXIT_CHECK_FAILED, EXIT_CONVERGENCE, EXIT_FORMAT, EXIT_OK, EXIT_USAGE,
                            EXIT_VALIDATION, LOG_FORMAT, LOG_LEVEL, OUTDIR)
from cli.emitters import TableWriter, dump_mesh_csv, write_csv, write_json
from cli.event_manager import EventManager
from cli.run_manifest import RunManifest
from coupling.coupling_config import CHECK_SAMPLES, CHECK_SEED, DEFAULT_EPS_LIST, H_RULE_DIVISOR
from coupling.inequalities import MODES, build_suite
from coupling.study import convergence_study, pairwise_rates
from graphs.errors import GraphFormatError, GraphValidationError, SolverConvergenceError
from graphs.graph_config import THREADS
from graphs.library import random_compact_graph, star, unit_interval, unit_loop
from graphs.metric_graph import MetricGraph, load_graph, require_valid
from graphs.resonance.contour import KWindow, find_resonances
from graphs.resonance.dilation import dilated_oracle_eigenvalue, essential_ray
from graphs.resonance.resonance_config import DEFAULT_STEP, DEFAULT_TRUNCATION
from graphs.secular import eigenvalues
from manifold.fat_mesh import build_mesh
from manifold.neumann import neumann_eigs
from manifold.vertex_template import build_vertex_template, template_constants

logger = logging.getLogger(__name__)

SPECTRUM_HEADER = ('index', 'lambda', 'multiplicity')
RESONANCE_HEADER = ('re_k', 'im_k', 're_lambda', 'im_lambda', 'multiplicity', 'residual', 'method')
STUDY_HEADER = ('eps', 'k', 'lambda_0', 'lambda_eps', 'diff', 'slope')
DEFECT_HEADER = ('eps', 'delta_quasi', 'delta_sandwich', 'delta_proj', 'delta_eigfun')
CHECK_HEADER = ('graph', 'eps', 'mode', 'samples', 'min_margin', 'violations')


class UsageError(Exception):
    """Malformed command line."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting with status 2 (reserved for validation)."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _modes(text: str) -> List[str]:
    modes = [m.strip() for m in text.split(',') if m.strip()]
    unknown = [m for m in modes if m not in MODES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown check mode(s) {', '.join(unknown)}")
    return modes


def _emit(text: str) -> List[str]:
    formats = [f.strip() for f in text.split(',') if f.strip()]
    if not formats or any(f not in ('csv', 'json') for f in formats):
        raise argparse.ArgumentTypeError(f"--emit takes csv, json or csv,json, got {text!r}")
    return formats


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(' ', ''))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a complex number like 0.5j, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--seed', type=int, default=CHECK_SEED, help="Seed of random inputs")
    common.add_argument('--outdir', default=OUTDIR, help="Output directory")
    common.add_argument('--log-level', default=LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")

    parser = _Parser(prog='fatgraph', description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    p = sub.add_parser('graph-spec', parents=[common], help="Eigenvalues of a compact graph")
    p.add_argument('--graph', required=True, help="Graph description (JSON)")
    p.add_argument('--threads', type=int, default=THREADS, help="Worker threads for the k-scan")
    p.add_argument('--lambda-max', type=float, default=DEFAULT_LAMBDA_MAX)
    p.add_argument('--emit', type=_emit, default=['csv'])

    p = sub.add_parser('graph-res', parents=[common], help="Resonances of a graph with leads")
    p.add_argument('--graph', required=True)
    p.add_argument('--window', type=KWindow.parse, required=True, help="re_min,re_max,im_min,im_max in k")
    p.add_argument('--theta', type=_complex, default=complex(DEFAULT_THETA), help="Dilation parameter")
    p.add_argument('--oracle', action='store_true', help="Cross-check with the complex-scaled FD oracle")
    p.add_argument('--emit', type=_emit, default=['csv'])

    p = sub.add_parser('fat-spec', parents=[common], help="Neumann eigenvalues of a fat graph")
    p.add_argument('--graph', required=True)
    p.add_argument('--eps', type=float, default=DEFAULT_EPS)
    p.add_argument('--hmesh', type=float, default=None, help=f"Mesh size (default eps/{H_RULE_DIVISOR})")
    p.add_argument('--lambda-max', type=float, default=DEFAULT_LAMBDA_MAX)
    p.add_argument('--emit', type=_emit, default=['csv'])
    p.add_argument('--dump-mesh', action='store_true', help="Write node/triangle/region CSV tables")

    p = sub.add_parser('converge', parents=[common], help="Epsilon-convergence study")
    p.add_argument('--graph', required=True)
    p.add_argument('--eps', type=_float_list, default=list(DEFAULT_EPS_LIST))
    p.add_argument('--kmax', type=int, default=DEFAULT_KMAX)
    p.add_argument('--checks', type=_modes, default=[], help="Inequality checks to run per eps (cn,vx,trace)")
    p.add_argument('--hausdorff', type=float, default=None, help="Record the Hausdorff distance on [0, value]")
    p.add_argument('--no-defects', dest='defects', action='store_false')
    p.add_argument('--emit', type=_emit, default=['csv'])

    p = sub.add_parser('check', parents=[common], help="Inequality suite on random inputs")
    p.add_argument('--graph', default=None, help="Graph to check (default: built-in set)")
    p.add_argument('--eps', type=float, default=CHECK_EPS)
    p.add_argument('--samples', type=int, default=CHECK_SAMPLES)
    p.add_argument('--checks', type=_modes, default=list(MODES))
    return parser


def configure_logging(level: str) -> None:
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise UsageError(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)


def _load(path: str) -> MetricGraph:
    graph = load_graph(path)
    require_valid(graph)
    return graph


def _emit_table(args, manifest: RunManifest, name: str, header: Sequence[str], rows) -> None:
    if 'csv' in args.emit:
        manifest.add_output(write_csv(os.path.join(args.outdir, f"{name}.csv"), header, rows), args.outdir)
    if 'json' in args.emit:
        data = [dict(zip(header, row)) for row in rows]
        manifest.add_output(write_json(os.path.join(args.outdir, f"{name}.json"), data), args.outdir)


def cmd_graph_spec(args, argv) -> int:
    graph = _load(args.graph)
    manifest = RunManifest.start('graph-spec', argv, graph, lambda_max=args.lambda_max, threads=args.threads)
    result = eigenvalues(graph, args.lambda_max, threads=args.threads)
    manifest.flags.extend(result.flags)
    _emit_table(args, manifest, 'spectrum', SPECTRUM_HEADER, result.rows())
    manifest.finish(args.outdir)
    logger.info(f"GraphSpec: {result.count()} eigenvalues <= {args.lambda_max:g}")
    return EXIT_OK


def cmd_graph_res(args, argv) -> int:
    graph = _load(args.graph)
    manifest = RunManifest.start('graph-res', argv, graph, window=list(vars(args.window).values()),
                                 theta=[args.theta.real, args.theta.imag], oracle=args.oracle)
    resonances = find_resonances(graph, args.window, theta_used=args.theta)
    rows = []
    for r in resonances:
        rows.append((r.k.real, r.k.imag, r.lam.real, r.lam.imag, r.multiplicity, r.residual, r.method))
        if not args.oracle:
            continue
        ray = essential_ray(args.theta, abs(r.lam))
        if r.kind != 'embedded' and not ray.reveals(r.lam):
            message = f"resonance {r.lam:.6g} hidden by the rotated continuum at theta = {args.theta}"
            manifest.flags.append(message)
            logger.warning(f"GraphRes: {message}")
            continue
        lam = dilated_oracle_eigenvalue(graph, args.theta, r.lam, DEFAULT_TRUNCATION, DEFAULT_STEP)
        k = cmath.sqrt(lam)
        rows.append((k.real, k.imag, lam.real, lam.imag, r.multiplicity, abs(lam - r.lam), 'dilated-fd'))
    manifest.parameters.update(truncation=DEFAULT_TRUNCATION, oracle_step=DEFAULT_STEP)
    _emit_table(args, manifest, 'resonances', RESONANCE_HEADER, rows)
    manifest.finish(args.outdir)
    logger.info(f"GraphRes: {len(resonances)} roots in {args.window}")
    return EXIT_OK


def cmd_fat_spec(args, argv) -> int:
    graph = _load(args.graph)
    h = args.hmesh if args.hmesh is not None else args.eps / H_RULE_DIVISOR
    manifest = RunManifest.start('fat-spec', argv, graph, eps=args.eps, hmesh=h, lambda_max=args.lambda_max)
    mesh = build_mesh(graph, args.eps, h)
    result = neumann_eigs(mesh, args.lambda_max)
    manifest.flags.extend(result.flags)
    manifest.parameters.update(nodes=mesh.n_nodes, triangles=len(mesh.triangles))
    manifest.tolerances['max_residual'] = float(result.residuals.max()) if result.residuals.size else 0.0
    manifest.tolerances['template_constants'] = {str(v): c for v, c in mesh.template_constants().items()}
    _emit_table(args, manifest, 'fat_spectrum', SPECTRUM_HEADER, result.rows())
    if args.dump_mesh:
        for path in dump_mesh_csv(mesh, args.outdir):
            manifest.add_output(path, args.outdir)
    manifest.finish(args.outdir)
    logger.info(f"FatSpec: {result.count()} eigenvalues <= {args.lambda_max:g} at eps = {args.eps:g}")
    return EXIT_OK


def _graph_template_constants(graph: MetricGraph) -> Dict[str, tuple]:
    return {str(v): template_constants(build_vertex_template(graph.degree(v), graph.l0))
            for v in graph.vertices}


def _run_checks(graph: MetricGraph, name: str, eps: float, modes, samples: int, seed: int) -> List[tuple]:
    mesh = build_mesh(graph, eps, eps / H_RULE_DIVISOR)
    report = build_suite(mesh, modes).run(samples, seed)
    return [(name, eps) + row for row in report.rows()]


def cmd_converge(args, argv) -> int:
    graph = _load(args.graph)
    manifest = RunManifest.start('converge', argv, graph, eps=args.eps, kmax=args.kmax,
                                 h_rule=f"eps/{H_RULE_DIVISOR}", checks=args.checks, hausdorff=args.hausdorff)
    manifest.seeds['inequality_inputs'] = args.seed
    manifest.tolerances['template_constants'] = _graph_template_constants(graph)

    events = EventManager()
    study_table = TableWriter(os.path.join(args.outdir, 'study.csv'), STUDY_HEADER)
    defect_table = TableWriter(os.path.join(args.outdir, 'defects.csv'), DEFECT_HEADER)
    check_rows: List[tuple] = []

    def on_epsilon(record, result):
        study_table.append(row for row in result.rows() if row[0] == record.eps)
        defect_table.append([record.defects.row()])
        if args.checks:
            check_rows.extend(_run_checks(graph, os.path.basename(args.graph), record.eps, args.checks,
                                          CHECK_SAMPLES, args.seed))

    def on_completed(result):
        study_table.rows = result.rows()
        study_table.flush()

    events.register_hook('epsilon_completed', on_epsilon, priority=10)
    events.register_hook('study_completed', on_completed, priority=10)

    try:
        result = convergence_study(graph, args.eps, args.kmax, events=events, defects=args.defects,
                                   hausdorff_max=args.hausdorff)
    except SolverConvergenceError as e:
        if e.partial is not None:
            manifest.flags.extend(e.partial.flags)
        manifest.outputs.extend(['study.csv', 'defects.csv'])
        manifest.finish(args.outdir)
        raise

    manifest.outputs.extend(['study.csv', 'defects.csv'])
    manifest.flags.extend(result.flags)
    rates = {k: pairwise_rates(result.eps, result.differences(k)) for k in result.slopes}
    summary = {
        'reference': result.reference,
        'slopes': result.slopes,
        'pairwise_rates': rates,
        'defect_slopes': result.defect_slopes,
        'hausdorff': {r.eps: r.hausdorff for r in result.records},
        'flags': result.flags,
    }
    if 'json' in args.emit:
        manifest.add_output(write_json(os.path.join(args.outdir, 'study.json'), summary), args.outdir)
    if check_rows:
        manifest.add_output(write_csv(os.path.join(args.outdir, 'checks.csv'), CHECK_HEADER, check_rows), args.outdir)
    manifest.finish(args.outdir)
    violations = sum(row[-1] for row in check_rows)
    for k, slope in result.slopes.items():
        logger.info(f"Converge: k = {k} slope {slope:.3f}")
    return EXIT_CHECK_FAILED if violations else EXIT_OK


def check_graphs() -> Dict[str, MetricGraph]:
    """Built-in graphs of the check subcommand."""
    graphs = {'unit_loop': unit_loop(), 'unit_interval': unit_interval(), 'star3': star(3)}
    for seed in CHECK_GRAPH_SEEDS:
        graphs[f'random{seed}'] = random_compact_graph(seed)
    return graphs


def cmd_check(args, argv) -> int:
    if args.graph is not None:
        graphs = {os.path.basename(args.graph): _load(args.graph)}
    else:
        graphs = check_graphs()
    manifest = RunManifest.start('check', argv, None, eps=args.eps, samples=args.samples,
                                 checks=args.checks, graphs=sorted(graphs))
    manifest.seeds['inequality_inputs'] = args.seed
    rows = []
    for name, graph in graphs.items():
        rows.extend(_run_checks(graph, name, args.eps, args.checks, args.samples, args.seed))
    manifest.add_output(write_csv(os.path.join(args.outdir, 'checks.csv'), CHECK_HEADER, rows), args.outdir)
    manifest.finish(args.outdir)
    violations = sum(row[-1] for row in rows)
    logger.info(f"Check: {len(rows)} (graph, mode) pairs, {violations} violations")
    return EXIT_CHECK_FAILED if violations else EXIT_OK


COMMANDS: Dict[str, Callable] = {
    'graph-spec': cmd_graph_spec,
    'graph-res': cmd_graph_res,
    'fat-spec': cmd_fat_spec,
    'converge': cmd_converge,
    'check': cmd_check,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run one subcommand and return its exit code.

    Returns:
        0 success, 1 inequality violations, 2 validation failure,
        3 solver non-convergence, 64 usage error, 65 malformed graph file
    """
    argv = list(argv or [])
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("fatgraph: missing subcommand (graph-spec, graph-res, fat-spec, converge, check)")
        configure_logging(args.log_level)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    try:
        return COMMANDS[args.command](args, argv)
    except GraphFormatError as e:
        logger.error(f"Dispatch: malformed graph file: {e}")
        return EXIT_FORMAT
    except GraphValidationError as e:
        logger.error(f"Dispatch: {e}")
        return EXIT_VALIDATION
    except SolverConvergenceError as e:
        logger.error(f"Dispatch: {e}")
        return EXIT_CONVERGENCE
    except (ValueError, OSError) as e:
        logger.debug("Dispatch: traceback", exc_info=True)
        logger.error(f"Dispatch: {e}")
        return EXIT_USAGE
