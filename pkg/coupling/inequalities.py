"""
Spot checks of the estimates that drive the fat-graph convergence proof.

- cn: eps |C_v u - N_e u(v)|^2 <= (8/l0)(1 + 1/lambda2) eps ||du||^2_{eps,v}
- vx: ||u||^2_{eps,v} <= c_vx eps (||du||^2_{eps,v} + ||u||^2_{eps,e} + ||du||^2_{eps,e})
- trace: |f(0)|^2 <= (8/l0) int_0^{l0/2} (|f|^2 + |f'|^2)

Each estimate is a check strategy registered with an InequalitySuite; the
suite generates seeded random inputs and broadcasts them through the
`sample_generated` event.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from cli.event_manager import EventManager
from coupling.coupling_config import CHECK_SAMPLES, CHECK_SEED, MARGIN_TOL, TRACE_GRID
from coupling.identification import column_averages, vertex_average
from manifold.fat_mesh import TAIL, FatGraphMesh, vertex_ends

logger = logging.getLogger(__name__)

MODES = ('cn', 'vx', 'trace')


@dataclass
class MarginReport:
    """
    Both sides of one estimate for one input, term by term.

    A term violates the estimate when rhs - lhs < -MARGIN_TOL * max(1, rhs).
    """

    mode: str
    lhs: np.ndarray
    rhs: np.ndarray
    labels: List[str] = field(default_factory=list)

    @property
    def margins(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else math.inf

    @property
    def violations(self) -> List[str]:
        bad = self.margins < -MARGIN_TOL * np.maximum(1.0, self.rhs)
        return [label for label, flag in zip(self.labels, bad) if flag]

    @property
    def ok(self) -> bool:
        return not self.violations


def c_vx(vol: float, lambda2: float, l0: float) -> float:
    """Constant of the vertex-concentration estimate for a template of volume vol."""
    cn = 8.0 / l0 * (1.0 + 1.0 / lambda2)
    return 3.0 * max(1.0 / lambda2 + vol * cn, 8.0 * vol / l0)


def _block(matrix, nodes: np.ndarray):
    return matrix[nodes][:, nodes]


def _quadratic(matrix, u: np.ndarray) -> float:
    return float(u @ (matrix @ u))


def _cn_report(u: np.ndarray, mesh: FatGraphMesh) -> MarginReport:
    A_b, _ = mesh.broken_matrices()
    l0 = mesh.graph.l0
    constants = mesh.template_constants()
    lhs, rhs, labels = [], [], []
    for v, region in mesh.vertex_regions.items():
        _, lambda2 = constants[v]
        energy = _quadratic(_block(A_b, region.indices()), u[region.indices()])
        center = vertex_average(u, mesh, v)
        bound = 8.0 / l0 * (1.0 + 1.0 / lambda2) * mesh.eps * energy
        for eid, side in vertex_ends(mesh.graph, v):
            means = column_averages(u, mesh, eid)
            end_mean = means[0] if side == TAIL else means[-1]
            lhs.append(mesh.eps * (center - end_mean) ** 2)
            rhs.append(bound)
            labels.append(f"{v}:{eid}:{side}")
    return MarginReport('cn', np.array(lhs), np.array(rhs), labels)


def _vx_report(u: np.ndarray, mesh: FatGraphMesh) -> MarginReport:
    A_b, M_b = mesh.broken_matrices()
    l0 = mesh.graph.l0
    constants = mesh.template_constants()
    lhs, rhs, labels = [], [], []
    for v, region in mesh.vertex_regions.items():
        vol, lambda2 = constants[v]
        nodes = region.indices()
        mass_v = _quadratic(_block(M_b, nodes), u[nodes])
        energy_v = _quadratic(_block(A_b, nodes), u[nodes])
        for eid, side in vertex_ends(mesh.graph, v):
            strip = mesh.strips[eid].indices()
            mass_e = _quadratic(_block(M_b, strip), u[strip])
            energy_e = _quadratic(_block(A_b, strip), u[strip])
            lhs.append(mass_v)
            rhs.append(c_vx(vol, lambda2, l0) * mesh.eps * (energy_v + mass_e + energy_e))
            labels.append(f"{v}:{eid}:{side}")
    return MarginReport('vx', np.array(lhs), np.array(rhs), labels)


def trace_sides(samples: np.ndarray, l0: float):
    """(|f(0)|^2, (8/l0) int (f^2 + f'^2)) for P1 samples on a uniform grid of [0, l0/2]."""
    f = np.asarray(samples, dtype=float)
    h = 0.5 * l0 / (f.size - 1)
    left, right = f[:-1], f[1:]
    mass = h / 3.0 * np.sum(left ** 2 + left * right + right ** 2)
    energy = np.sum((right - left) ** 2) / h
    return f[0] ** 2, 8.0 / l0 * (mass + energy)


def inequality_checks(u: np.ndarray, mesh: FatGraphMesh, mode: str) -> MarginReport:
    """
    Evaluate one estimate on one input.

    Args:
        u: Manifold vector (conforming or broken); for mode 'trace', P1
            samples of a function on a uniform grid of [0, l0/2]
        mesh: Fat graph mesh (its graph supplies l0, its templates lambda2 and vol)
        mode: 'cn', 'vx' or 'trace'

    Returns:
        MarginReport with one term per (vertex, edge end), or one term for 'trace'
    """
    if mode == 'trace':
        lhs, rhs = trace_sides(u, mesh.graph.l0)
        return MarginReport('trace', np.array([lhs]), np.array([rhs]), ['trace'])
    if mode not in MODES:
        raise ValueError(f"inequality_checks: unknown mode {mode!r} (expected one of {', '.join(MODES)})")
    u = np.real(mesh.as_broken(np.asarray(u)))
    if mode == 'cn':
        return _cn_report(u, mesh)
    return _vx_report(u, mesh)


@dataclass
class InequalitySample:
    """One random input, shared by all checks through the `sample_generated` event."""

    index: int
    u: np.ndarray
    trace: np.ndarray
    kind: str


class BaseInequalityCheck(ABC):
    """
    Abstract base class for estimate checks.

    A check listens for generated samples, evaluates its estimate and keeps a
    running record of margins. It manages its own lifecycle through the
    `setup` and `cleanup` events.
    """

    mode: str = ''

    def __init__(self, event_manager: EventManager, mesh: FatGraphMesh):
        """
        Initialize the check.

        Args:
            event_manager: Event manager for registering hooks
            mesh: Mesh the samples live on
        """
        self.event_manager = event_manager
        self.mesh = mesh
        self.current_results: List[MarginReport] = []
        self.is_active = False
        self.register_hooks()

    def register_hooks(self) -> None:
        """Register for the suite lifecycle; subclasses may add events."""
        self.event_manager.register_hook('setup', self.setup, priority=10)
        self.event_manager.register_hook('sample_generated', self.handle_sample, priority=10)
        self.event_manager.register_hook('cleanup', self.cleanup, priority=0)

    @abstractmethod
    def evaluate(self, sample: InequalitySample) -> MarginReport:
        """Both sides of the estimate for one sample."""

    def handle_sample(self, sample: InequalitySample) -> Optional[MarginReport]:
        if not self.is_active:
            return None
        report = self.evaluate(sample)
        self.update_results(report)
        if not report.ok:
            logger.warning(f"{self.get_check_name()}: sample {sample.index} ({sample.kind}) violates the estimate "
                           f"at {', '.join(report.violations)}")
        return report

    def get_current_results(self) -> List[MarginReport]:
        return self.current_results

    def update_results(self, report: MarginReport) -> None:
        self.current_results.append(report)

    def activate(self) -> None:
        self.is_active = True

    def deactivate(self) -> None:
        self.is_active = False

    def is_check_active(self) -> bool:
        return self.is_active

    def setup(self) -> None:
        self.current_results = []
        self.activate()

    def cleanup(self) -> None:
        self.deactivate()

    def min_margin(self) -> float:
        return min((r.min_margin for r in self.current_results), default=math.inf)

    def violation_count(self) -> int:
        return sum(len(r.violations) for r in self.current_results)

    def get_check_name(self) -> str:
        return self.__class__.__name__

    def get_check_info(self) -> Dict[str, Any]:
        """
        Summary of this check's current state.

        Returns:
            Dictionary with name, mode, activity, sample count and minimum margin
        """
        return {
            'name': self.get_check_name(),
            'mode': self.mode,
            'active': self.is_active,
            'samples': len(self.current_results),
            'min_margin': self.min_margin(),
            'violations': self.violation_count(),
        }


class CnCheck(BaseInequalityCheck):
    """Vertex mean against the transverse mean at each edge end."""

    mode = 'cn'

    def evaluate(self, sample: InequalitySample) -> MarginReport:
        return _cn_report(sample.u, self.mesh)


class VxCheck(BaseInequalityCheck):
    """Mass on a vertex region against energy near it and mass on an adjacent strip."""

    mode = 'vx'

    def evaluate(self, sample: InequalitySample) -> MarginReport:
        return _vx_report(sample.u, self.mesh)


class TraceCheck(BaseInequalityCheck):
    """One-dimensional trace estimate on [0, l0/2]."""

    mode = 'trace'

    def evaluate(self, sample: InequalitySample) -> MarginReport:
        return inequality_checks(sample.trace, self.mesh, 'trace')


CHECKS = {check.mode: check for check in (CnCheck, VxCheck, TraceCheck)}


@dataclass
class SuiteReport:
    """Outcome of one suite run: per-mode minimum margin and violation count."""

    samples: int
    seed: int
    min_margins: Dict[str, float]
    violations: Dict[str, int]

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def rows(self):
        return [(mode, self.samples, self.min_margins[mode], self.violations[mode]) for mode in self.min_margins]


class InequalitySuite:
    """
    Runs registered checks over seeded random inputs.

    Even-numbered manifold samples are nodal noise; odd-numbered samples are
    noise smoothed by one application of (A + M)^{-1} M, which gives inputs
    with small energy relative to their mass. Trace samples are random P1
    functions on a TRACE_GRID-cell grid.
    """

    def __init__(self, event_manager: EventManager, mesh: FatGraphMesh):
        self.event_manager = event_manager
        self.mesh = mesh
        self.checks: List[BaseInequalityCheck] = []

    def add_check(self, check: BaseInequalityCheck) -> None:
        self.checks.append(check)

    def remove_check(self, check: BaseInequalityCheck) -> bool:
        """
        Remove a check and its hooks.

        Returns:
            True if the check was registered, False otherwise
        """
        if check not in self.checks:
            return False
        self.checks.remove(check)
        self.event_manager.unregister_hook('setup', check.setup)
        self.event_manager.unregister_hook('sample_generated', check.handle_sample)
        self.event_manager.unregister_hook('cleanup', check.cleanup)
        return True

    def get_check_by_name(self, name: str) -> Optional[BaseInequalityCheck]:
        for check in self.checks:
            if check.get_check_name() == name or check.mode == name:
                return check
        return None

    def get_active_checks(self) -> List[BaseInequalityCheck]:
        return [check for check in self.checks if check.is_check_active()]

    def get_check_count(self) -> int:
        return len(self.checks)

    def _samples(self, n_samples: int, seed: int):
        rng = np.random.default_rng(seed)
        A, M = self.mesh.assemble()
        smoother = splu(sparse.csc_matrix(A + M))
        for index in range(n_samples):
            noise = rng.standard_normal(A.shape[0])
            if index % 2:
                u, kind = smoother.solve(M @ noise), 'smoothed'
            else:
                u, kind = noise, 'nodal'
            trace = rng.standard_normal(TRACE_GRID + 1)
            yield InequalitySample(index, self.mesh.as_broken(u), trace, kind)

    def run(self, n_samples: int = CHECK_SAMPLES, seed: int = CHECK_SEED) -> SuiteReport:
        """
        Broadcast n_samples seeded inputs to every registered check.

        Returns:
            SuiteReport with the minimum margin and violation count per mode
        """
        self.event_manager.trigger_event('setup')
        for sample in self._samples(n_samples, seed):
            self.event_manager.trigger_event('sample_generated', sample)

        margins, violations = {}, {}
        for check in self.checks:
            margins[check.mode] = check.min_margin()
            violations[check.mode] = check.violation_count()
            missing = n_samples - len(check.get_current_results())
            if missing:
                # A check that raised never recorded its samples; count them as failures
                logger.error(f"InequalitySuite: {check.get_check_name()} evaluated "
                             f"{n_samples - missing} of {n_samples} samples")
                violations[check.mode] += missing
        self.event_manager.trigger_event('cleanup')
        report = SuiteReport(n_samples, seed, margins, violations)
        logger.info(f"InequalitySuite: {n_samples} samples, seed {seed}, "
                    + ", ".join(f"{m} min margin {margins[m]:.3e}" for m in margins))
        return report

    def get_suite_status(self) -> Dict[str, Any]:
        return {
            'total_checks': len(self.checks),
            'active_checks': len(self.get_active_checks()),
            'checks': [check.get_check_info() for check in self.checks],
        }


def build_suite(mesh: FatGraphMesh, modes=MODES, event_manager: Optional[EventManager] = None) -> InequalitySuite:
    """Suite with one check per requested mode."""
    event_manager = event_manager or EventManager()
    suite = InequalitySuite(event_manager, mesh)
    for mode in modes:
        if mode not in CHECKS:
            raise ValueError(f"build_suite: unknown mode {mode!r}")
        suite.add_check(CHECKS[mode](event_manager, mesh))
    return suite
