"""
Epsilon-convergence study: fat-graph eigenvalues and defects against the graph.

For each eps the fat graph is meshed twice (h and h/2). Eigenvalue
differences are taken from the Richardson-extrapolated pair, so the fitted
slopes see the eps-dependence and not the mesh error. Stages are announced
through an EventManager so writers can append rows as soon as one eps is done.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from cli.event_manager import EventManager
from graphs.comparison import comparison_bounds
from graphs.eigensolver import smallest_eigenpairs
from graphs.errors import BoundNotApplicableError, SolverConvergenceError
from graphs.metric_graph import MetricGraph, require_valid
from graphs.secular import eigenvalues as graph_eigenvalues
from graphs.spectral_result import SpectralResult
from coupling.coupling_config import (H_RULE_DIVISOR, MIN_MODES, REFINEMENT_STABILITY, SLOPE_THRESHOLD,
                                      UPPER_BOUND_TOL, ZERO_DIFF, ZERO_LEVEL_TOL)
from coupling.defects import (DefectReport, hausdorff_distance, isolating_interval,
                              projection_and_eigenfunction_defect, quasi_unitarity_defect, sandwich_defect)
from manifold.fat_mesh import FatGraphMesh, build_mesh
from manifold.neumann import neumann_eigs

logger = logging.getLogger(__name__)


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Least-squares slope of log y against log x.

    Points with y below ZERO_DIFF are dropped; nan if fewer than two remain.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = np.isfinite(y) & (y > ZERO_DIFF)
    if np.count_nonzero(keep) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope)


def pairwise_rates(x: Sequence[float], y: Sequence[float]) -> List[float]:
    """ln(y_i / y_{i-1}) / ln(x_i / x_{i-1}) for consecutive levels; nan where undefined."""
    rates = []
    for i in range(1, len(x)):
        if y[i] > ZERO_DIFF and y[i - 1] > ZERO_DIFF:
            rates.append(math.log(y[i] / y[i - 1]) / math.log(x[i] / x[i - 1]))
        else:
            rates.append(math.nan)
    return rates


def default_h_rule(eps: float) -> float:
    return eps / H_RULE_DIVISOR


def graph_reference(graph: MetricGraph, k_max: int) -> np.ndarray:
    """First k_max graph eigenvalues (with multiplicity) from the secular solver."""
    limit = (2.0 * math.pi * k_max / graph.total_length) ** 2
    while True:
        values = graph_eigenvalues(graph, limit).values()
        if values.size >= k_max:
            return values[:k_max]
        limit *= 2.0


@dataclass
class EpsilonRecord:
    """Everything measured at one eps."""

    eps: float
    h: float
    coarse: np.ndarray
    fine: np.ndarray
    extrapolated: np.ndarray
    defects: DefectReport
    hausdorff: float = math.nan
    stable: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    flags: List[str] = field(default_factory=list)


@dataclass
class StudyResult:
    """
    Study table with fitted slopes.

    Attributes:
        graph: Graph of the study
        k_max: Number of eigenvalues followed
        reference: lambda_k(0), k = 1..k_max
        records: One EpsilonRecord per completed eps, in sweep order
        slopes: k -> log-log slope of |lambda_k(eps) - lambda_k(0)| (nan if undefined)
        defect_slopes: defect name -> log-log slope
        flags: Soft-assertion messages
    """

    graph: MetricGraph
    k_max: int
    reference: np.ndarray
    records: List[EpsilonRecord] = field(default_factory=list)
    slopes: Dict[int, float] = field(default_factory=dict)
    defect_slopes: Dict[str, float] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.records])

    def differences(self, k: int) -> np.ndarray:
        """|lambda_k(eps) - lambda_k(0)| over the sweep (k counts from 1)."""
        return np.array([abs(r.extrapolated[k - 1] - self.reference[k - 1]) for r in self.records])

    def rows(self):
        """(eps, k, lambda_k(0), lambda_k(eps), diff, slope) rows."""
        rows = []
        for record in self.records:
            for k in range(1, self.k_max + 1):
                value = record.extrapolated[k - 1]
                rows.append((record.eps, k, self.reference[k - 1], value,
                             abs(value - self.reference[k - 1]), self.slopes.get(k, math.nan)))
        return rows

    def defect_rows(self):
        """(eps, quasi, sandwich, projection, eigenfunction) rows."""
        return [r.defects.row() for r in self.records]


def _fem_levels(graph: MetricGraph, eps: float, h: float, k_max: int):
    meshes = [build_mesh(graph, eps, h, refine) for refine in (1, 2)]
    levels = []
    for mesh in meshes:
        A, M = mesh.assemble()
        values, _ = smallest_eigenpairs(A, M, k_max)
        if values.size < k_max:
            raise SolverConvergenceError(f"convergence_study: {values.size} of {k_max} eigenvalues at eps = {eps:g}")
        levels.append(np.maximum(values, 0.0))
    return meshes, levels[0], levels[1]


def _measure_defects(graph: MetricGraph, mesh: FatGraphMesh, interval, simple: bool, flags: List[str]) -> DefectReport:
    deltas = {
        'quasi_unitarity': quasi_unitarity_defect(graph, mesh, MIN_MODES),
        'sandwich': sandwich_defect(graph, mesh),
        'projection': math.nan,
        'eigenfunction': math.nan,
    }
    if interval is not None:
        try:
            proj, eigfun = projection_and_eigenfunction_defect(graph, mesh, interval, eigenfunction=simple)
            deltas['projection'], deltas['eigenfunction'] = proj, eigfun
        except ValueError as e:
            flags.append(str(e))
            logger.warning(f"ConvergenceStudy: {e}")
    return DefectReport(mesh.eps, deltas, modes=MIN_MODES)


def _relative_change(coarse: float, fine: float) -> float:
    if abs(fine) <= ZERO_DIFF:
        return 0.0 if abs(coarse) <= ZERO_DIFF else math.inf
    return abs(coarse - fine) / abs(fine)


def zero_levels(reference: np.ndarray) -> np.ndarray:
    """Mask of reference eigenvalues that are zero modes (no eps-rate to fit)."""
    reference = np.asarray(reference, dtype=float)
    if reference.size == 0:
        return np.zeros(0, dtype=bool)
    return reference <= ZERO_LEVEL_TOL * max(1.0, float(reference.max()))


def defect_interval(graph: MetricGraph, reference: np.ndarray):
    """
    Interval for the projection and eigenfunction defects and whether it holds a simple level.

    Takes the first nonzero simple graph eigenvalue below max(lambda_kmax, 1) * 1.5 + 10.
    Without one, the first nonzero distinct level is used and only the projection
    defect is defined.

    Returns:
        (interval, simple); (None, False) if the graph has no nonzero level in range
    """
    limit = max(float(reference[-1]), 1.0) * 1.5 + 10.0
    # Twice the range so the upper neighbour of the chosen level is known
    levels: SpectralResult = graph_eigenvalues(graph, 2.0 * limit)
    values = levels.eigenvalues
    for index in range(1, len(values)):
        value, multiplicity = values[index]
        if value > limit:
            break
        if multiplicity == 1:
            return isolating_interval(values, index), True
    if len(values) < 2:
        return None, False
    logger.info(f"ConvergenceStudy: no simple level below {limit:.4g}, eigenfunction defect skipped")
    return isolating_interval(values, 1), values[1][1] == 1


def convergence_study(graph: MetricGraph, eps_list: Sequence[float], k_max: int,
                      h_rule: Optional[Callable[[float], float]] = None,
                      events: Optional[EventManager] = None,
                      gate: bool = True,
                      defects: bool = True,
                      hausdorff_max: Optional[float] = None) -> StudyResult:
    """
    Sweep eps and compare fat-graph eigenvalues and defects with the graph.

    Args:
        graph: Compact admissible graph
        eps_list: Strictly decreasing strip widths (three or more for slopes)
        k_max: Number of eigenvalues followed
        h_rule: Mesh size as a function of eps (default eps / H_RULE_DIVISOR)
        events: EventManager receiving epsilon_started, epsilon_completed,
            study_completed and study_aborted
        gate: Check stability under h -> h/2 and flag unstable values
        defects: Measure the defect functionals
        hausdorff_max: Also record the Hausdorff distance of the spectra on [0, hausdorff_max]

    Returns:
        StudyResult; soft-assertion failures are in its flags

    Raises:
        ValueError: eps_list empty or not strictly decreasing, k_max < 1
        SolverConvergenceError: a solver failed; `partial` holds the completed records
    """
    require_valid(graph)
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("convergence_study: eps_list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("convergence_study: eps_list must be strictly decreasing")
    if k_max < 1:
        raise ValueError("convergence_study: k_max must be at least 1")
    h_rule = h_rule or default_h_rule
    events = events or EventManager()

    reference = graph_reference(graph, k_max)
    result = StudyResult(graph, k_max, reference)
    interval, simple = defect_interval(graph, reference) if defects else (None, False)
    spectrum_h = (hausdorff_max, graph_eigenvalues(graph, hausdorff_max)) if hausdorff_max is not None else None

    for eps in eps_list:
        h = h_rule(eps)
        events.trigger_event('epsilon_started', eps=eps, h=h)
        logger.info(f"ConvergenceStudy: eps = {eps:g}, h = {h:.4g}")
        try:
            record = _run_epsilon(graph, eps, h, k_max, reference, interval, simple, gate, defects, spectrum_h)
        except SolverConvergenceError as e:
            result.flags.append(f"aborted at eps = {eps:g}: {e}")
            events.trigger_event('study_aborted', result=result, error=e)
            raise SolverConvergenceError(f"convergence_study: aborted at eps = {eps:g}: {e}", partial=result) from e
        result.records.append(record)
        result.flags.extend(f"eps = {eps:g}: {flag}" for flag in record.flags)
        events.trigger_event('epsilon_completed', record=record, result=result)

    _fit_slopes(result)
    events.trigger_event('study_completed', result=result)
    return result


def _run_epsilon(graph, eps, h, k_max, reference, interval, simple, gate, defects, spectrum_h):
    meshes, coarse, fine = _fem_levels(graph, eps, h, k_max)
    extrapolated = (4.0 * fine - coarse) / 3.0
    flags: List[str] = []

    for k in range(k_max):
        if fine[k] > reference[k] + UPPER_BOUND_TOL:
            message = (f"lambda_{k + 1}(eps) = {fine[k]:.10g} exceeds lambda_{k + 1}(0) = {reference[k]:.10g}")
            flags.append(message)
            logger.warning(f"ConvergenceStudy: {message}")

    stable = np.ones(k_max, dtype=bool)
    if gate:
        zero = zero_levels(reference)
        for k in range(k_max):
            if zero[k]:
                continue
            change = _relative_change(abs(coarse[k] - reference[k]), abs(fine[k] - reference[k]))
            if abs(fine[k] - reference[k]) > ZERO_DIFF and change > REFINEMENT_STABILITY:
                stable[k] = False
                flags.append(f"lambda_{k + 1} difference changes by {change:.1%} under h -> h/2")

    if defects:
        report = _measure_defects(graph, meshes[1], interval, simple, flags)
        if gate:
            coarse_report = _measure_defects(graph, meshes[0], interval, simple, [])
            for name, value in report.deltas.items():
                change = _relative_change(coarse_report.deltas[name], value)
                if not math.isnan(value) and change > REFINEMENT_STABILITY:
                    flags.append(f"defect {name} changes by {change:.1%} under h -> h/2")
        _check_bracket(reference, extrapolated, report, flags)
    else:
        report = DefectReport(eps)

    distance = math.nan
    if spectrum_h is not None:
        limit, graph_spectrum = spectrum_h
        distance = hausdorff_distance(graph_spectrum, neumann_eigs(meshes[1], limit), limit)
    return EpsilonRecord(eps, h, coarse, fine, extrapolated, report, distance, stable, flags)


def _check_bracket(reference: np.ndarray, extrapolated: np.ndarray, report: DefectReport, flags: List[str]) -> None:
    """Soft check of the measured shifts against the comparison bracket."""
    delta = max(report.deltas['quasi_unitarity'], report.deltas['sandwich'])
    for k, (lam0, lam) in enumerate(zip(reference, extrapolated), start=1):
        try:
            lower, upper = comparison_bounds(lam0, delta, delta)
        except BoundNotApplicableError:
            continue
        shift = lam - lam0
        if not lower - UPPER_BOUND_TOL <= shift <= upper + UPPER_BOUND_TOL:
            message = f"lambda_{k} shift {shift:.3e} outside the bracket [{lower:.3e}, {upper:.3e}]"
            flags.append(message)
            logger.warning(f"ConvergenceStudy: {message}")


def _fit_slopes(result: StudyResult) -> None:
    eps = result.eps
    if eps.size < 3:
        result.flags.append(f"{eps.size} eps values: slopes undefined, table only")
        result.slopes = {k: math.nan for k in range(1, result.k_max + 1)}
        return
    zero = zero_levels(result.reference)
    for k in range(1, result.k_max + 1):
        # Zero modes stay at zero up to round-off
        slope = math.nan if zero[k - 1] else fit_loglog_slope(eps, result.differences(k))
        result.slopes[k] = slope
        _flag_slope(result, f"lambda_{k}", slope)
    for name in ('quasi_unitarity', 'sandwich', 'projection', 'eigenfunction'):
        values = [r.defects.deltas.get(name, math.nan) for r in result.records]
        slope = fit_loglog_slope(eps, values)
        result.defect_slopes[name] = slope
        _flag_slope(result, f"defect {name}", slope)
    logger.info("ConvergenceStudy: slopes " + ", ".join(f"k={k}: {s:.3f}" for k, s in result.slopes.items()))


def _flag_slope(result: StudyResult, name: str, slope: float) -> None:
    if not math.isnan(slope) and slope < SLOPE_THRESHOLD:
        message = f"{name} slope {slope:.3f} below {SLOPE_THRESHOLD}"
        result.flags.append(message)
        logger.warning(f"ConvergenceStudy: {message}")
