"""
Exterior complex scaling oracle for resonances.

The interior graph (vertices, internal edges, unit segments of the leads) is
discretized as usual. Each exterior ray carries g = exp(-theta/2) u_ext,
which is continuous with the interior at the cut point; the scaled form has
stiffness exp(-theta) int g'phi' and mass exp(theta) int g phi, so the
derivative jump u'_ext = exp(3 theta/2) u'_int holds naturally. The rays are
truncated at lead coordinate L with a Dirichlet condition.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, splu

from graphs.discretization import assemble_graph_p1, grid_cells
from graphs.errors import SolverConvergenceError
from graphs.metric_graph import MetricGraph
from graphs.partition import CUT_DISTANCE, GraphPartition, split_external
from graphs.resonance.contour import Resonance
from graphs.resonance.resonance_config import (EIGS_COUNT, EIGS_TOL, MIN_TRUNCATION, ORACLE_LEVELS,
                                               STEP_FRACTION, THETA_LEVELS)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DilationParams:
    """Dilation parameter theta in the strip |Im theta| < vartheta/2."""

    theta: complex
    vartheta: float

    def __post_init__(self):
        if not 0 <= self.vartheta < math.pi:
            raise ValueError(f"DilationParams: sector half-width {self.vartheta} outside [0, pi)")
        if not abs(complex(self.theta).imag) < self.vartheta / 2:
            raise ValueError(f"DilationParams: |Im theta| must be < vartheta/2 = {self.vartheta / 2}")

    def in_sector(self, z: complex) -> bool:
        """z in the sector |arg z| <= vartheta (z = 0 included)."""
        return z == 0 or abs(np.angle(z)) <= self.vartheta


@dataclass(frozen=True)
class EssentialRay:
    """Segment of exp(-2 theta)[0, inf) with |lambda| <= lambda_max."""

    angle: float
    segment: tuple

    def points(self, n: int = 50) -> np.ndarray:
        return np.linspace(*self.segment, n) * np.exp(1j * self.angle)

    def reveals(self, lam: complex) -> bool:
        """True if lam lies strictly above the rotated continuum."""
        return np.angle(lam) > self.angle

    def distance(self, lam: complex) -> float:
        """Distance from lam to the whole ray."""
        along = (lam * np.exp(-1j * self.angle))
        if along.real <= 0:
            return abs(lam)
        return abs(along.imag)


def essential_ray(theta: complex, lambda_max: float, params: Optional[DilationParams] = None) -> EssentialRay:
    """
    Rotated essential spectrum exp(-2 theta)[0, lambda_max].

    Args:
        theta: Dilation parameter; the real part does not affect the angle
        lambda_max: Length of the segment
        params: Optional sector data whose strip theta must lie in
    """
    if params is not None:
        DilationParams(theta, params.vartheta)
    return EssentialRay(-2.0 * complex(theta).imag, (0.0, float(lambda_max)))


@dataclass
class DilatedPencil:
    """Sparse non-Hermitian pencil (A, M) of the truncated complex-scaled operator."""

    A: sparse.csc_matrix
    M: sparse.csc_matrix
    theta: complex
    l_trunc: float
    h: float
    refine: int
    partition: GraphPartition
    n_interior: int
    flags: List[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.A.shape[0]


def _check_dilation(graph: MetricGraph, theta: complex, l_trunc: float, h: float) -> None:
    if not complex(theta).imag > 0:
        raise ValueError("dilated_fd_matrix: Im theta must be positive to rotate the continuum")
    if l_trunc < MIN_TRUNCATION:
        raise ValueError(f"dilated_fd_matrix: truncation L = {l_trunc} below {MIN_TRUNCATION}")
    if not 0 < h <= STEP_FRACTION * graph.l0 * (1 + 1e-12):
        raise ValueError(f"dilated_fd_matrix: step h = {h} must satisfy h <= l0/8 = {graph.l0 / 8}")


def dilated_fd_matrix(graph: MetricGraph, theta: complex, l_trunc: float, h: float,
                      refine: int = 1) -> DilatedPencil:
    """
    Assemble the truncated complex-scaled pencil.

    Args:
        graph: Admissible graph with leads
        theta: Dilation parameter, Im theta > 0
        l_trunc: Lead coordinate of the Dirichlet cap, at least 10
        h: Grid step, at most l0/8
        refine: Cell-count multiplier for nested grids

    Returns:
        DilatedPencil; eigenvalues solve A x = lambda M x
    """
    _check_dilation(graph, theta, l_trunc, h)
    partition = split_external(graph)
    interior = partition.interior
    A_int, M_int, dofmap = assemble_graph_p1(interior, grid_cells(interior, h, refine))
    n_int = dofmap.n_dofs
    index = interior.vertex_index()

    scale = complex(np.exp(theta))
    exterior_length = l_trunc - CUT_DISTANCE
    cells = max(1, math.ceil(exterior_length / h - 1e-9)) * refine
    step = exterior_length / cells

    rows, cols, stiff, mass = [], [], [], []
    offset = n_int
    for cut in partition.cut_points:
        # Ray nodes t_0 (cut point, shared) .. t_{cells-1}; t_cells carries the Dirichlet cap
        dofs = np.concatenate(([index[cut.label]], offset + np.arange(cells - 1)))
        offset += cells - 1
        left, right = dofs[:-1], dofs[1:]
        ones = np.ones(left.size)
        rows.append(np.column_stack((left, right, left, right)).reshape(-1))
        cols.append(np.column_stack((right, left, left, right)).reshape(-1))
        stiff.append(np.column_stack((-ones, -ones, ones, ones)).reshape(-1) / (scale * step))
        mass.append(np.column_stack((ones, ones, 2 * ones, 2 * ones)).reshape(-1) * scale * step / 6.0)
        # Last cell touches the capped node: only the diagonal entry survives
        last = dofs[-1]
        rows.append(np.array([last]))
        cols.append(np.array([last]))
        stiff.append(np.array([1.0 / (scale * step)]))
        mass.append(np.array([2.0 * scale * step / 6.0]))

    shape = (offset, offset)
    i, j = np.concatenate(rows), np.concatenate(cols)
    A_ext = sparse.csc_matrix((np.concatenate(stiff), (i, j)), shape=shape)
    M_ext = sparse.csc_matrix((np.concatenate(mass), (i, j)), shape=shape)
    A = _embed(A_int, offset).astype(complex) + A_ext
    M = _embed(M_int, offset).astype(complex) + M_ext
    logger.debug(f"DilatedOperator: {offset} dofs (theta = {theta}, L = {l_trunc}, h = {h / refine:g})")
    return DilatedPencil(A.tocsc(), M.tocsc(), complex(theta), l_trunc, h, refine, partition, n_int)


def _embed(matrix, size: int) -> sparse.csc_matrix:
    """Zero-pad a square matrix to size x size."""
    coo = matrix.tocoo()
    return sparse.csc_matrix((coo.data, (coo.row, coo.col)), shape=(size, size))


def dilated_eigenvalues(pencil: DilatedPencil, near: complex, count: int = EIGS_COUNT) -> np.ndarray:
    """
    Eigenvalues of the pencil closest to `near`, nearest first.

    Shift-invert with OP = (A - near M)^{-1} M; an eigenvalue mu of OP maps
    to lambda = near + 1/mu.
    """
    n = pencil.size
    count = min(count, n - 2)
    lu = splu(sparse.csc_matrix(pencil.A - near * pencil.M))
    op = LinearOperator(shape=(n, n), dtype=complex, matvec=lambda x: lu.solve(pencil.M @ x))
    v0 = np.random.default_rng(0).standard_normal(n).astype(complex)
    try:
        mu = eigs(op, k=count, which='LM', v0=v0, tol=EIGS_TOL, return_eigenvectors=False)
    except ArpackNoConvergence as e:
        raise SolverConvergenceError(f"DilatedOperator: ARPACK did not converge near {near}") from e
    values = near + 1.0 / mu
    return values[np.argsort(np.abs(values - near))]


def dilated_spectrum(pencil: DilatedPencil) -> np.ndarray:
    """Full spectrum of the pencil by dense QZ; intended for coarse grids."""
    values = scipy.linalg.eigvals(pencil.A.toarray(), pencil.M.toarray())
    values = values[np.isfinite(values)]
    return values[np.argsort(np.abs(values))]


def off_ray_eigenvalues(values: np.ndarray, theta: complex, rel_tol: float = 0.05) -> np.ndarray:
    """Eigenvalues farther than rel_tol * |lambda| from the rotated continuum."""
    ray = essential_ray(theta, float(np.max(np.abs(values))) if len(values) else 0.0)
    keep = [lam for lam in values if ray.distance(lam) > rel_tol * max(1.0, abs(lam))]
    return np.array(keep, dtype=complex)


def dilated_oracle_eigenvalue(graph: MetricGraph, theta: complex, target: complex,
                              l_trunc: float, h: float, levels: int = ORACLE_LEVELS) -> complex:
    """
    Eigenvalue nearest `target`, extrapolated over nested grids h, h/2, ...

    Romberg over the levels removes the h^2, h^4, ... error terms of the
    piecewise-linear discretization.
    """
    if levels < 1:
        raise ValueError("dilated_oracle_eigenvalue: need at least one level")
    table = []
    guess = complex(target)
    for level in range(levels):
        pencil = dilated_fd_matrix(graph, theta, l_trunc, h, refine=2 ** level)
        value = dilated_eigenvalues(pencil, guess, count=3)[0]
        table.append(value)
    for order in range(1, levels):
        factor = 4.0 ** order
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    return complex(table[-1])


@dataclass
class ThetaSweep:
    """Tracked eigenvalue per theta and the largest pairwise deviation."""

    deviation: float
    values: dict
    skipped: List[complex]

    def __float__(self) -> float:
        return self.deviation


def theta_independence(graph: MetricGraph, resonance: Resonance, theta_list: Sequence[complex],
                       l_trunc: float = 20.0, h: float = 1.0 / 64, levels: int = THETA_LEVELS) -> ThetaSweep:
    """
    Recompute a resonance with the dilated oracle for each theta.

    Thetas whose rotated continuum does not reveal the resonance are skipped
    with a warning.

    Returns:
        ThetaSweep; deviation is max |lambda_i - lambda_j| over the kept thetas
    """
    values, skipped = {}, []
    for theta in theta_list:
        ray = essential_ray(theta, abs(resonance.lam))
        if resonance.kind != 'embedded' and not ray.reveals(resonance.lam):
            logger.warning(f"DilatedOperator: resonance {resonance.lam:.6g} masked by the continuum "
                           f"at theta = {theta}; skipped")
            skipped.append(theta)
            continue
        values[theta] = dilated_oracle_eigenvalue(graph, theta, resonance.lam, l_trunc, h, levels)
    tracked = list(values.values())
    deviation = 0.0
    for i in range(len(tracked)):
        for j in range(i + 1, len(tracked)):
            deviation = max(deviation, abs(tracked[i] - tracked[j]))
    return ThetaSweep(deviation, values, skipped)
