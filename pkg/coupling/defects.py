"""
Quantitative closeness of a graph and its fat graph.

All norms are discrete: L2 norms are mass-matrix norms, the form norm is
||u||_1^2 = u^T (A + M) u. Operator norms are evaluated on the finite
element spaces, so the reported values are lower bounds for the operator
defects restricted to the discretized low-energy part.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu
from scipy.spatial.distance import directed_hausdorff

from graphs.eigensolver import eigenpairs_below, residuals, smallest_eigenpairs
from graphs.errors import SolverConvergenceError
from graphs.metric_graph import MetricGraph
from graphs.spectral_result import SpectralResult
from coupling.coupling_config import (DEFECT_EIGS_TOL, DEFECT_MAXITER, MIN_MODES, SIMPLE_GAP_TOL,
                                      SPECTRUM_CLEARANCE)
from coupling.identification import identification
from manifold.fat_mesh import FatGraphMesh
from manifold.manifold_config import FEM_RESIDUAL_TOL

logger = logging.getLogger(__name__)

DEFECT_NAMES = ('quasi_unitarity', 'sandwich', 'projection', 'eigenfunction')


@dataclass
class DefectReport:
    """
    Measured defects at one eps.

    Attributes:
        eps: Strip width
        deltas: Defect name -> value (nan when not applicable)
        modes: Number of manifold modes used by the quasi-unitarity defect
        norms: Description of the discrete norms
        flags: Soft-assertion messages
    """

    eps: float
    deltas: Dict[str, float] = field(default_factory=dict)
    modes: int = 0
    norms: Dict[str, str] = field(default_factory=lambda: {
        'H0': 'mass-matrix L2 norm',
        'H1': 'sqrt(u^T (A + M) u)',
    })
    flags: List[str] = field(default_factory=list)

    def __post_init__(self):
        for name, value in self.deltas.items():
            if name not in DEFECT_NAMES:
                raise ValueError(f"DefectReport: unknown defect {name!r}")
            if value < 0:
                raise ValueError(f"DefectReport: defect {name} = {value} is negative")

    def row(self) -> Tuple[float, ...]:
        return (self.eps,) + tuple(self.deltas.get(name, math.nan) for name in DEFECT_NAMES)


def _m_norm(M, u: np.ndarray) -> float:
    return math.sqrt(max(float(np.real(np.vdot(u, M @ u))), 0.0))


def quasi_unitarity_profile(graph: MetricGraph, mesh: FatGraphMesh, n_modes: int) -> np.ndarray:
    """
    ||(J J* - id) u|| / ||u||_1 for each of the first n_modes manifold eigenvectors.

    Raises:
        ValueError: n_modes < MIN_MODES
        SolverConvergenceError: fewer converged modes than requested
    """
    if n_modes < MIN_MODES:
        raise ValueError(f"quasi_unitarity_defect: need n_modes >= {MIN_MODES}, got {n_modes}")
    ident = identification(mesh)
    A, M = mesh.assemble()
    values, vectors = smallest_eigenpairs(A, M, n_modes)
    res = residuals(A, M, values, vectors)
    if values.size < n_modes or np.any(res > FEM_RESIDUAL_TOL):
        raise SolverConvergenceError(f"quasi_unitarity_defect: only {int(np.sum(res <= FEM_RESIDUAL_TOL))} "
                                     f"of {n_modes} modes converged")
    _, M_b = mesh.broken_matrices()
    profile = np.empty(n_modes)
    for i in range(n_modes):
        u_c = vectors[:, i]
        u = mesh.as_broken(u_c)
        defect = ident.J @ ident.adjoint(u) - u
        form_norm = math.sqrt(float(u_c @ (A @ u_c) + u_c @ (M @ u_c)))
        profile[i] = _m_norm(M_b, defect) / form_norm
    return profile


def quasi_unitarity_defect(graph: MetricGraph, mesh: FatGraphMesh, n_modes: int = MIN_MODES) -> float:
    """
    Largest quasi-unitarity defect over the first n_modes manifold eigenvectors.

    J J* is the M_b-orthogonal projection onto the range of J, so the defect
    measures the part of each mode that is not transversally constant on the
    strips, plus its mass on the vertex regions.
    """
    return float(np.max(quasi_unitarity_profile(graph, mesh, n_modes)))


def resolvent_difference(mesh: FatGraphMesh) -> LinearOperator:
    """
    B = M_b D with D = P K^{-1} P^T M_b - J K0^{-1} J^T M_b, K = A + M, K0 = A0 + M0.

    D is the discretized (Delta_eps + 1)^{-1} - J (Delta_0 + 1)^{-1} J* on
    the broken space; B is symmetric.
    """
    ident = identification(mesh)
    A, M = mesh.assemble()
    _, M_b = mesh.broken_matrices()
    P = mesh.prolongation
    lu = splu(sparse.csc_matrix(A + M))
    lu0 = splu(sparse.csc_matrix(ident.A0 + ident.M0))
    J = ident.J

    def matvec(x):
        x = np.asarray(x).ravel()
        y = M_b @ x
        difference = P @ lu.solve(P.T @ y) - J @ lu0.solve(J.T @ y)
        return M_b @ difference

    n = mesh.n_broken
    return LinearOperator(shape=(n, n), matvec=matvec, dtype=float)


def sandwich_defect(graph: MetricGraph, mesh: FatGraphMesh, seed: int = 0) -> float:
    """
    M_b-weighted operator norm of (Delta_eps + 1)^{-1} - J (Delta_0 + 1)^{-1} J*.

    The largest-magnitude eigenvalue of the symmetric pencil (B, M_b) is found
    by Lanczos from a deterministic start vector.

    Raises:
        SolverConvergenceError: no convergence within DEFECT_MAXITER iterations
    """
    B = resolvent_difference(mesh)
    _, M_b = mesh.broken_matrices()
    v0 = np.random.default_rng(seed).standard_normal(mesh.n_broken)
    try:
        values = eigsh(B, k=1, M=M_b, which='LM', v0=v0, tol=DEFECT_EIGS_TOL,
                       maxiter=DEFECT_MAXITER, return_eigenvectors=False)
    except ArpackNoConvergence as e:
        raise SolverConvergenceError("sandwich_defect: Lanczos did not converge") from e
    return float(abs(values[0]))


def _graph_eigenpairs(mesh: FatGraphMesh, limit: float):
    ident = identification(mesh)
    return eigenpairs_below(ident.A0, ident.M0, limit)


def projection_and_eigenfunction_defect(graph: MetricGraph, mesh: FatGraphMesh,
                                        interval: Sequence[float],
                                        eigenfunction: bool = True) -> Tuple[float, float]:
    """
    Spectral projection defect and eigenfunction transfer defect on an interval.

    proj = ||1_I(Delta_eps) J - J 1_I(Delta_0)|| (graph L2 -> manifold L2)
    eigfun = min over phases of ||J u0 - u_eps|| for the normalized
    eigenvectors of the single eigenvalue in I (nan if eigenfunction=False).

    Args:
        graph: Compact graph of the mesh
        mesh: Fat graph mesh
        interval: (a, b) with a < b
        eigenfunction: Also compute the eigenfunction defect

    Raises:
        ValueError: an endpoint within SPECTRUM_CLEARANCE of the graph
            spectrum, or the interval does not isolate one simple eigenvalue
            (graph and manifold) when eigenfunction=True
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError("projection_and_eigenfunction_defect: empty interval")
    ident = identification(mesh)
    A, M = mesh.assemble()
    _, M_b = mesh.broken_matrices()

    limit = b + max(1.0, abs(b)) * 0.1
    values0, vectors0 = _graph_eigenpairs(mesh, limit)
    distances = np.abs(np.concatenate((values0 - a, values0 - b)))
    if distances.size and np.min(distances) < SPECTRUM_CLEARANCE:
        raise ValueError(f"projection_and_eigenfunction_defect: endpoint of [{a:g}, {b:g}] within "
                         f"{SPECTRUM_CLEARANCE:g} of the graph spectrum")
    if b >= 0:
        values_eps, vectors_eps = eigenpairs_below(A, M, b)
    else:
        values_eps, vectors_eps = np.zeros(0), np.zeros((A.shape[0], 0))
    V = vectors0[:, (values0 >= a) & (values0 <= b)]
    U = vectors_eps[:, (values_eps >= a) & (values_eps <= b)]

    Y = mesh.prolongation @ U
    if U.shape[1] + V.shape[1] == 0:
        proj = 0.0
    else:
        # T = X C with X = [Y, J V], C = [Y^T M_b J; -V^T M0]; ||T||^2 = max eig(H C M0^{-1} C^T)
        X = np.hstack((Y, ident.J @ V))
        H = X.T @ (M_b @ X)
        C = np.vstack((np.asarray(ident.J.T @ (M_b @ Y)).T, -np.asarray(ident.M0 @ V).T))
        G = C @ ident.mass_solve(C.T)
        eigenvalues = scipy.linalg.eigvals(H @ G)
        proj = math.sqrt(max(float(np.max(eigenvalues.real)), 0.0))

    eigfun = math.nan
    if eigenfunction:
        if V.shape[1] != 1 or _is_multiple(values0, a, b):
            raise ValueError(f"projection_and_eigenfunction_defect: [{a:g}, {b:g}] holds {V.shape[1]} graph "
                             f"eigenvalues; the eigenfunction defect needs exactly one simple eigenvalue")
        if U.shape[1] != 1:
            raise ValueError(f"projection_and_eigenfunction_defect: [{a:g}, {b:g}] holds {U.shape[1]} "
                             f"fat-graph eigenvalues; refine the interval")
        ju0 = ident.J @ V[:, 0]
        u_eps = Y[:, 0]
        overlap = abs(float(ju0 @ (M_b @ u_eps)))
        eigfun = math.sqrt(max(_m_norm(M_b, ju0) ** 2 + _m_norm(M_b, u_eps) ** 2 - 2.0 * overlap, 0.0))
    return proj, eigfun


def _is_multiple(values: np.ndarray, a: float, b: float) -> bool:
    inside = values[(values >= a) & (values <= b)]
    if inside.size != 1:
        return inside.size > 1
    neighbours = values[np.abs(values - inside[0]) <= SIMPLE_GAP_TOL * max(1.0, abs(inside[0]))]
    return neighbours.size > 1


def isolating_interval(values: Sequence[Tuple[float, int]], index: int) -> Tuple[float, float]:
    """
    Interval around the distinct eigenvalue `index` reaching halfway to its neighbours.

    Args:
        values: (lambda, multiplicity) pairs, nondecreasing
        index: Position in `values`
    """
    distinct = [v for v, _ in values]
    center = distinct[index]
    below = center - distinct[index - 1] if index > 0 else max(1.0, center)
    above = distinct[index + 1] - center if index + 1 < len(distinct) else below
    half = 0.5 * min(below, above)
    return center - half, center + half


def hausdorff_distance(spec_a: SpectralResult, spec_b: SpectralResult, lambda_max: float) -> float:
    """
    Two-sided Hausdorff distance of the spectra intersected with [0, lambda_max].

    Returns lambda_max with a warning when either intersection is empty.
    """
    a = spec_a.distinct()
    b = spec_b.distinct()
    a = a[(a >= 0) & (a <= lambda_max)].reshape(-1, 1)
    b = b[(b >= 0) & (b <= lambda_max)].reshape(-1, 1)
    if a.size == 0 or b.size == 0:
        logger.warning(f"Defects: empty spectrum in [0, {lambda_max:g}]; Hausdorff distance set to {lambda_max:g}")
        return float(lambda_max)
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))
