"""
Piecewise-linear finite elements on metric graphs.
Vertex degrees of freedom are shared by all incident edges, so continuity is
exact; the Kirchhoff flux condition holds weakly through the assembled form.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import sparse

from graphs.eigensolver import eigenpairs_below, group_multiplicities, smallest_eigenpairs
from graphs.errors import GraphValidationError
from graphs.graph_config import FD_MAX_STEP_FRACTION, ORACLE_GROUP_TOL, ORACLE_LEVELS, ORACLE_STEP
from graphs.graph_function import GraphFunction
from graphs.metric_graph import EdgeId, MetricGraph, require_valid
from graphs.spectral_result import SpectralResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DofMap:
    """
    Numbering of the P1 degrees of freedom: vertices first (graph order),
    then the interior grid points of each internal edge, edge by edge.
    """

    graph: MetricGraph
    cells: Dict[EdgeId, int]
    offsets: Dict[EdgeId, int]
    n_dofs: int

    @classmethod
    def build(cls, graph: MetricGraph, cells: Dict[EdgeId, int]) -> 'DofMap':
        offsets, position = {}, len(graph.vertices)
        for e in graph.internal_edges:
            offsets[e.id] = position
            position += cells[e.id] - 1
        return cls(graph, dict(cells), offsets, position)

    def step(self, edge_id: EdgeId) -> float:
        return self.graph.edge(edge_id).length / self.cells[edge_id]

    def grid(self, edge_id: EdgeId) -> np.ndarray:
        return np.linspace(0.0, self.graph.edge(edge_id).length, self.cells[edge_id] + 1)

    def edge_dofs(self, edge_id: EdgeId) -> np.ndarray:
        """Global indices of the grid points of one edge, tail to head."""
        e = self.graph.edge(edge_id)
        index = self.graph.vertex_index()
        n = self.cells[edge_id]
        interior = self.offsets[edge_id] + np.arange(n - 1)
        return np.concatenate(([index[e.tail]], interior, [index[e.head]]))

    def to_function(self, vector: np.ndarray) -> GraphFunction:
        """GraphFunction with the nodal values of a dof vector."""
        vector = np.asarray(vector)
        values = {e.id: vector[self.edge_dofs(e.id)] for e in self.graph.internal_edges}
        vertex_values = {v: vector[i] for i, v in enumerate(self.graph.vertices)}
        return GraphFunction(self.graph, values, vertex_values)

    def from_function(self, f: GraphFunction) -> np.ndarray:
        """Nodal interpolation of f onto this grid."""
        dtype = complex if f.is_complex else float
        vector = np.zeros(self.n_dofs, dtype=dtype)
        for i, v in enumerate(self.graph.vertices):
            vector[i] = f.vertex_values[v]
        for e in self.graph.internal_edges:
            dofs = self.edge_dofs(e.id)
            vector[dofs[1:-1]] = f.evaluate(e.id, self.grid(e.id)[1:-1])
        return vector


def assemble_graph_p1(graph: MetricGraph, cells: Dict[EdgeId, int]):
    """
    Assemble stiffness and mass matrices of the free Laplacian.

    Element matrices on a cell of size h are (1/h)[[1,-1],[-1,1]] and
    (h/6)[[2,1],[1,2]].

    Args:
        graph: Compact graph
        cells: Number of uniform cells per internal edge

    Returns:
        (A, M, dofmap) with A, M in CSC format
    """
    dofmap = DofMap.build(graph, cells)
    rows, cols, stiff, mass = [], [], [], []
    for e in graph.internal_edges:
        dofs = dofmap.edge_dofs(e.id)
        h = dofmap.step(e.id)
        left, right = dofs[:-1], dofs[1:]
        ones = np.ones(left.size)
        rows.append(np.column_stack((left, right, left, right)).reshape(-1))
        cols.append(np.column_stack((right, left, left, right)).reshape(-1))
        stiff.append(np.column_stack((-ones, -ones, ones, ones)).reshape(-1) / h)
        mass.append(np.column_stack((ones, ones, 2 * ones, 2 * ones)).reshape(-1) * h / 6.0)
    i, j = np.concatenate(rows), np.concatenate(cols)
    shape = (dofmap.n_dofs, dofmap.n_dofs)
    A = sparse.csc_matrix((np.concatenate(stiff), (i, j)), shape=shape)
    M = sparse.csc_matrix((np.concatenate(mass), (i, j)), shape=shape)
    return A, M, dofmap


def grid_cells(graph: MetricGraph, h: float, refine: int = 1) -> Dict[EdgeId, int]:
    """ceil(length/h) cells per edge, times the refinement multiplier."""
    return {e.id: max(1, math.ceil(e.length / h - 1e-9)) * refine for e in graph.internal_edges}


def fd_discretize(graph: MetricGraph, h: float):
    """
    Finite-difference (P1) oracle matrices for a compact graph.

    Args:
        graph: Compact admissible graph
        h: Target grid step, at most l0/4

    Returns:
        (A, M, dofmap)

    Raises:
        GraphValidationError: Graph inadmissible or has infinite edges
        ValueError: h too large
    """
    require_valid(graph)
    if not graph.is_compact:
        raise GraphValidationError("fd_discretize: infinite edge present, truncate the leads first")
    if not 0 < h <= FD_MAX_STEP_FRACTION * graph.l0 * (1 + 1e-12):
        raise ValueError(f"fd_discretize: step h = {h} must satisfy 0 < h <= l0/4 = {graph.l0 / 4}")
    return assemble_graph_p1(graph, grid_cells(graph, h))


def fd_oracle_spectrum(graph: MetricGraph, lambda_max: float,
                       h: float = ORACLE_STEP, levels: int = ORACLE_LEVELS,
                       group_tol: float = ORACLE_GROUP_TOL) -> SpectralResult:
    """
    Extrapolated oracle spectrum below lambda_max.

    The P1 eigenvalues on nested grids (cell counts doubled exactly) have an
    error expansion in even powers of the step, so a Romberg table over the
    levels removes the leading terms.

    Args:
        graph: Compact admissible graph
        lambda_max: Upper end of the spectral window
        h: Coarsest step (at most l0/4)
        levels: Number of nested grids, at least 1
        group_tol: Relative tolerance for merging eigenvalues into one level
    """
    if levels < 1:
        raise ValueError("fd_oracle_spectrum: need at least one level")
    require_valid(graph)
    fd_discretize(graph, h)
    base = grid_cells(graph, h)

    # P1 eigenvalues approach from above, so the finest grid fixes the count
    finest = {eid: n * 2 ** (levels - 1) for eid, n in base.items()}
    A, M, _ = assemble_graph_p1(graph, finest)
    margin = lambda_max * 1.05 + 1.0
    count = eigenpairs_below(A, M, margin)[0].size

    table = []
    for level in range(levels):
        cells = {eid: n * 2 ** level for eid, n in base.items()}
        A, M, _ = assemble_graph_p1(graph, cells)
        values, _ = smallest_eigenpairs(A, M, count)
        table.append(values)

    # Romberg: eliminate h^2, h^4, ...
    for order in range(1, levels):
        factor = 4.0 ** order
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    extrapolated = np.sort(table[-1])
    extrapolated[0] = 0.0 if abs(extrapolated[0]) < 1e-8 else extrapolated[0]
    grouped = group_multiplicities(extrapolated, group_tol, abs_tol=1e-8)
    kept = [(max(v, 0.0), m) for v, m in grouped if v <= lambda_max]
    logger.debug(f"FDOracle: {len(kept)} distinct eigenvalues below {lambda_max:g} ({levels} levels)")
    return SpectralResult(kept, 'fd-oracle')
