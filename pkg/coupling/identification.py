"""
Identification operators between a graph and its fat graph.

The graph side is the P1 space on the strip columns (one graph grid point
per strip column x_i, vertex values shared). The manifold side is the broken
P1 space of the mesh.

- J f: eps^{-1/2} f_e(x) on strips (constant across), zero on vertex regions
- J1 f: like J, but eps^{-1/2} f(v) on the region of v (continuous)
- J1' u: eps^{1/2} (N_e u + sum_v rho(dist(., v)) (C_v u - N_e u(v)))

N_e is the transverse mean over the unit cross section and C_v the mean
over the vertex region. Since the strip interpolant of J f is exactly f
extended constantly, J^T M_b J equals the graph mass matrix and J*J = id
holds to rounding.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from graphs.discretization import DofMap, assemble_graph_p1
from graphs.errors import GraphValidationError
from graphs.graph_function import GraphFunction
from graphs.metric_graph import EdgeId, VertexId
from coupling.cutoff import Cutoff
from manifold.fat_mesh import TAIL, FatGraphMesh, strip_cell_counts

logger = logging.getLogger(__name__)


class Identification:
    """Discrete J, J1 and J* for one mesh; build with `identification(mesh)`."""

    def __init__(self, mesh: FatGraphMesh):
        self.mesh = mesh
        self.graph = mesh.graph
        cells = strip_cell_counts(mesh)
        self.A0, self.M0, self.dofmap = assemble_graph_p1(self.graph, cells)
        self.scale = 1.0 / math.sqrt(mesh.eps)
        self.J = self._build(with_vertices=False)
        self.J1 = self._build(with_vertices=True)
        self._m0_lu = splu(sparse.csc_matrix(self.M0))

    def _build(self, with_vertices: bool) -> sparse.csr_matrix:
        rows, cols = [], []
        for eid, strip in self.mesh.strips.items():
            dofs = self.dofmap.edge_dofs(eid)
            for i in range(strip.n_x + 1):
                column = strip.column(i)
                rows.append(column)
                cols.append(np.full(column.size, dofs[i]))
        if with_vertices:
            index = self.graph.vertex_index()
            for v, region in self.mesh.vertex_regions.items():
                nodes = region.indices()
                rows.append(nodes)
                cols.append(np.full(nodes.size, index[v]))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        shape = (self.mesh.n_broken, self.dofmap.n_dofs)
        return sparse.csr_matrix((np.full(rows.size, self.scale), (rows, cols)), shape=shape)

    def adjoint(self, u_broken: np.ndarray) -> np.ndarray:
        """J* u = M0^{-1} J^T M_b u (adjoint in the two mass inner products)."""
        _, M_b = self.mesh.broken_matrices()
        rhs = self.J.T @ (M_b @ u_broken)
        if np.iscomplexobj(rhs):
            return self._m0_lu.solve(rhs.real) + 1j * self._m0_lu.solve(rhs.imag)
        return self._m0_lu.solve(rhs)

    def mass_solve(self, rhs: np.ndarray) -> np.ndarray:
        """M0^{-1} rhs for a vector or the columns of a matrix."""
        return self._m0_lu.solve(np.asarray(rhs, dtype=float))

    def graph_vector(self, f: GraphFunction) -> np.ndarray:
        """Samples of f at the strip columns; f's grid must refine the strip grid."""
        if f.graph is not self.graph and f.graph != self.graph:
            raise GraphValidationError("Identification: function and mesh live on different graphs")
        for eid, strip in self.mesh.strips.items():
            if f.cells(eid) % strip.n_x != 0:
                raise ValueError(f"Identification: grid mismatch on edge {eid!r} "
                                 f"({f.cells(eid)} cells do not refine {strip.n_x} strip columns)")
        return self.dofmap.from_function(f)


def identification(mesh: FatGraphMesh) -> Identification:
    """Cached Identification of a mesh."""
    if 'identification' not in mesh._cache:
        mesh._cache['identification'] = Identification(mesh)
    return mesh._cache['identification']


def apply_J(f: GraphFunction, mesh: FatGraphMesh) -> np.ndarray:
    """
    Transverse-constant extension eps^{-1/2} f on the strips, zero on vertex regions.

    Returns:
        Broken manifold vector
    """
    ident = identification(mesh)
    return ident.J @ ident.graph_vector(f)


def apply_J1(f: GraphFunction, mesh: FatGraphMesh) -> np.ndarray:
    """
    Like apply_J, with the constant eps^{-1/2} f(v) on the region of v.

    Returns:
        Broken manifold vector (continuous across interfaces)
    """
    ident = identification(mesh)
    return ident.J1 @ ident.graph_vector(f)


def _cell_mean(values: np.ndarray, i: int, s: float) -> float:
    """Exact transverse mean of the P1 interpolant inside strip cell column i at local s."""
    u_a, u_b = values[i, :-1], values[i + 1, :-1]
    u_c, u_d = values[i + 1, 1:], values[i, 1:]
    lower = s * (u_a + (u_b - u_a) * s) + (u_c - u_b) * s * s / 2.0
    upper = (1.0 - s) * (u_a + (u_c - u_d) * s) + (u_d - u_a) * (1.0 - s * s) / 2.0
    return np.mean(lower + upper)


def transverse_average(u: np.ndarray, mesh: FatGraphMesh, edge_id: EdgeId, x: float):
    """
    N_e u(x): mean of u over the cross section of the strip of e at x.

    Args:
        u: Conforming or broken manifold vector
        mesh: Fat graph mesh
        edge_id: Internal edge
        x: Edge coordinate in [0, length_e]

    Raises:
        ValueError: x outside the edge
    """
    strip = mesh.strips[edge_id]
    if not -1e-12 * strip.length <= x <= strip.length * (1 + 1e-12):
        raise ValueError(f"transverse_average: x = {x} outside [0, {strip.length}] on edge {edge_id!r}")
    values = strip.values(mesh.as_broken(u))
    step = strip.length / strip.n_x
    position = min(max(x / step, 0.0), float(strip.n_x))
    i = min(int(math.floor(position)), strip.n_x - 1)
    return _cell_mean(values, i, position - i)


def column_averages(u: np.ndarray, mesh: FatGraphMesh, edge_id: EdgeId) -> np.ndarray:
    """N_e u at every strip column (trapezoid rule across, exact for P1)."""
    values = mesh.strips[edge_id].values(mesh.as_broken(u))
    n_y = values.shape[1] - 1
    weights = np.full(n_y + 1, 1.0 / n_y)
    weights[[0, -1]] *= 0.5
    return values @ weights


def vertex_average(u: np.ndarray, mesh: FatGraphMesh, v: VertexId):
    """C_v u: mean of u over the vertex region of v."""
    region = mesh.vertex_regions[v]
    _, M_b = mesh.broken_matrices()
    nodes = region.indices()
    weights = np.asarray(M_b[nodes][:, nodes].sum(axis=1)).ravel()
    return np.dot(weights, mesh.as_broken(u)[nodes]) / np.sum(weights)


def apply_J1prime(u: np.ndarray, mesh: FatGraphMesh, cutoff: Optional[Cutoff] = None) -> GraphFunction:
    """
    Averaging map back to the graph.

    (J1' u)_e(x) = eps^{1/2} (N_e u(x) + sum_{v in de} rho(dist(x, v)) (C_v u - N_e u(v)))
    on the strip columns. At an edge end the correction has weight one, so
    the value there is eps^{1/2} C_v u for every incident edge: the result is
    continuous by construction.

    Args:
        u: Conforming or broken manifold vector
        mesh: Fat graph mesh
        cutoff: Cutoff rho (default: smoothstep with the graph's l0)

    Returns:
        GraphFunction on the strip-column grid
    """
    cutoff = cutoff or Cutoff(mesh.graph.l0)
    u = mesh.as_broken(u)
    root = math.sqrt(mesh.eps)
    centers = {v: vertex_average(u, mesh, v) for v in mesh.vertex_regions}
    values = {}
    for e in mesh.graph.internal_edges:
        strip = mesh.strips[e.id]
        x = strip.grid()
        means = column_averages(u, mesh, e.id)
        corrected = (means
                     + cutoff(x) * (centers[e.tail] - means[0])
                     + cutoff(e.length - x) * (centers[e.head] - means[-1]))
        samples = root * corrected
        samples[0] = root * centers[e.tail]
        samples[-1] = root * centers[e.head]
        values[e.id] = samples
    vertex_values = {v: root * c for v, c in centers.items()}
    return GraphFunction(mesh.graph, values, vertex_values, snap=False)
