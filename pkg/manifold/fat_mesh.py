"""
Fat graphs: edge strips of width eps glued to eps-scaled vertex templates.

The gluing is abstract. Every region keeps its own planar coordinates (strip
of edge e: [0, length_e] x [0, eps]; vertex region: eps times the template),
and interface nodes are identified combinatorially. Functions are stored in
two numberings:

- broken: region by region, interface nodes duplicated; the L2 space of
  P1 functions that may jump across interfaces
- conforming: identified interface nodes merged; the H1 space

The prolongation P (broken x conforming) copies conforming values to every
broken copy, so A = P^T A_b P and M = P^T M_b P.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from graphs.errors import GraphValidationError
from graphs.metric_graph import EdgeId, MetricGraph, VertexId, require_valid
from manifold.fem import assemble_p1, triangle_areas
from manifold.manifold_config import (CROSS_SECTION_LAMBDA2, CROSS_SECTION_WIDTH, INTERFACE_TOL, MAX_EPS_FRACTION,
                                      MAX_HMESH_FRACTION)
from manifold.vertex_template import (TemplateMesh, VertexTemplate, build_vertex_template, cell_count,
                                      template_constants, tensor_grid)

logger = logging.getLogger(__name__)

TAIL = 'tail'
HEAD = 'head'


@dataclass(frozen=True)
class CrossSection:
    """Transverse factor F = [0, width] with the flat metric (m = 1, d = 2)."""

    width: float = CROSS_SECTION_WIDTH
    m: int = 1
    d: int = 2

    @property
    def volume(self) -> float:
        return self.width

    @property
    def lambda2(self) -> float:
        return CROSS_SECTION_LAMBDA2 / self.width ** 2


@dataclass(frozen=True)
class StripRegion:
    """Tensor-grid strip of one edge; local node (i, j) sits at (x_i, y_j)."""

    edge_id: EdgeId
    length: float
    n_x: int
    n_y: int
    offset: int

    @property
    def size(self) -> int:
        return (self.n_x + 1) * (self.n_y + 1)

    def indices(self) -> np.ndarray:
        return self.offset + np.arange(self.size)

    def column(self, i: int) -> np.ndarray:
        """Broken indices of the nodes at x = x_i, bottom to top."""
        return self.offset + i * (self.n_y + 1) + np.arange(self.n_y + 1)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_x + 1)

    def values(self, u_broken: np.ndarray) -> np.ndarray:
        """Nodal values as an (n_x + 1, n_y + 1) array."""
        return u_broken[self.indices()].reshape(self.n_x + 1, self.n_y + 1)


@dataclass
class VertexRegion:
    """eps-scaled vertex template; ends[p] is glued to interface p."""

    vertex: VertexId
    template: VertexTemplate
    mesh: TemplateMesh
    offset: int
    ends: List[Tuple[EdgeId, str]]

    @property
    def size(self) -> int:
        return self.mesh.nodes.shape[0]

    def indices(self) -> np.ndarray:
        return self.offset + np.arange(self.size)

    def interface(self, position: int) -> np.ndarray:
        return self.offset + self.mesh.interfaces[position]


@dataclass
class FatGraphMesh:
    """
    Glued triangle mesh of a fat graph.

    Attributes:
        graph: Compact graph the mesh is built on
        eps: Strip width
        h_mesh: Target element size
        refine: Cell-count multiplier (nested meshes for refine = 1, 2, 4, ...)
        strips: Strip region per internal edge
        vertex_regions: Vertex region per vertex
        nodes: (n_broken, 2) region-local coordinates
        triangles: (m, 3) broken node indices
        triangle_region: Region index per triangle (into `regions`)
        regions: Region labels ('edge', id) or ('vertex', id)
        conforming: Conforming index of every broken node
    """

    graph: MetricGraph
    eps: float
    h_mesh: float
    refine: int
    strips: Dict[EdgeId, StripRegion]
    vertex_regions: Dict[VertexId, VertexRegion]
    nodes: np.ndarray
    triangles: np.ndarray
    triangle_region: np.ndarray
    regions: List[tuple]
    conforming: np.ndarray
    cross_section: CrossSection = field(default_factory=CrossSection)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_broken(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_nodes(self) -> int:
        """Number of conforming degrees of freedom."""
        return int(self.conforming.max()) + 1

    @property
    def conforming_triangles(self) -> np.ndarray:
        return self.conforming[self.triangles]

    @property
    def prolongation(self) -> sparse.csr_matrix:
        if 'P' not in self._cache:
            n_b = self.n_broken
            self._cache['P'] = sparse.csr_matrix((np.ones(n_b), (np.arange(n_b), self.conforming)),
                                                 shape=(n_b, self.n_nodes))
        return self._cache['P']

    def broken_matrices(self) -> Tuple[sparse.csc_matrix, sparse.csc_matrix]:
        """Block-diagonal stiffness and mass on the broken numbering."""
        if 'broken' not in self._cache:
            self._cache['broken'] = assemble_p1(self.nodes, self.triangles)
        return self._cache['broken']

    def assemble(self) -> Tuple[sparse.csc_matrix, sparse.csc_matrix]:
        """Conforming stiffness and mass, P^T (A_b, M_b) P."""
        if 'conforming' not in self._cache:
            A_b, M_b = self.broken_matrices()
            P = self.prolongation
            self._cache['conforming'] = (sparse.csc_matrix(P.T @ A_b @ P), sparse.csc_matrix(P.T @ M_b @ P))
        return self._cache['conforming']

    def as_broken(self, u: np.ndarray) -> np.ndarray:
        """Broken representation of a conforming or broken vector."""
        u = np.asarray(u)
        if u.shape[0] == self.n_broken:
            return u
        if u.shape[0] == self.n_nodes:
            return self.prolongation @ u
        raise ValueError(f"FatGraphMesh: vector of length {u.shape[0]} fits neither numbering "
                         f"({self.n_broken} broken, {self.n_nodes} conforming)")

    # Geometry

    @property
    def area(self) -> float:
        return float(np.sum(triangle_areas(self.nodes, self.triangles)))

    def region_area(self, label: tuple) -> float:
        mask = self.triangle_region == self.regions.index(label)
        return float(np.sum(triangle_areas(self.nodes, self.triangles[mask])))

    def euler_characteristic(self) -> int:
        """V - E + F of the glued triangulation."""
        tri = self.conforming_triangles
        edges = np.sort(np.vstack((tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]])), axis=1)
        n_edges = np.unique(edges, axis=0).shape[0]
        return self.n_nodes - n_edges + tri.shape[0]

    def is_connected(self) -> bool:
        tri = self.conforming_triangles
        rows = np.concatenate((tri[:, 0], tri[:, 1], tri[:, 2]))
        cols = np.concatenate((tri[:, 1], tri[:, 2], tri[:, 0]))
        adjacency = sparse.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(self.n_nodes, self.n_nodes))
        n_components, _ = connected_components(adjacency, directed=False)
        return n_components == 1

    def template_constants(self) -> Dict[VertexId, Tuple[float, float]]:
        """(vol, lambda2) of the unscaled template of every vertex."""
        return {v: template_constants(region.template) for v, region in self.vertex_regions.items()}

    def tables(self):
        """Node, triangle and region tables for external visualization."""
        region_of_node = np.empty(self.n_broken, dtype=int)
        for index, label in enumerate(self.regions):
            kind, name = label
            block = self.strips[name] if kind == 'edge' else self.vertex_regions[name]
            region_of_node[block.indices()] = index
        nodes = [(b, int(region_of_node[b]), int(self.conforming[b]), x, y)
                 for b, (x, y) in enumerate(self.nodes)]
        triangles = [(t, int(a), int(b), int(c), int(self.triangle_region[t]))
                     for t, (a, b, c) in enumerate(self.triangles)]
        regions = [(index, kind, str(name), self.region_area((kind, name)))
                   for index, (kind, name) in enumerate(self.regions)]
        return nodes, triangles, regions


def vertex_ends(graph: MetricGraph, v: VertexId) -> List[Tuple[EdgeId, str]]:
    """Internal edge ends at v in graph order; a loop contributes its tail, then its head."""
    ends = []
    for e in graph.internal_edges:
        if e.tail == v:
            ends.append((e.id, TAIL))
        if e.head == v:
            ends.append((e.id, HEAD))
    return ends


def build_mesh(graph: MetricGraph, eps: float, h_mesh: float, refine: int = 1) -> FatGraphMesh:
    """
    Mesh the fat graph X_eps.

    Each strip is an n_x x n_y tensor grid with n_y = ceil(eps/h_mesh) and
    n_x = ceil(length/h_mesh); each vertex region is its template meshed at
    step h_mesh/eps and scaled by eps. Strip end x = 0 of edge e is glued to
    the template interface of (e, tail) node by node; the end x = length is
    glued in reverse order, which keeps the glued surface orientable.

    Args:
        graph: Compact admissible graph
        eps: Strip width, at most l0/2
        h_mesh: Target element size, at most eps/4
        refine: Cell-count multiplier

    Raises:
        GraphValidationError: graph inadmissible or not compact
        ValueError: eps or h_mesh out of range, non-conforming interfaces
    """
    require_valid(graph)
    if not graph.is_compact:
        raise GraphValidationError("build_mesh: infinite edge present, mesh the interior of a partition")
    if not 0 < eps <= MAX_EPS_FRACTION * graph.l0 * (1 + 1e-12):
        raise ValueError(f"build_mesh: eps = {eps} must satisfy 0 < eps <= l0/2 = {graph.l0 / 2}")
    if not 0 < h_mesh <= MAX_HMESH_FRACTION * eps * (1 + 1e-12):
        raise ValueError(f"build_mesh: h_mesh = {h_mesh} must satisfy 0 < h_mesh <= eps/4 = {eps / 4}")
    if refine < 1:
        raise ValueError("build_mesh: refine must be a positive integer")

    base_y = cell_count(eps, h_mesh)
    n_y = base_y * refine
    node_blocks, triangle_blocks, region_tags, regions = [], [], [], []
    offset = 0

    strips: Dict[EdgeId, StripRegion] = {}
    for e in graph.internal_edges:
        n_x = cell_count(e.length, h_mesh) * refine
        strip = StripRegion(e.id, e.length, n_x, n_y, offset)
        nodes, triangles = tensor_grid((0.0, 0.0), (e.length, 0.0), (0.0, eps), n_x, n_y)
        strips[e.id] = strip
        node_blocks.append(nodes)
        triangle_blocks.append(triangles + offset)
        region_tags.append(np.full(triangles.shape[0], len(regions)))
        regions.append(('edge', e.id))
        offset += strip.size

    templates: Dict[int, VertexTemplate] = {}
    vertex_regions: Dict[VertexId, VertexRegion] = {}
    for v in graph.vertices:
        ends = vertex_ends(graph, v)
        deg = len(ends)
        if deg not in templates:
            templates[deg] = build_vertex_template(deg, graph.l0, constants=False)
        local = templates[deg].triangulate(h_mesh / eps, refine, interface_cells=base_y)
        scaled = TemplateMesh(eps * local.nodes, local.triangles, local.interfaces, eps)
        region = VertexRegion(v, templates[deg], scaled, offset, ends)
        vertex_regions[v] = region
        node_blocks.append(scaled.nodes)
        triangle_blocks.append(scaled.triangles + offset)
        region_tags.append(np.full(scaled.triangles.shape[0], len(regions)))
        regions.append(('vertex', v))
        offset += region.size

    conforming = _identify(strips, vertex_regions, offset)
    mesh = FatGraphMesh(graph, float(eps), float(h_mesh), refine, strips, vertex_regions,
                        np.vstack(node_blocks), np.vstack(triangle_blocks), np.concatenate(region_tags),
                        regions, conforming)
    logger.info(f"FatGraphMesh: eps = {eps:g}, h = {h_mesh:g}, {mesh.n_nodes} nodes, "
                f"{mesh.triangles.shape[0]} triangles, {len(regions)} regions")
    return mesh


def _identify(strips: Dict[EdgeId, StripRegion], vertex_regions: Dict[VertexId, VertexRegion],
              n_broken: int) -> np.ndarray:
    """Conforming index of every broken node from the interface pairings."""
    left, right = [], []
    for region in vertex_regions.values():
        for position, (edge_id, end) in enumerate(region.ends):
            strip = strips[edge_id]
            interface = region.interface(position)
            if interface.size != strip.n_y + 1:
                raise ValueError(f"build_mesh: interface of {edge_id!r} at vertex {region.vertex!r} has "
                                 f"{interface.size - 1} cells, strip has {strip.n_y}")
            if end == TAIL:
                column = strip.column(0)
            else:
                column = strip.column(strip.n_x)
                interface = interface[::-1]
            left.append(column)
            right.append(interface)
    if not left:
        return np.arange(n_broken)
    rows, cols = np.concatenate(left), np.concatenate(right)
    pairing = sparse.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n_broken, n_broken))
    _, labels = connected_components(pairing, directed=False)
    return labels


def strip_cell_counts(mesh: FatGraphMesh) -> Dict[EdgeId, int]:
    """Cells per edge of the graph grid aligned with the strip columns."""
    return {eid: strip.n_x for eid, strip in mesh.strips.items()}


def transverse_threshold(eps: float, cross_section: Optional[CrossSection] = None) -> float:
    """First transverse Neumann level lambda2(F)/eps^2 of the strips."""
    cross_section = cross_section or CrossSection()
    return cross_section.lambda2 / (eps * eps)


def expected_area(mesh: FatGraphMesh) -> float:
    """sum_e length_e * eps + sum_v eps^2 vol(U_v)."""
    strips = sum(strip.length for strip in mesh.strips.values()) * mesh.eps * mesh.cross_section.volume
    vertices = sum(region.template.volume for region in mesh.vertex_regions.values()) * mesh.eps ** 2
    return strips + vertices


def interface_length_ok(mesh: FatGraphMesh, tol: float = INTERFACE_TOL) -> bool:
    """Every glued interface of the scaled templates has length eps."""
    for region in mesh.vertex_regions.values():
        for position in range(len(region.ends)):
            points = region.mesh.nodes[region.mesh.interfaces[position]]
            if not math.isclose(float(np.linalg.norm(points[-1] - points[0])), mesh.eps, rel_tol=tol):
                return False
    return True
