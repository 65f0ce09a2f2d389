"""
Unscaled vertex regions of a fat graph and simple test regions.

A vertex template of degree deg is a core (unit square for deg 1 and 2, a
regular deg-gon otherwise) with one rectangular stub of width 1 and length
l0/2 per incident edge end. The outer end of each stub is the attachment
interface; the stub itself is the collar required by the trace estimates.

Interfaces are listed in counter-clockwise boundary order of the template.
All cell counts are a base count times the refinement multiplier, so meshes
built with refine = 1, 2, 4, ... are nested.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from graphs.eigensolver import smallest_eigenpairs
from manifold.fem import assemble_p1
from manifold.manifold_config import MERGE_TOL, TEMPLATE_CHANGE_TOL, TEMPLATE_STEP

logger = logging.getLogger(__name__)


@dataclass
class TemplateMesh:
    """Triangulated region with its attachment interfaces (node index arrays)."""

    nodes: np.ndarray
    triangles: np.ndarray
    interfaces: List[np.ndarray] = field(default_factory=list)
    eps: Optional[float] = None

    def assemble(self) -> Tuple[sparse.csc_matrix, sparse.csc_matrix]:
        return assemble_p1(self.nodes, self.triangles)

    @property
    def area(self) -> float:
        v1, v2, v3 = (self.nodes[self.triangles[:, i]] for i in range(3))
        d1, d2 = v2 - v1, v3 - v1
        return float(0.5 * np.sum(np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])))


def shoelace(points: np.ndarray) -> float:
    """Area of a simple polygon given by its vertices in order."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def cell_count(length: float, h: float) -> int:
    """Cells of size at most h on a segment of the given length."""
    return max(1, math.ceil(length / h - 1e-9))


def tensor_grid(origin, axis_u, axis_v, n_u: int, n_v: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Triangulated parallelogram origin + s*axis_u + t*axis_v, s, t in [0, 1].

    Node (i, j) (i along axis_u, j along axis_v) has index i*(n_v + 1) + j;
    each cell a=(i,j), b=(i+1,j), c=(i+1,j+1), d=(i,j+1) splits into the
    triangles (a, b, c) and (a, c, d).
    """
    s = np.linspace(0.0, 1.0, n_u + 1)
    t = np.linspace(0.0, 1.0, n_v + 1)
    ss, tt = np.meshgrid(s, t, indexing='ij')
    nodes = (np.asarray(origin, dtype=float)
             + ss.reshape(-1, 1) * np.asarray(axis_u, dtype=float)
             + tt.reshape(-1, 1) * np.asarray(axis_v, dtype=float))
    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing='ij')
    a = (i * (n_v + 1) + j).reshape(-1)
    b = a + (n_v + 1)
    c = b + 1
    d = a + 1
    triangles = np.concatenate((np.column_stack((a, b, c)), np.column_stack((a, c, d))))
    return nodes, triangles


def _merge(pieces: List[Tuple[np.ndarray, np.ndarray]], tol: float):
    """
    Glue mesh pieces by identifying coincident nodes.

    Returns:
        (nodes, triangles, maps) where maps[p] sends local node indices of
        piece p to merged indices
    """
    offsets = np.cumsum([0] + [nodes.shape[0] for nodes, _ in pieces])
    stacked = np.vstack([nodes for nodes, _ in pieces])
    tree = cKDTree(stacked)
    canonical = np.array([min(ball) for ball in tree.query_ball_point(stacked, tol)])
    kept, renumber = np.unique(canonical, return_inverse=True)
    nodes = stacked[kept]
    triangles = np.vstack([renumber[tri + offsets[p]] for p, (_, tri) in enumerate(pieces)])
    maps = [renumber[offsets[p]:offsets[p + 1]] for p in range(len(pieces))]
    return nodes, triangles, maps


class Region(ABC):
    """Polygonal region that can be triangulated at a given step."""

    @abstractmethod
    def polygon(self) -> np.ndarray:
        """Outline vertices, counter-clockwise."""

    @abstractmethod
    def triangulate(self, h: float, refine: int = 1, interface_cells: Optional[int] = None) -> TemplateMesh:
        """Mesh with cell counts ceil(length/h) * refine."""

    @property
    def volume(self) -> float:
        return shoelace(self.polygon())


@dataclass
class RectangleRegion(Region):
    """Axis-parallel rectangle [0, width] x [0, height]; a separable test domain."""

    width: float = 1.0
    height: float = 1.0

    def polygon(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.width, 0.0], [self.width, self.height], [0.0, self.height]])

    def triangulate(self, h: float, refine: int = 1, interface_cells: Optional[int] = None) -> TemplateMesh:
        nodes, triangles = tensor_grid((0.0, 0.0), (self.width, 0.0), (0.0, self.height),
                                       cell_count(self.width, h) * refine, cell_count(self.height, h) * refine)
        return TemplateMesh(nodes, triangles)


@dataclass
class VertexTemplate(Region):
    """
    Vertex region of degree deg in unscaled coordinates.

    Attributes:
        deg: Number of attached edge ends
        l0: Collar length is l0/2
        radius: Circumradius of the polygon core (deg >= 3)
        side: Side length of the polygon core (deg >= 3)
        lambda2: First nonzero Neumann eigenvalue, once computed
        step: Template mesh step used for lambda2
        flags: Warnings from template_constants
    """

    deg: int
    l0: float
    radius: float = 0.0
    side: float = 0.0
    lambda2: Optional[float] = None
    step: Optional[float] = None
    flags: List[str] = field(default_factory=list)

    @property
    def collar(self) -> float:
        return 0.5 * self.l0

    def corners(self) -> np.ndarray:
        """Polygon core vertices P_0 .. P_{deg-1}, counter-clockwise, side 0 at the bottom."""
        phi = 2 * math.pi * np.arange(self.deg) / self.deg - 0.5 * math.pi - math.pi / self.deg
        return self.radius * np.column_stack((np.cos(phi), np.sin(phi)))

    def _side_frame(self, i: int):
        """(Q0, Q1, outward normal) of the unit interface segment centered on side i."""
        corners = self.corners()
        p, q = corners[i], corners[(i + 1) % self.deg]
        a = (self.side - 1.0) / (2.0 * self.side)
        tangent = (q - p) / self.side
        normal = np.array([tangent[1], -tangent[0]])
        return p + a * (q - p), p + (1.0 - a) * (q - p), normal

    def polygon(self) -> np.ndarray:
        if self.deg == 1:
            return np.array([[0.0, 0.0], [1.0 + self.collar, 0.0], [1.0 + self.collar, 1.0], [0.0, 1.0]])
        if self.deg == 2:
            return np.array([[-self.collar, 0.0], [1.0 + self.collar, 0.0],
                             [1.0 + self.collar, 1.0], [-self.collar, 1.0]])
        outline = []
        for i, corner in enumerate(self.corners()):
            q0, q1, normal = self._side_frame(i)
            outline.extend([corner, q0, q0 + self.collar * normal, q1 + self.collar * normal, q1])
        return np.array(outline)

    def triangulate(self, h: float, refine: int = 1, interface_cells: Optional[int] = None) -> TemplateMesh:
        """
        Mesh the template; interfaces[i] lists the n_y + 1 nodes of interface i
        in counter-clockwise boundary order.

        Args:
            h: Mesh step in template coordinates
            refine: Cell-count multiplier
            interface_cells: Base cell count across each interface (default ceil(1/h))
        """
        n_y = (interface_cells if interface_cells is not None else cell_count(1.0, h)) * refine
        if self.deg == 1:
            n_u = cell_count(1.0 + self.collar, h) * refine
            nodes, triangles = tensor_grid((0.0, 0.0), (1.0 + self.collar, 0.0), (0.0, 1.0), n_u, n_y)
            return TemplateMesh(nodes, triangles, [n_u * (n_y + 1) + np.arange(n_y + 1)])
        if self.deg == 2:
            n_u = cell_count(1.0 + 2 * self.collar, h) * refine
            nodes, triangles = tensor_grid((-self.collar, 0.0), (1.0 + 2 * self.collar, 0.0), (0.0, 1.0), n_u, n_y)
            right = n_u * (n_y + 1) + np.arange(n_y + 1)
            left = np.arange(n_y, -1, -1)
            return TemplateMesh(nodes, triangles, [right, left])
        return self._triangulate_polygon(h, refine, n_y)

    def _triangulate_polygon(self, h: float, refine: int, n_y: int) -> TemplateMesh:
        corners = self.corners()
        a = (self.side - 1.0) / (2.0 * self.side)
        n_r = cell_count(self.radius, h) * refine
        n_l = cell_count(self.collar, h) * refine
        # Side parameter grid: outer segments, then the interface segment with n_y cells
        if a * self.side > 1e-12:
            n_a = cell_count(a * self.side, h) * refine
            t = np.concatenate((np.linspace(0.0, a, n_a + 1),
                                np.linspace(a, 1.0 - a, n_y + 1)[1:],
                                np.linspace(1.0 - a, 1.0, n_a + 1)[1:]))
        else:
            t = np.linspace(0.0, 1.0, n_y + 1)
        n_t = t.size - 1

        pieces = []
        for i in range(self.deg):
            p, q = corners[i], corners[(i + 1) % self.deg]
            pieces.append(self._fan(p, q, t, n_r))
        stub_pieces = []
        for i in range(self.deg):
            q0, q1, normal = self._side_frame(i)
            stub_pieces.append(tensor_grid(q0, self.collar * normal, q1 - q0, n_l, n_y))
        nodes, triangles, maps = _merge(pieces + stub_pieces, MERGE_TOL * self.radius)
        interfaces = [maps[self.deg + i][n_l * (n_y + 1) + np.arange(n_y + 1)] for i in range(self.deg)]
        logger.debug(f"VertexTemplate: deg {self.deg} mesh with {nodes.shape[0]} nodes, "
                     f"{triangles.shape[0]} triangles (n_t = {n_t}, n_r = {n_r})")
        return TemplateMesh(nodes, triangles, interfaces)

    @staticmethod
    def _fan(p: np.ndarray, q: np.ndarray, t: np.ndarray, n_r: int) -> Tuple[np.ndarray, np.ndarray]:
        """Sector of the core between the center and side p -> q, as a collapsed grid."""
        n_t = t.size - 1
        side_points = p + t.reshape(-1, 1) * (q - p)
        r = np.arange(1, n_r + 1) / n_r
        ring = (r.reshape(-1, 1, 1) * side_points.reshape(1, -1, 2)).reshape(-1, 2)
        nodes = np.vstack((np.zeros((1, 2)), ring))

        def index(k, m):
            # k = 1 .. n_r ring, m = 0 .. n_t along the side
            return 1 + (k - 1) * (n_t + 1) + m

        m = np.arange(n_t)
        triangles = [np.column_stack((np.zeros(n_t, dtype=int), index(1, m), index(1, m + 1)))]
        for k in range(1, n_r):
            a, b, c, d = index(k, m), index(k + 1, m), index(k + 1, m + 1), index(k, m + 1)
            triangles.append(np.column_stack((a, b, c)))
            triangles.append(np.column_stack((a, c, d)))
        return nodes, np.vstack(triangles)


def build_vertex_template(deg: int, l0: float, constants: bool = True,
                          h: float = TEMPLATE_STEP) -> VertexTemplate:
    """
    Vertex template of degree deg with collars of length l0/2.

    For deg >= 3 the core is a regular deg-gon of circumradius
    max(1, 1/(2 sin(pi/deg))), so every side holds a unit interface.

    Args:
        deg: Vertex degree, at least 1
        l0: Lower bound on edge lengths, in (0, 1]
        constants: Compute vol and lambda2 by template_constants
        h: Template mesh step for the constants

    Raises:
        ValueError: deg < 1 or l0 outside (0, 1]
    """
    if deg < 1:
        raise ValueError(f"build_vertex_template: degree {deg} must be at least 1")
    if not 0 < l0 <= 1:
        raise ValueError(f"build_vertex_template: l0 = {l0} outside (0, 1]")
    if deg <= 2:
        template = VertexTemplate(deg, float(l0))
    else:
        radius = max(1.0, 1.0 / (2.0 * math.sin(math.pi / deg)))
        template = VertexTemplate(deg, float(l0), radius, 2.0 * radius * math.sin(math.pi / deg))
    if constants:
        template_constants(template, h)
    return template


def _lambda2_levels(region: Region, h: float) -> Tuple[float, float]:
    values = []
    for refine in (1, 2):
        A, M = region.triangulate(h, refine).assemble()
        values.append(float(smallest_eigenpairs(A, M, 2)[0][1]))
    return values[0], values[1]


@lru_cache(maxsize=64)
def _cached_levels(kind: str, first: float, second: float, h: float) -> Tuple[float, float]:
    if kind == 'template':
        region = build_vertex_template(int(first), second, constants=False)
    else:
        region = RectangleRegion(first, second)
    return _lambda2_levels(region, h)


def _levels(region: Region, h: float) -> Tuple[float, float]:
    if isinstance(region, VertexTemplate):
        return _cached_levels('template', float(region.deg), region.l0, h)
    if isinstance(region, RectangleRegion):
        return _cached_levels('rectangle', region.width, region.height, h)
    return _lambda2_levels(region, h)


def template_constants(region: Region, h: float = TEMPLATE_STEP) -> Tuple[float, float]:
    """
    Volume and first nonzero Neumann eigenvalue of a template or test region.

    The area is exact (shoelace formula on the outline); lambda2 is the P1
    value on meshes of step h and h/2, Richardson-extrapolated. A relative
    change above TEMPLATE_CHANGE_TOL between the extrapolated and the fine
    value is flagged on VertexTemplate results.

    Returns:
        (vol, lambda2); both are cached on a VertexTemplate
    """
    vol = region.volume
    coarse, fine = _levels(region, h)
    lambda2 = (4.0 * fine - coarse) / 3.0
    change = abs(lambda2 - fine) / abs(lambda2)
    if change > TEMPLATE_CHANGE_TOL:
        message = (f"lambda2 extrapolation not converged: relative change {change:.2e} "
                   f"between h = {h:g} and h/2")
        logger.warning(f"VertexTemplate: {message}")
        if isinstance(region, VertexTemplate):
            region.flags.append(message)
    if isinstance(region, VertexTemplate):
        region.lambda2 = lambda2
        region.step = h
    return vol, lambda2
