"""
Functions on metric graphs, sampled on uniform per-edge grids.
Continuity at the vertices is part of the representation: every edge endpoint
sample equals the stored vertex value.
"""

import logging
import math
from typing import Callable, Dict, Optional

import numpy as np
from scipy.integrate import trapezoid

from graphs.errors import GraphValidationError
from graphs.graph_config import CONTINUITY_TOL, DEFAULT_SAMPLES_PER_UNIT, SNAP_TOL
from graphs.metric_graph import EdgeId, MetricGraph, VertexId

logger = logging.getLogger(__name__)


class GraphFunction:
    """
    Function on the internal edges of a metric graph with shared vertex values.

    values[e] holds samples on the grid linspace(0, length_e, n_e + 1);
    derivatives[e], when present, holds exact derivative samples on the same grid.
    """

    def __init__(self,
                 graph: MetricGraph,
                 values: Dict[EdgeId, np.ndarray],
                 vertex_values: Optional[Dict[VertexId, complex]] = None,
                 derivatives: Optional[Dict[EdgeId, np.ndarray]] = None,
                 snap: bool = True):
        """
        Args:
            graph: Graph the function lives on (only internal edges are sampled)
            values: Samples per internal edge, endpoints included
            vertex_values: Value at each vertex; averaged from the endpoint samples if omitted
            derivatives: Optional exact derivative samples per edge
            snap: Overwrite endpoint samples that differ from the vertex value by at most SNAP_TOL
        """
        self.graph = graph
        self.values: Dict[EdgeId, np.ndarray] = {}
        for e in graph.internal_edges:
            if e.id not in values:
                raise GraphValidationError(f"GraphFunction: no samples for edge {e.id!r}")
            samples = np.array(values[e.id])
            if samples.ndim != 1 or samples.size < 2:
                raise GraphValidationError(f"GraphFunction: edge {e.id!r} needs at least two samples")
            self.values[e.id] = samples
        self.derivatives = None
        if derivatives is not None:
            self.derivatives = {eid: np.array(d) for eid, d in derivatives.items()}

        if vertex_values is None:
            vertex_values = self._average_endpoints()
        self.vertex_values: Dict[VertexId, complex] = dict(vertex_values)
        if snap:
            self._snap_endpoints()
        self._check_continuity()

    # Construction helpers

    @classmethod
    def from_callables(cls,
                       graph: MetricGraph,
                       funcs: Dict[EdgeId, Callable[[np.ndarray], np.ndarray]],
                       samples_per_unit: int = DEFAULT_SAMPLES_PER_UNIT,
                       derivative_funcs: Optional[Dict[EdgeId, Callable]] = None) -> 'GraphFunction':
        """
        Sample edge functions f_e(x), x in [0, length_e].

        Args:
            graph: Compact graph
            funcs: Callable per internal edge
            samples_per_unit: Grid cells per unit length (rounded up per edge)
            derivative_funcs: Optional exact derivatives per edge
        """
        values, derivatives = {}, {} if derivative_funcs is not None else None
        for e in graph.internal_edges:
            x = np.linspace(0.0, e.length, cells_for(e.length, samples_per_unit) + 1)
            values[e.id] = np.asarray(funcs[e.id](x))
            if derivative_funcs is not None:
                derivatives[e.id] = np.asarray(derivative_funcs[e.id](x))
        return cls(graph, values, derivatives=derivatives)

    @classmethod
    def constant(cls, graph: MetricGraph, c: complex = 1.0,
                 samples_per_unit: int = DEFAULT_SAMPLES_PER_UNIT) -> 'GraphFunction':
        values, derivatives = {}, {}
        for e in graph.internal_edges:
            n = cells_for(e.length, samples_per_unit)
            values[e.id] = np.full(n + 1, c)
            derivatives[e.id] = np.zeros(n + 1)
        return cls(graph, values, {v: c for v in graph.vertices}, derivatives)

    # Grid access

    def cells(self, edge_id: EdgeId) -> int:
        return self.values[edge_id].size - 1

    def step(self, edge_id: EdgeId) -> float:
        return self.graph.edge(edge_id).length / self.cells(edge_id)

    def grid(self, edge_id: EdgeId) -> np.ndarray:
        return np.linspace(0.0, self.graph.edge(edge_id).length, self.cells(edge_id) + 1)

    def evaluate(self, edge_id: EdgeId, x) -> np.ndarray:
        """Piecewise-linear interpolation of the samples of one edge."""
        grid, samples = self.grid(edge_id), self.values[edge_id]
        if np.iscomplexobj(samples):
            return np.interp(x, grid, samples.real) + 1j * np.interp(x, grid, samples.imag)
        return np.interp(x, grid, samples)

    def derivative(self, edge_id: EdgeId) -> np.ndarray:
        """Exact derivative samples if stored, centered differences otherwise."""
        if self.derivatives is not None and edge_id in self.derivatives:
            return self.derivatives[edge_id]
        samples = self.values[edge_id]
        if samples.size < 3:
            return np.gradient(samples, self.step(edge_id))
        return np.gradient(samples, self.step(edge_id), edge_order=2)

    @property
    def is_complex(self) -> bool:
        return any(np.iscomplexobj(v) for v in self.values.values())

    # Arithmetic (same grids required)

    def _combine(self, other: 'GraphFunction', op) -> 'GraphFunction':
        for eid, samples in self.values.items():
            if other.values[eid].shape != samples.shape:
                raise GraphValidationError(f"GraphFunction: grid mismatch on edge {eid!r}")
        values = {eid: op(s, other.values[eid]) for eid, s in self.values.items()}
        vertex_values = {v: op(c, other.vertex_values[v]) for v, c in self.vertex_values.items()}
        derivatives = None
        if self.derivatives is not None and other.derivatives is not None:
            derivatives = {eid: op(d, other.derivatives[eid]) for eid, d in self.derivatives.items()}
        return GraphFunction(self.graph, values, vertex_values, derivatives, snap=False)

    def __add__(self, other: 'GraphFunction') -> 'GraphFunction':
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other: 'GraphFunction') -> 'GraphFunction':
        return self._combine(other, lambda a, b: a - b)

    def scaled(self, c: complex) -> 'GraphFunction':
        derivatives = None
        if self.derivatives is not None:
            derivatives = {eid: c * d for eid, d in self.derivatives.items()}
        return GraphFunction(self.graph,
                             {eid: c * s for eid, s in self.values.items()},
                             {v: c * x for v, x in self.vertex_values.items()},
                             derivatives, snap=False)

    # Norms

    def norm_sq(self) -> float:
        """L2 norm squared by composite trapezoid quadrature."""
        return float(sum(trapezoid(np.abs(s) ** 2, dx=self.step(eid)) for eid, s in self.values.items()))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def inner(self, other: 'GraphFunction') -> complex:
        """L2 inner product <self, other>, conjugate-linear in the second slot."""
        total = 0.0
        for eid, s in self.values.items():
            total += trapezoid(s * np.conj(other.values[eid]), dx=self.step(eid))
        return total

    def derivative_norm_sq(self) -> float:
        return float(sum(trapezoid(np.abs(self.derivative(eid)) ** 2, dx=self.step(eid))
                         for eid in self.values))

    # Invariants

    def _average_endpoints(self) -> Dict[VertexId, complex]:
        sums: Dict[VertexId, list] = {v: [] for v in self.graph.vertices}
        for e in self.graph.internal_edges:
            sums[e.tail].append(self.values[e.id][0])
            sums[e.head].append(self.values[e.id][-1])
        return {v: (np.mean(s) if s else 0.0) for v, s in sums.items()}

    def _scale(self) -> float:
        peak = max((float(np.max(np.abs(s))) for s in self.values.values()), default=0.0)
        return max(1.0, peak)

    def _snap_endpoints(self) -> None:
        limit = SNAP_TOL * self._scale()
        for e in self.graph.internal_edges:
            samples = self.values[e.id]
            for position, v in ((0, e.tail), (-1, e.head)):
                if np.iscomplexobj(self.vertex_values[v]) and not np.iscomplexobj(samples):
                    samples = samples.astype(complex)
                    self.values[e.id] = samples
                mismatch = abs(samples[position] - self.vertex_values[v])
                if mismatch > limit:
                    raise GraphValidationError(
                        f"GraphFunction: discontinuous at vertex {v!r} on edge {e.id!r} "
                        f"(mismatch {mismatch:.3e})"
                    )
                samples[position] = self.vertex_values[v]

    def _check_continuity(self) -> None:
        limit = CONTINUITY_TOL * self._scale()
        for e in self.graph.internal_edges:
            samples = self.values[e.id]
            if (abs(samples[0] - self.vertex_values[e.tail]) > limit
                    or abs(samples[-1] - self.vertex_values[e.head]) > limit):
                raise GraphValidationError(f"GraphFunction: not continuous at the ends of edge {e.id!r}")


def cells_for(length: float, per_unit: float) -> int:
    """Number of uniform cells of size at most 1/per_unit on an edge."""
    return max(1, math.ceil(length * per_unit - 1e-9))


def h1_norm_sq(f: GraphFunction) -> float:
    """||f||^2 + sum_e ||f_e'||^2 (trapezoid quadrature)."""
    return f.norm_sq() + f.derivative_norm_sq()


def rayleigh(f: GraphFunction, quadrature: str = 'trapezoid') -> float:
    """
    Rayleigh quotient sum_e ||f_e'||^2 / ||f||^2 of the free Laplacian.

    Args:
        f: Continuous graph function
        quadrature: 'trapezoid' (composite trapezoid on the samples, exact
            derivative samples when stored) or 'p1' (exact integrals of the
            piecewise-linear interpolant, identical to f^T A f / f^T M f)

    Returns:
        Rayleigh quotient

    Raises:
        ValueError: f is the zero function
    """
    if quadrature == 'trapezoid':
        numerator, denominator = f.derivative_norm_sq(), f.norm_sq()
    elif quadrature == 'p1':
        numerator, denominator = 0.0, 0.0
        for eid, s in f.values.items():
            h = f.step(eid)
            left, right = s[:-1], s[1:]
            numerator += float(np.sum(np.abs(right - left) ** 2)) / h
            denominator += float(np.sum(np.abs(left) ** 2 + np.real(left * np.conj(right))
                                        + np.abs(right) ** 2)) * h / 3.0
    else:
        raise ValueError(f"rayleigh: unknown quadrature {quadrature!r}")
    if denominator == 0.0:
        raise ValueError("rayleigh: zero function has no Rayleigh quotient")
    return numerator / denominator
