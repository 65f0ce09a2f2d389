"""
Standard metric graphs used by the tests, the CLI and the convergence studies.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from graphs.metric_graph import Edge, MetricGraph


def unit_loop(length: float = 1.0) -> MetricGraph:
    """One vertex with a single loop edge."""
    return MetricGraph(['v'], [Edge('e', 'v', 'v', length)], d0=2, l0=min(1.0, length))


def unit_interval(length: float = 1.0) -> MetricGraph:
    """Two vertices joined by one edge (Neumann interval)."""
    return MetricGraph(['a', 'b'], [Edge('e', 'a', 'b', length)], d0=1, l0=min(1.0, length))


def star(n: int = 3, lengths: Optional[Sequence[float]] = None) -> MetricGraph:
    """
    Star graph with edges oriented away from the center.

    Args:
        n: Number of arms
        lengths: Arm lengths (default all 1)
    """
    if n < 1:
        raise ValueError("star: need at least one arm")
    lengths = [1.0] * n if lengths is None else [float(x) for x in lengths]
    if len(lengths) != n:
        raise ValueError("star: one length per arm required")
    vertices = ['c'] + [f'p{i}' for i in range(n)]
    edges = [Edge(f'e{i}', 'c', f'p{i}', lengths[i]) for i in range(n)]
    return MetricGraph(vertices, edges, d0=n, l0=min(1.0, min(lengths)))


def loop_with_lead(length: float = 1.0) -> MetricGraph:
    """Loop of the given length with one half-line attached at its vertex."""
    edges = [Edge('loop', 'v', 'v', length), Edge('lead', 'v', None, math.inf)]
    return MetricGraph(['v'], edges, d0=3, l0=min(1.0, length))


def leads_from_vertex(n: int = 2) -> MetricGraph:
    """n half-lines meeting at a single vertex."""
    edges = [Edge(f'lead{i}', 'v', None, math.inf) for i in range(n)]
    return MetricGraph(['v'], edges, d0=max(n, 1), l0=1.0)


def single_lead() -> MetricGraph:
    """One half-line with a free end at its vertex."""
    return leads_from_vertex(1)


def random_compact_graph(seed: int,
                         n_vertices: int = 4,
                         n_edges: int = 5,
                         length_range: Tuple[float, float] = (1.0, 2.0)) -> MetricGraph:
    """
    Random connected compact graph: a random spanning tree plus extra edges.

    Extra edges may be loops or parallel edges. Lengths are drawn uniformly
    from `length_range`; l0 is the lower end of that range (capped at 1).

    Args:
        seed: Seed for numpy.random.default_rng
        n_vertices: Number of vertices
        n_edges: Number of edges (at least n_vertices - 1)
        length_range: (low, high) for the edge lengths
    """
    if n_edges < n_vertices - 1:
        raise ValueError("random_compact_graph: too few edges for a connected graph")
    rng = np.random.default_rng(seed)
    vertices = [f'v{i}' for i in range(n_vertices)]
    low, high = length_range
    pairs = []
    order = rng.permutation(n_vertices)
    for i in range(1, n_vertices):
        parent = order[rng.integers(0, i)]
        pairs.append((int(parent), int(order[i])))
    while len(pairs) < n_edges:
        a, b = rng.integers(0, n_vertices, size=2)
        pairs.append((int(a), int(b)))
    edges = [
        Edge(f'e{j}', vertices[a], vertices[b], float(rng.uniform(low, high)))
        for j, (a, b) in enumerate(pairs)
    ]
    graph = MetricGraph(vertices, edges, d0=1, l0=min(1.0, low))
    d0 = max(graph.degree(v) for v in vertices)
    return MetricGraph(vertices, edges, d0=d0, l0=min(1.0, low))
