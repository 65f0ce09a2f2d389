"""
Metric graph data model.
Holds the combinatorial graph, the edge lengths and the uniformity bounds,
and provides validation, incidence lists and the JSON graph description format.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from graphs.errors import GraphFormatError, GraphValidationError, UnknownVertexError

logger = logging.getLogger(__name__)

VertexId = Hashable
EdgeId = Hashable


@dataclass(frozen=True)
class Edge:
    """
    One edge of a metric graph.

    Internal edges run from `tail` (x = 0) to `head` (x = length). External
    edges (leads) have `head = None` and infinite length; they are half-lines
    starting at `tail`.
    """

    id: EdgeId
    tail: VertexId
    head: Optional[VertexId]
    length: float

    @property
    def is_external(self) -> bool:
        return self.head is None

    @property
    def is_loop(self) -> bool:
        return self.head is not None and self.head == self.tail


@dataclass(frozen=True)
class MetricGraph:
    """
    Finite metric graph (V, E, boundary map, lengths) with the bounds d0, l0.

    Construction does not enforce admissibility; call `validate` (report) or
    `require_valid` (raises) before handing a graph to the solvers.
    """

    vertices: Tuple[VertexId, ...]
    edges: Tuple[Edge, ...]
    d0: int
    l0: float

    def __post_init__(self):
        object.__setattr__(self, 'vertices', tuple(self.vertices))
        object.__setattr__(self, 'edges', tuple(self.edges))

    @property
    def internal_edges(self) -> List[Edge]:
        return [e for e in self.edges if not e.is_external]

    @property
    def external_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.is_external]

    @property
    def is_compact(self) -> bool:
        return not self.external_edges

    @property
    def total_length(self) -> float:
        """Sum of the internal edge lengths."""
        return float(sum(e.length for e in self.internal_edges))

    def vertex_index(self) -> Dict[VertexId, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def edge(self, edge_id: EdgeId) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(f"MetricGraph: unknown edge {edge_id!r}")

    def degree(self, v: VertexId) -> int:
        outgoing, incoming = incidence(self, v)
        return len(outgoing) + len(incoming)

    def scaled(self, s: float) -> 'MetricGraph':
        """
        Return the graph with every length (and l0) multiplied by s.

        Args:
            s: Positive scale factor

        Returns:
            Scaled copy; infinite lengths stay infinite
        """
        if not s > 0:
            raise ValueError("MetricGraph: scale factor must be positive")
        edges = [Edge(e.id, e.tail, e.head, e.length * s) for e in self.edges]
        return MetricGraph(self.vertices, edges, self.d0, self.l0 * s)


@dataclass
class ValidationReport:
    """List of violated admissibility invariants; empty means admissible."""

    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(graph: MetricGraph) -> ValidationReport:
    """
    Check every admissibility invariant of a metric graph.

    Args:
        graph: Graph to check

    Returns:
        ValidationReport listing each violation (never raises for data problems)
    """
    report = ValidationReport()
    vertex_set = set(graph.vertices)

    if len(vertex_set) != len(graph.vertices):
        report.violations.append("duplicate vertex ids")
    if not graph.vertices:
        report.violations.append("graph has no vertices")
    edge_ids = [e.id for e in graph.edges]
    if len(set(edge_ids)) != len(edge_ids):
        report.violations.append("duplicate edge ids")
    if not (isinstance(graph.d0, (int, np.integer)) and graph.d0 >= 1):
        report.violations.append(f"d0 = {graph.d0!r} must be an integer >= 1")
    if not (0 < graph.l0 <= 1):
        report.violations.append(f"l0 = {graph.l0!r} must lie in (0, 1]")

    endpoints_ok = True
    for e in graph.edges:
        if e.tail not in vertex_set:
            report.violations.append(f"edge {e.id!r}: unknown initial vertex {e.tail!r}")
            endpoints_ok = False
        if e.is_external:
            if not math.isinf(e.length):
                report.violations.append(f"edge {e.id!r}: external edge must have infinite length")
            continue
        if e.head not in vertex_set:
            report.violations.append(f"edge {e.id!r}: unknown terminal vertex {e.head!r}")
            endpoints_ok = False
        if not math.isfinite(e.length):
            report.violations.append(f"edge {e.id!r}: internal edge must have finite length")
        elif e.length <= 0:
            report.violations.append(f"edge {e.id!r}: length must be positive")
        elif 0 < graph.l0 and e.length < graph.l0:
            report.violations.append(f"edge {e.id!r}: length < l0 ({e.length} < {graph.l0})")

    if not endpoints_ok or not graph.vertices:
        return report

    for v in graph.vertices:
        deg = graph.degree(v)
        if deg < 1:
            report.violations.append(f"vertex {v!r}: isolated (deg 0)")
        elif isinstance(graph.d0, (int, np.integer)) and deg > graph.d0:
            report.violations.append(f"vertex {v!r}: deg {deg} > d0 = {graph.d0}")

    if not _is_connected(graph):
        report.violations.append("not connected")
    return report


def require_valid(graph: MetricGraph) -> None:
    """Raise GraphValidationError unless the graph is admissible."""
    report = validate(graph)
    if not report.ok:
        raise GraphValidationError(
            "MetricGraph: invalid graph: " + "; ".join(report.violations), report.violations
        )


def _is_connected(graph: MetricGraph) -> bool:
    index = graph.vertex_index()
    rows, cols = [], []
    for e in graph.internal_edges:
        rows.append(index[e.tail])
        cols.append(index[e.head])
    n = len(graph.vertices)
    adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_components, _ = connected_components(adjacency, directed=False)
    return n_components == 1


def incidence(graph: MetricGraph, v: VertexId) -> Tuple[List[EdgeId], List[EdgeId]]:
    """
    Edges starting at v and edges ending at v.

    Args:
        graph: Metric graph
        v: Vertex id

    Returns:
        (outgoing, incoming); a loop at v appears once in each list, a lead
        only in the outgoing list
    """
    if v not in graph.vertices:
        raise UnknownVertexError(f"MetricGraph: unknown vertex {v!r}")
    outgoing = [e.id for e in graph.edges if e.tail == v]
    incoming = [e.id for e in graph.edges if not e.is_external and e.head == v]
    return outgoing, incoming


# Graph description files

def graph_to_dict(graph: MetricGraph) -> dict:
    edges = []
    for e in graph.edges:
        entry = {'id': e.id, 'from': e.tail}
        if e.is_external:
            entry['external'] = True
        else:
            entry['to'] = e.head
        entry['length'] = 'inf' if math.isinf(e.length) else e.length
        edges.append(entry)
    return {'vertices': list(graph.vertices), 'edges': edges, 'd0': graph.d0, 'l0': graph.l0}


def graph_from_dict(data: dict) -> MetricGraph:
    """
    Build a MetricGraph from the JSON description structure.

    Raises:
        GraphFormatError: Missing keys or values of the wrong type; the
            message names the JSON path of the offending entry
    """
    path = 'vertices'
    try:
        vertices = [_hashable(v, path) for v in data['vertices']]
        edges = []
        path = 'edges'
        for i, raw in enumerate(data['edges']):
            path = f"edges[{i}]"
            length = raw['length']
            if isinstance(length, str):
                if length.strip().lower() not in ('inf', '+inf', 'infinity'):
                    raise GraphFormatError(f"{path}.length: bad length {length!r}")
                length = math.inf
            elif isinstance(length, bool) or not isinstance(length, (int, float)):
                raise GraphFormatError(f"{path}.length: bad length {length!r}")
            head = None if raw.get('external', False) else _hashable(raw['to'], f"{path}.to")
            edges.append(Edge(_hashable(raw['id'], f"{path}.id"), _hashable(raw['from'], f"{path}.from"),
                              head, float(length)))
        path = 'd0'
        d0 = data['d0']
        if isinstance(d0, bool) or not isinstance(d0, int):
            raise GraphFormatError(f"d0: must be an integer, got {d0!r}")
        path = 'l0'
        return MetricGraph(vertices, edges, d0, float(data['l0']))
    except GraphFormatError:
        raise
    except KeyError as e:
        raise GraphFormatError(f"{path}: missing key {e.args[0]!r}") from e
    except (TypeError, ValueError, AttributeError) as e:
        raise GraphFormatError(f"{path}: malformed entry ({e})") from e


def _hashable(value, path: str):
    if isinstance(value, (list, dict)):
        raise GraphFormatError(f"{path}: ids must be strings or numbers, got {value!r}")
    return value


def loads_graph(text: str) -> MetricGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e
    if not isinstance(data, dict):
        raise GraphFormatError("graph description must be a JSON object", line=1, column=1)
    return graph_from_dict(data)


def load_graph(path: str) -> MetricGraph:
    """
    Load a graph description file.

    Args:
        path: JSON file path

    Returns:
        MetricGraph (not yet validated)
    """
    with open(path, 'r', encoding='utf-8') as f:
        graph = loads_graph(f.read())
    logger.debug(f"MetricGraph: loaded {path} ({len(graph.vertices)} vertices, {len(graph.edges)} edges)")
    return graph


def dumps_graph(graph: MetricGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2)


def save_graph(graph: MetricGraph, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_graph(graph))
        f.write('\n')


def graph_hash(graph: MetricGraph) -> str:
    """SHA-256 of the canonical JSON description."""
    canonical = json.dumps(graph_to_dict(graph), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
