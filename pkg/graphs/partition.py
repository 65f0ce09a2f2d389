"""
Interior/exterior split of a non-compact graph for exterior complex scaling.
Each lead is cut at distance one from its vertex.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

from graphs.errors import GraphValidationError
from graphs.metric_graph import Edge, EdgeId, MetricGraph, VertexId, require_valid

CUT_DISTANCE = 1.0


@dataclass(frozen=True)
class CutPoint:
    """Point at distance CUT_DISTANCE along a lead; `label` names it in the interior graph."""

    edge_id: EdgeId
    distance: float
    label: VertexId


@dataclass(frozen=True)
class GraphPartition:
    """
    Interior graph (all vertices, internal edges and the initial unit segment
    of every lead) and one exterior half-line per lead, starting at its cut point.

    The cut points appear as degree-one endpoints of `interior` so that it can
    be discretized like any compact graph, but they are not vertices of the
    original graph (`vertices` lists only those).
    """

    graph: MetricGraph
    interior: MetricGraph
    exterior: Tuple[EdgeId, ...]
    cut_points: Tuple[CutPoint, ...]

    @property
    def vertices(self) -> List[VertexId]:
        return list(self.graph.vertices)

    def cut_for(self, edge_id: EdgeId) -> CutPoint:
        for cut in self.cut_points:
            if cut.edge_id == edge_id:
                return cut
        raise KeyError(f"GraphPartition: no cut point on edge {edge_id!r}")


def split_external(graph: MetricGraph) -> GraphPartition:
    """
    Cut every lead at distance one from its initial vertex.

    Raises:
        GraphValidationError: graph inadmissible or without external edges
    """
    require_valid(graph)
    leads = graph.external_edges
    if not leads:
        raise GraphValidationError("split_external: no external edges")
    taken = set(graph.vertices)
    edges: List[Edge] = list(graph.internal_edges)
    cuts: List[CutPoint] = []
    for e in leads:
        if not math.isinf(e.length):
            raise GraphValidationError(f"split_external: lead {e.id!r} has finite length")
        label = f"cut:{e.id}"
        while label in taken:
            label = label + "'"
        taken.add(label)
        edges.append(Edge(e.id, e.tail, label, CUT_DISTANCE))
        cuts.append(CutPoint(e.id, CUT_DISTANCE, label))
    interior = MetricGraph(list(graph.vertices) + [c.label for c in cuts], edges, graph.d0, graph.l0)
    return GraphPartition(graph, interior, tuple(e.id for e in leads), tuple(cuts))
