"""
Outgoing-wave secular matrix for graphs with leads.
Leads carry c_e exp(ikx); resonances and embedded eigenvalues are the k
where S(k) has a kernel.
"""

import numpy as np

from graphs.errors import GraphValidationError
from graphs.metric_graph import MetricGraph
from graphs.secular import SecularSystem, build_secular_system


def outgoing_system(graph: MetricGraph) -> SecularSystem:
    """Secular structure with outgoing lead amplitudes; compact graphs are rejected."""
    if not graph.external_edges:
        raise GraphValidationError("outgoing_secular: graph has no leads")
    return build_secular_system(graph, allow_leads=True)


def outgoing_secular(graph: MetricGraph, k: complex) -> np.ndarray:
    """
    S(k) of size 2|E_int| + |E_ext|.

    Raises:
        ValueError: k = 0
        GraphValidationError: compact or inadmissible graph
    """
    if k == 0:
        raise ValueError("outgoing_secular: k = 0 rejected")
    return outgoing_system(graph).matrix(k)


def log_derivative(system: SecularSystem, ks) -> np.ndarray:
    """d/dk log det S(k) = tr(S^{-1} S') for an array of k values."""
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    matrices = system.matrices(ks)
    derivatives = np.stack([system.derivative(k) for k in ks])
    return np.trace(np.linalg.solve(matrices, derivatives), axis1=1, axis2=2)


def reflection_partner(k: complex) -> complex:
    """Roots of a real-length graph come in pairs k, -conj(k)."""
    return -np.conj(k)
