"""
Secular equation for the free Laplacian on metric graphs.

On every internal edge an eigenfunction is f_e(x) = a_e cos kx + b_e sin kx;
on a lead it is c_e exp(ikx). Each vertex contributes (deg - 1) continuity
rows and one Kirchhoff row (outward derivatives divided by k). lambda = k^2
is an eigenvalue (or, with leads, a resonance) iff M(k) has a kernel.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from graphs.errors import GraphValidationError
from graphs.graph_config import (COLLISION_FACTOR, DEFAULT_SAMPLES_PER_UNIT, MULTIPLICITY_REL_TOL,
                                 ROOT_BOUNDARY_SLACK, ROOT_XTOL, SCAN_FACTOR, THREADS)
from graphs.graph_function import GraphFunction, cells_for
from graphs.metric_graph import MetricGraph, require_valid
from graphs.spectral_result import SpectralResult

logger = logging.getLogger(__name__)

# Endpoint kinds
TAIL, HEAD, LEAD = 0, 1, 2


@dataclass(frozen=True)
class SecularSystem:
    """
    Precomputed row structure of the secular matrix.

    Columns: (a_e, b_e) for each internal edge in graph order, then c_e for
    each lead. `rows` lists, per matrix row, the (edge slot, endpoint kind,
    quantity, sign) terms, quantity being 'value' or 'flux'.
    """

    graph: MetricGraph
    lengths: np.ndarray
    n_internal: int
    n_leads: int
    rows: Tuple[Tuple[Tuple[int, int, str, float], ...], ...]

    @property
    def size(self) -> int:
        return 2 * self.n_internal + self.n_leads

    def matrices(self, ks) -> np.ndarray:
        """Secular matrices for an array of k values, shape (len(ks), n, n)."""
        ks = np.atleast_1d(np.asarray(ks, dtype=complex))
        out = np.zeros((ks.size, self.size, self.size), dtype=complex)
        cos = np.cos(np.outer(ks, self.lengths))
        sin = np.sin(np.outer(ks, self.lengths))
        for r, terms in enumerate(self.rows):
            for slot, kind, quantity, sign in terms:
                if kind == LEAD:
                    col = 2 * self.n_internal + slot
                    out[:, r, col] += sign * (1.0 if quantity == 'value' else 1j)
                    continue
                a, b = 2 * slot, 2 * slot + 1
                if kind == TAIL:
                    if quantity == 'value':
                        out[:, r, a] += sign
                    else:
                        out[:, r, b] += sign
                elif quantity == 'value':
                    out[:, r, a] += sign * cos[:, slot]
                    out[:, r, b] += sign * sin[:, slot]
                else:
                    out[:, r, a] += sign * sin[:, slot]
                    out[:, r, b] -= sign * cos[:, slot]
        return out

    def matrix(self, k: complex) -> np.ndarray:
        return self.matrices([k])[0]

    def derivative(self, k: complex) -> np.ndarray:
        """dM/dk; only the head-endpoint entries depend on k."""
        out = np.zeros((self.size, self.size), dtype=complex)
        cos = np.cos(k * self.lengths)
        sin = np.sin(k * self.lengths)
        for r, terms in enumerate(self.rows):
            for slot, kind, quantity, sign in terms:
                if kind != HEAD:
                    continue
                length = self.lengths[slot]
                a, b = 2 * slot, 2 * slot + 1
                if quantity == 'value':
                    out[r, a] -= sign * length * sin[slot]
                    out[r, b] += sign * length * cos[slot]
                else:
                    out[r, a] += sign * length * cos[slot]
                    out[r, b] += sign * length * sin[slot]
        return out


def build_secular_system(graph: MetricGraph, allow_leads: bool = False) -> SecularSystem:
    """
    Row structure of the secular matrix of a graph.

    Args:
        graph: Admissible graph
        allow_leads: Accept external edges (outgoing amplitudes)
    """
    require_valid(graph)
    if graph.external_edges and not allow_leads:
        raise GraphValidationError("secular: graph must be compact")
    internal = graph.internal_edges
    slot = {e.id: i for i, e in enumerate(internal)}
    lead_slot = {e.id: i for i, e in enumerate(graph.external_edges)}

    rows = []
    for v in graph.vertices:
        endpoints = []
        for e in graph.edges:
            if e.is_external:
                if e.tail == v:
                    endpoints.append((lead_slot[e.id], LEAD))
                continue
            if e.tail == v:
                endpoints.append((slot[e.id], TAIL))
            if e.head == v:
                endpoints.append((slot[e.id], HEAD))
        first = endpoints[0]
        for other in endpoints[1:]:
            rows.append(((other[0], other[1], 'value', 1.0), (first[0], first[1], 'value', -1.0)))
        rows.append(tuple((s, kind, 'flux', 1.0) for s, kind in endpoints))

    lengths = np.array([e.length for e in internal], dtype=float)
    return SecularSystem(graph, lengths, len(internal), len(lead_slot), tuple(rows))


def secular_matrix(graph: MetricGraph, k: complex) -> np.ndarray:
    """
    Secular matrix M(k) of a compact graph, size 2|E|.

    Raises:
        ValueError: k = 0 (the trigonometric ansatz degenerates)
        GraphValidationError: graph not compact or inadmissible
    """
    if k == 0:
        raise ValueError("secular_matrix: k = 0 is handled analytically (constants)")
    return build_secular_system(graph).matrix(k)


def _sigma_min(system: SecularSystem, ks: np.ndarray) -> np.ndarray:
    return np.linalg.svd(system.matrices(ks), compute_uv=False)[:, -1]


def _scan(system: SecularSystem, ks: np.ndarray, threads: int) -> np.ndarray:
    """sigma_min over a k grid, chunked over a thread pool; order preserved."""
    threads = max(1, threads)
    chunks = np.array_split(ks, threads * 4) if threads > 1 else [ks]
    if threads == 1:
        return _sigma_min(system, ks)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda chunk: _sigma_min(system, chunk), [c for c in chunks if c.size]))
    return np.concatenate(parts)


def _refine_root(system: SecularSystem, a: float, b: float, c: float) -> float:
    objective = lambda k: float(_sigma_min(system, np.array([k]))[0])
    try:
        result = minimize_scalar(objective, bracket=(a, b, c), method='golden',
                                 options={'xtol': ROOT_XTOL / max(b, 1.0), 'maxiter': 10000})
    except ValueError:
        # Flat or non-bracketing triple; fall back to a bounded search
        result = minimize_scalar(objective, bounds=(a, c), method='bounded',
                                 options={'xatol': ROOT_XTOL, 'maxiter': 10000})
    return float(result.x)


def _kernel_mask(s: np.ndarray, rel_tol: float = MULTIPLICITY_REL_TOL) -> np.ndarray:
    # Entries are O(1); on a single loop the whole matrix vanishes at a root
    return s <= rel_tol * max(1.0, float(s[0]))


def kernel_dimension(matrix: np.ndarray, rel_tol: float = MULTIPLICITY_REL_TOL) -> int:
    s = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(_kernel_mask(s, rel_tol)))


def eigenvalues(graph: MetricGraph, lambda_max: float, threads: Optional[int] = None,
                scan_factor: float = SCAN_FACTOR) -> SpectralResult:
    """
    All eigenvalues in [0, lambda_max] of a compact graph.

    Scans sigma_min(M(k)) on a grid of step pi/(scan_factor * total length),
    refines each local minimum by golden-section search and counts the kernel
    dimension at the refined root. lambda = 0 (constants) is prepended.

    Args:
        graph: Compact admissible graph
        lambda_max: Upper end of the window, positive
        threads: Worker threads for the scan (default THREADS)
        scan_factor: Scan refinement factor

    Returns:
        SpectralResult with method 'secular'; colliding roots are flagged
    """
    if not lambda_max > 0:
        raise ValueError("eigenvalues: lambda_max must be positive")
    system = build_secular_system(graph)
    k_max = math.sqrt(lambda_max)
    dk = math.pi / (scan_factor * graph.total_length)
    ks = dk * np.arange(1, math.ceil(k_max / dk) + 2)
    sigma = _scan(system, ks, THREADS if threads is None else threads)

    roots: List[Tuple[float, int]] = []
    flags: List[str] = []
    for i in range(1, ks.size - 1):
        if not (sigma[i] < sigma[i - 1] and sigma[i] <= sigma[i + 1]):
            continue
        k_star = _refine_root(system, ks[i - 1], ks[i], ks[i + 1])
        s = np.linalg.svd(system.matrix(k_star), compute_uv=False)
        multiplicity = int(np.sum(_kernel_mask(s)))
        if multiplicity == 0 or k_star > k_max * (1.0 + ROOT_BOUNDARY_SLACK):
            continue
        if roots and abs(k_star - roots[-1][0]) <= COLLISION_FACTOR * ROOT_XTOL:
            flags.append(f"roots collided near k = {k_star:.12g}; scan step too coarse")
            logger.warning(f"SecularSolver: roots collided near k = {k_star:.12g}, scan step too coarse")
            roots[-1] = (roots[-1][0], max(roots[-1][1], multiplicity))
            continue
        roots.append((k_star, multiplicity))

    logger.debug(f"SecularSolver: refined {len(roots)} roots below k = {k_max:.6g}")
    spectrum = [(0.0, 1)] + [(k * k, m) for k, m in roots]
    return SpectralResult(spectrum, 'secular', flags=flags)


def _edge_gram(k: float, length: float) -> np.ndarray:
    """L2 Gram matrix of (cos kx, sin kx) on [0, length]."""
    cc = length / 2 + math.sin(2 * k * length) / (4 * k)
    ss = length / 2 - math.sin(2 * k * length) / (4 * k)
    cs = math.sin(k * length) ** 2 / (2 * k)
    return np.array([[cc, cs], [cs, ss]])


def eigenfunction(graph: MetricGraph, k: float, index: int = 0,
                  samples_per_unit: int = DEFAULT_SAMPLES_PER_UNIT) -> GraphFunction:
    """
    Normalized eigenfunction for a refined secular root.

    The kernel of M(k) is orthonormalized in L2(graph) with the exact Gram
    matrix of the ansatz, so kernel vectors of a multiple root give an
    orthonormal family; the sign makes the first significant coefficient positive.

    Args:
        graph: Compact admissible graph
        k: Refined root (k = 0 gives the normalized constant)
        index: Which kernel vector, 0 <= index < multiplicity
        samples_per_unit: Grid cells per unit length

    Returns:
        GraphFunction with exact derivative samples, ||f|| = 1
    """
    system = build_secular_system(graph)
    if k == 0:
        if index != 0:
            raise ValueError("eigenfunction: index exceeds multiplicity 1 of lambda = 0")
        return GraphFunction.constant(graph, 1.0 / math.sqrt(graph.total_length), samples_per_unit)

    _, s, vh = np.linalg.svd(system.matrix(k))
    kernel = np.real(vh[_kernel_mask(s)].conj().T)
    multiplicity = kernel.shape[1]
    if not 0 <= index < multiplicity:
        raise ValueError(f"eigenfunction: index {index} exceeds multiplicity {multiplicity} at k = {k}")

    gram_blocks = [_edge_gram(k, length) for length in system.lengths]
    gram = scipy.linalg.block_diag(*gram_blocks)
    factor = scipy.linalg.cholesky(kernel.T @ gram @ kernel, lower=True)
    basis = scipy.linalg.solve_triangular(factor, kernel.T, lower=True).T
    coefficients = basis[:, index]
    significant = np.flatnonzero(np.abs(coefficients) > 1e-8 * np.max(np.abs(coefficients)))
    if coefficients[significant[0]] < 0:
        coefficients = -coefficients

    values, derivatives = {}, {}
    for slot, e in enumerate(graph.internal_edges):
        a, b = coefficients[2 * slot], coefficients[2 * slot + 1]
        x = np.linspace(0.0, e.length, cells_for(e.length, samples_per_unit) + 1)
        values[e.id] = a * np.cos(k * x) + b * np.sin(k * x)
        derivatives[e.id] = k * (-a * np.sin(k * x) + b * np.cos(k * x))
    return GraphFunction(graph, values, derivatives=derivatives)


def weyl_count(graph: MetricGraph, lambda_max: float) -> float:
    """Leading Weyl term sqrt(lambda_max) * total length / pi."""
    return math.sqrt(lambda_max) * graph.total_length / math.pi
