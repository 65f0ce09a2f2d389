"""
Generalized symmetric eigensolver shared by the graph oracle and the manifold FEM.
Solves A x = lambda M x for the lowest part of the spectrum by shift-invert Lanczos.
"""

import logging
from typing import List, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from graphs.errors import SolverConvergenceError
from graphs.graph_config import DENSE_LIMIT, EIGEN_SEED, EIGSH_TOL, SHIFT

logger = logging.getLogger(__name__)


def smallest_eigenpairs(A, M, count: int, sigma: float = SHIFT,
                        seed: int = EIGEN_SEED, tol: float = EIGSH_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lowest `count` eigenpairs of the pencil (A, M), eigenvectors M-orthonormal.

    Args:
        A: Symmetric positive semi-definite matrix (sparse or dense)
        M: Symmetric positive definite matrix
        count: Number of eigenpairs
        sigma: Shift with A - sigma*M positive definite
        seed: Seed of the deterministic start vector
        tol: ARPACK tolerance

    Returns:
        (eigenvalues ascending, eigenvectors as columns)
    """
    n = A.shape[0]
    count = min(count, n)
    if n <= DENSE_LIMIT or count >= n - 1:
        dense_a = A.toarray() if sparse.issparse(A) else np.asarray(A)
        dense_m = M.toarray() if sparse.issparse(M) else np.asarray(M)
        values, vectors = scipy.linalg.eigh(dense_a, dense_m, subset_by_index=[0, count - 1])
        return values, vectors

    # Factor once, hand ARPACK the inverse as an operator
    lu = splu(sparse.csc_matrix(A - sigma * M))
    op_inv = LinearOperator(matvec=lu.solve, shape=A.shape, dtype=A.dtype)
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        values, vectors = eigsh(A, count, M, sigma=sigma, which='LM', OPinv=op_inv, v0=v0, tol=tol)
    except ArpackNoConvergence as e:
        raise SolverConvergenceError(f"Eigensolver: ARPACK did not converge for {count} pairs") from e
    order = np.argsort(values)
    return values[order], vectors[:, order]


def eigenpairs_below(A, M, limit: float, initial: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """
    All eigenpairs with eigenvalue <= limit.

    The requested count doubles until the largest computed eigenvalue exceeds
    the limit (or the whole spectrum is computed).
    """
    n = A.shape[0]
    count = max(1, min(initial, n))
    while True:
        values, vectors = smallest_eigenpairs(A, M, count)
        if values[-1] > limit or count >= n:
            break
        count = min(2 * count, n)
        logger.debug(f"Eigensolver: spectrum below {limit:g} incomplete, requesting {count} pairs")
    keep = values <= limit
    return values[keep], vectors[:, keep]


def residuals(A, M, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Relative residuals ||A x - lambda M x|| / ((1 + |lambda|) ||x||_M) per eigenpair."""
    ax = A @ vectors
    mx = M @ vectors
    numerator = np.linalg.norm(ax - mx * values, axis=0)
    m_norm = np.sqrt(np.abs(np.sum(np.conj(vectors) * mx, axis=0)))
    return numerator / ((1.0 + np.abs(values)) * m_norm)


def group_multiplicities(values, rel_tol: float, abs_tol: float = 1e-10) -> List[Tuple[float, int]]:
    """
    Cluster sorted eigenvalues into (value, multiplicity) pairs.

    Consecutive values closer than abs_tol + rel_tol*|value| join one cluster;
    the cluster value is its mean.
    """
    values = np.sort(np.asarray(values, dtype=float))
    groups: List[List[float]] = []
    for value in values:
        if groups and abs(value - groups[-1][-1]) <= abs_tol + rel_tol * max(abs(value), 1.0):
            groups[-1].append(value)
        else:
            groups.append([value])
    return [(float(np.mean(g)), len(g)) for g in groups]
