"""
Linear finite elements on planar triangle meshes.

Stiffness and mass of the Neumann Laplacian; the natural boundary condition
needs no extra terms.
"""

import sys
from typing import Tuple

import numpy as np
from scipy import sparse


def triangle_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Unsigned area of each triangle."""
    v1, v2, v3 = (nodes[triangles[:, i]] for i in range(3))
    cr = _cross(v3 - v2, v1 - v3)
    return 0.5 * np.abs(cr)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def assemble_p1(nodes: np.ndarray, triangles: np.ndarray) -> Tuple[sparse.csc_matrix, sparse.csc_matrix]:
    """
    Assemble P1 stiffness and mass matrices.

    Off-diagonal stiffness entries are the negative half-cotangents of the
    opposite angles; diagonals follow from the zero row sum, so constants lie
    in the kernel to rounding.

    Args:
        nodes: (n, 2) node coordinates
        triangles: (m, 3) node indices per triangle

    Returns:
        (A, B) sparse symmetric matrices in CSC format; A is positive
        semi-definite, B positive definite
    """
    n = nodes.shape[0]
    t1, t2, t3 = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    v1, v2, v3 = nodes[t1], nodes[t2], nodes[t3]
    v2mv1 = v2 - v1
    v3mv2 = v3 - v2
    v1mv3 = v1 - v3
    # 4 * area per triangle
    vol = 2 * np.abs(_cross(v3mv2, v1mv3))
    if np.any(vol < sys.float_info.epsilon):
        raise ValueError("assemble_p1: degenerate triangle in mesh")
    a12 = np.sum(v3mv2 * v1mv3, axis=1) / vol
    a23 = np.sum(v1mv3 * v2mv1, axis=1) / vol
    a31 = np.sum(v2mv1 * v3mv2, axis=1) / vol
    a11 = -a12 - a31
    a22 = -a12 - a23
    a33 = -a31 - a23
    local_a = np.column_stack((a12, a12, a23, a23, a31, a31, a11, a22, a33)).reshape(-1)
    i = np.column_stack((t1, t2, t2, t3, t3, t1, t1, t2, t3)).reshape(-1)
    j = np.column_stack((t2, t1, t3, t2, t1, t3, t1, t2, t3)).reshape(-1)
    a = sparse.csc_matrix((local_a, (i, j)), shape=(n, n))

    b_ii = vol / 24
    b_ij = vol / 48
    local_b = np.column_stack((b_ij, b_ij, b_ij, b_ij, b_ij, b_ij, b_ii, b_ii, b_ii)).reshape(-1)
    b = sparse.csc_matrix((local_b, (i, j)), shape=(n, n))
    return a, b


def p1_integral(nodes: np.ndarray, triangles: np.ndarray, values: np.ndarray) -> float:
    """Exact integral of the P1 interpolant of `values`."""
    areas = triangle_areas(nodes, triangles)
    return float(np.sum(areas * values[triangles].sum(axis=1)) / 3.0)
