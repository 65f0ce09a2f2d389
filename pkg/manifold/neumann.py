"""
Neumann Laplacian eigenvalues of fat graphs (and test regions) by P1 FEM.
"""

import logging
from typing import Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import norm as sparse_norm

from graphs.eigensolver import eigenpairs_below, group_multiplicities, residuals
from graphs.spectral_result import SpectralResult
from manifold.fat_mesh import FatGraphMesh, transverse_threshold
from manifold.manifold_config import FEM_GROUP_TOL, FEM_RESIDUAL_TOL, KERNEL_TOL, TRANSVERSE_GUARD
from manifold.vertex_template import TemplateMesh

logger = logging.getLogger(__name__)


def constant_in_kernel(A) -> bool:
    """||A 1|| <= KERNEL_TOL * ||A|| (infinity norms)."""
    ones = np.ones(A.shape[0])
    scale = sparse_norm(A, np.inf) if sparse.issparse(A) else np.linalg.norm(A, np.inf)
    return float(np.max(np.abs(A @ ones))) <= KERNEL_TOL * scale


def neumann_eigs(mesh: Union[FatGraphMesh, TemplateMesh], lambda_max: float) -> SpectralResult:
    """
    All Neumann eigenvalues <= lambda_max of a meshed domain.

    Solves A x = lambda M x by shift-invert Lanczos; eigenvectors are
    M-orthonormal columns of `vectors` (conforming numbering). On a fat graph,
    eigenvalues above TRANSVERSE_GUARD * pi^2 / eps^2 mix transverse modes
    and are flagged untrusted.

    Args:
        mesh: FatGraphMesh or a triangulated test region
        lambda_max: Upper end of the spectral window

    Returns:
        SpectralResult with method 'fem'
    """
    if not lambda_max >= 0:
        raise ValueError("neumann_eigs: lambda_max must be nonnegative")
    A, M = mesh.assemble()
    flags = []
    if not constant_in_kernel(A):
        flags.append("constants are not in the discrete kernel")
        logger.warning("NeumannSolver: A 1 != 0, mesh assembly inconsistent")

    values, vectors = eigenpairs_below(A, M, lambda_max)
    if values.size and abs(values[0]) < 1e-10 * max(1.0, lambda_max):
        values[0] = 0.0
    values = np.maximum(values, 0.0)
    res = residuals(A, M, values, vectors)
    if res.size and np.max(res) > FEM_RESIDUAL_TOL:
        flags.append(f"eigenpair residual {np.max(res):.2e} above {FEM_RESIDUAL_TOL:g}")
        logger.warning(f"NeumannSolver: residual {np.max(res):.2e} exceeds {FEM_RESIDUAL_TOL:g}")

    eps = getattr(mesh, 'eps', None)
    if eps is not None:
        guard = TRANSVERSE_GUARD * transverse_threshold(eps)
        untrusted = int(np.sum(values > guard))
        if lambda_max > guard:
            logger.warning(f"NeumannSolver: lambda_max = {lambda_max:g} above the transverse guard {guard:.6g}; "
                           f"eigenvalues there mix transverse modes")
        if untrusted:
            flags.append(f"{untrusted} eigenvalues above {guard:.6g} (transverse modes) untrusted")

    grouped = group_multiplicities(values, FEM_GROUP_TOL, abs_tol=1e-10)
    logger.debug(f"NeumannSolver: {values.size} eigenvalues below {lambda_max:g} on {A.shape[0]} dofs")
    return SpectralResult(grouped, 'fem', vectors=vectors, mass=M, residuals=res, flags=flags)
