# Manifold Configuration Constants
# These values control the fat-graph meshes and the Neumann FEM eigensolver

import math

# Cross Section Settings
CROSS_SECTION_WIDTH = 1.0  # Transverse interval [0, CROSS_SECTION_WIDTH]; vol F = 1
CROSS_SECTION_LAMBDA2 = math.pi ** 2  # First nonzero Neumann eigenvalue of the cross section

# Mesh Admissibility Settings
MAX_EPS_FRACTION = 0.5  # build_mesh requires eps <= MAX_EPS_FRACTION * l0
MAX_HMESH_FRACTION = 0.25  # build_mesh requires h_mesh <= MAX_HMESH_FRACTION * eps
MERGE_TOL = 1e-9  # Relative distance below which template nodes are merged
INTERFACE_TOL = 1e-9  # Relative mismatch allowed between glued interface lengths

# Vertex Template Settings
TEMPLATE_STEP = 1.0 / 16  # Default mesh step (template coordinates) for template_constants
TEMPLATE_CHANGE_TOL = 1e-3  # Relative change between h and h/2 above which extrapolation is flagged

# Neumann Eigensolver Settings
FEM_GROUP_TOL = 1e-8  # Relative gap below which FEM eigenvalues count as one level
FEM_RESIDUAL_TOL = 1e-10  # Residual ||Ax - lambda Mx|| / ||x||_M above which pairs are flagged
KERNEL_TOL = 1e-10  # ||A 1|| <= KERNEL_TOL * ||A|| for the constant kernel check
TRANSVERSE_GUARD = 0.5  # Eigenvalues above TRANSVERSE_GUARD * pi^2 / eps^2 are flagged untrusted
