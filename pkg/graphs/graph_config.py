# Graph Configuration Constants
# These values control the metric-graph discretizations and the secular solver

import os

# Representation Settings
CONTINUITY_TOL = 1e-12  # Relative tolerance for vertex-continuity of GraphFunction samples
SNAP_TOL = 1e-6  # Largest endpoint mismatch that construction helpers snap onto the vertex value
DEFAULT_SAMPLES_PER_UNIT = 256  # Grid density used when sampling analytic eigenfunctions

# Finite-Difference Oracle Settings
FD_MAX_STEP_FRACTION = 0.25  # fd_discretize requires h <= FD_MAX_STEP_FRACTION * l0
ORACLE_STEP = 1.0 / 64  # Coarsest grid step of the Romberg-extrapolated oracle
ORACLE_LEVELS = 3  # Number of nested grids (cell counts doubled each level)
ORACLE_GROUP_TOL = 1e-6  # Relative gap below which oracle eigenvalues count as one level

# Secular Solver Settings
SCAN_FACTOR = 4  # Scan step in k is pi / (SCAN_FACTOR * total length)
ROOT_XTOL = 1e-12  # Golden-section refinement target |dk|
MULTIPLICITY_REL_TOL = 1e-8  # Singular values below this fraction of sigma_max count as kernel
COLLISION_FACTOR = 10  # Roots closer than COLLISION_FACTOR * ROOT_XTOL are flagged
ROOT_BOUNDARY_SLACK = 1e-11  # Relative slack in k before a refined root at the window edge is dropped
THREADS = int(os.getenv('FATGRAPH_THREADS', '1'))  # Worker threads for the k-scan

# Generalized Eigensolver Settings
SHIFT = -1.0  # Shift-invert target; A - SHIFT*M is positive definite for Neumann problems
DENSE_LIMIT = 400  # Problems up to this size are solved densely
EIGSH_TOL = 1e-12  # ARPACK convergence tolerance
EIGEN_SEED = int(os.getenv('FATGRAPH_SEED', '20240611'))  # Seed for deterministic start vectors
RESIDUAL_WARN_TOL = 1e-8  # Relative residual above which eigenpairs are flagged
