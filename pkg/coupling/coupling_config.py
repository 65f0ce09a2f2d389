# Coupling Configuration Constants
# These values control the identification operators, defect functionals and convergence studies

import os

# Defect Functional Settings
MIN_MODES = 5  # quasi_unitarity_defect needs at least this many manifold modes
DEFECT_EIGS_TOL = 1e-8  # ARPACK tolerance for the resolvent-difference norm
DEFECT_MAXITER = 10_000  # ARPACK iteration cap for the resolvent-difference norm
SPECTRUM_CLEARANCE = 1e-3  # Interval endpoints must keep this distance from the graph spectrum
SIMPLE_GAP_TOL = 1e-6  # Relative gap below which graph eigenvalues count as one level

# Inequality Check Settings
MARGIN_TOL = 1e-10  # Margins below -MARGIN_TOL count as violations
CHECK_SAMPLES = 100  # Random inputs per inequality mode
CHECK_SEED = int(os.getenv('FATGRAPH_SEED', '20240611'))  # Seed of the random inequality inputs
TRACE_GRID = 64  # Cells of the P1 grid on [0, l0/2] used for trace inputs

# Convergence Study Settings
DEFAULT_EPS_LIST = (0.2, 0.1, 0.05)  # Strip widths of the default sweep
H_RULE_DIVISOR = 8  # Default mesh size h = eps / H_RULE_DIVISOR
SLOPE_THRESHOLD = 0.45  # Fitted log-log slopes below this are flagged
REFINEMENT_STABILITY = 0.10  # Allowed relative change of a measured value under h -> h/2
UPPER_BOUND_TOL = 1e-6  # lambda_k(eps) <= lambda_k(0) + UPPER_BOUND_TOL
ZERO_DIFF = 1e-12  # Differences below this are excluded from slope fits
ZERO_LEVEL_TOL = 1e-8  # Reference eigenvalues at or below ZERO_LEVEL_TOL * max(1, lambda_max) are zero modes
