# Resonance Configuration Constants
# These values control the contour search and the complex-scaled oracle

# Contour Search Settings
QUAD_NODES = 512  # Gauss-Legendre nodes per rectangle side
ISOLATION_DIAMETER = 1e-2  # Rectangles below this diameter are not bisected further
NEWTON_TOL = 1e-10  # Stop Newton refinement once |dk| <= NEWTON_TOL
NEWTON_MAXITER = 60  # Newton iterations before the start point is rejected
CONTOUR_CLEARANCE = 1e-8  # Relative sigma_min on the contour below which it is perturbed
COUNT_TOL = 0.05  # Largest distance of the contour integral from an integer
MAX_CONTOUR_RETRIES = 5  # Perturbed retries before giving up on a rectangle
PERTURBATION = 1e-3  # Contour shift per retry, as a fraction of the rectangle size
SPLIT_OFFSETS = (0.0, 0.0173, -0.0291, 0.0437, -0.0613)  # Bisection points are 0.5 + offset
CONTOUR_LIFT = 0.1  # Top edge is lifted to +CONTOUR_LIFT when the window touches the real axis

# Classification Settings
EMBEDDED_TOL = 1e-7  # |Im lambda| at or below this counts as an embedded eigenvalue
BORDERLINE_TOL = 1e-5  # Up to this |Im lambda| the classification is flagged as borderline
RESIDUAL_ACCEPT = 1e-6  # Largest accepted sigma_min/sigma_max at a refined root

# Complex-Scaled Oracle Settings
MIN_TRUNCATION = 10.0  # Smallest admissible truncation length of the leads
STEP_FRACTION = 0.125  # Grid step must satisfy h <= STEP_FRACTION * l0
DEFAULT_TRUNCATION = 20.0  # Lead truncation length used by the CLI oracle
DEFAULT_STEP = 1.0 / 64  # Coarsest oracle grid step
ORACLE_LEVELS = 2  # Nested grids for the oracle eigenvalue (Richardson)
THETA_LEVELS = 3  # Nested grids for theta-independence sweeps (Romberg)
EIGS_COUNT = 6  # Eigenvalues requested around a shift
EIGS_TOL = 1e-13  # ARPACK tolerance for the non-symmetric pencil
