# CLI Configuration Constants
# These values control the command-line surface, output files and logging

import os

# Exit Codes
EXIT_OK = 0  # Command finished
EXIT_CHECK_FAILED = 1  # The inequality suite found violations
EXIT_VALIDATION = 2  # Graph failed validation
EXIT_CONVERGENCE = 3  # A solver did not converge
EXIT_USAGE = 64  # Unknown subcommand or malformed flags
EXIT_FORMAT = 65  # Graph file could not be parsed

# Output Settings
OUTDIR = os.getenv('FATGRAPH_OUTDIR', 'results')  # Directory for CSV/JSON artifacts
CSV_DIGITS = 12  # Significant digits of every numeric CSV field
JSON_INDENT = 2  # Indentation of JSON mirrors and run manifests
MANIFEST_NAME = 'manifest.json'  # File name of the run manifest inside the output directory

# Logging Settings
LOG_LEVEL = os.getenv('FATGRAPH_LOG_LEVEL', 'INFO')  # Root logger level when --log-level is not given
LOG_FORMAT = '%(asctime)s %(levelname)s %(message)s'  # Root handler format; messages carry their component

# Default Run Parameters
DEFAULT_LAMBDA_MAX = 200.0  # Spectral window of graph-spec and fat-spec
DEFAULT_EPS = 0.1  # Strip width of fat-spec
DEFAULT_KMAX = 4  # Eigenvalues followed by converge
DEFAULT_THETA = '0.5j'  # Dilation parameter of the graph-res oracle
CHECK_EPS = 0.1  # Strip width of the meshes used by the check subcommand
CHECK_GRAPH_SEEDS = (1, 2, 3)  # Random graphs added to the check subcommand's fixed graphs
