# tool version echoed into every report header
TOOL_VERSION = "0.3.0"

# units: hbar = 1 throughout

# tolerances and thresholds
HERMITIAN_TOLERANCE = 1e-10
COND_LIMIT = 1e8  # above this S^-1 is only available through the regularized solve
REGULARIZATION_CUTOFF = 1e-12  # relative to lambda_max(S)
METRIC_PD_CUTOFF = 1e-12  # relative to lambda_max(M)

# DVR families
PERIODIC_SINC = "periodic_sinc"
GAUSS_LEGENDRE = "gauss_legendre"
DVR_FAMILIES = [PERIODIC_SINC, GAUSS_LEGENDRE]
LEGENDRE_RULE = "gauss"  # Gauss-Lobatto is not implemented

# potential models
HARMONIC = "harmonic"
MORSE = "morse"
DOUBLE_WELL = "double_well"
MODEL_KINDS = [HARMONIC, MORSE, DOUBLE_WELL]

DEFAULT_DOMAINS = {
    HARMONIC: (-10.0, 10.0),
    MORSE: (-2.0, 12.0),
    DOUBLE_WELL: (-6.0, 6.0),
}

# representations
DIRECT_DVR = "direct_dvr"
PVB_SYMMETRIC = "pvb_symmetric"
PVB_BIORTH_LEFT = "pvb_biorth_left"
PVB_BIORTH_BOTH = "pvb_biorth_both"
PVB_REPRESENTATIONS = [PVB_SYMMETRIC, PVB_BIORTH_LEFT, PVB_BIORTH_BOTH]

# prune strategies
PRUNE_ALL = "all"
PRUNE_ENERGY_SHELL = "energy_shell"
PRUNE_TOP_K = "top_k"
PRUNE_STRATEGIES = [PRUNE_ALL, PRUNE_ENERGY_SHELL, PRUNE_TOP_K]

# lattice factorization rules
LATTICE_BALANCED = "balanced"
LATTICE_SQUARE = "square"
LATTICE_EXPLICIT = "explicit"
LATTICE_RULES = [LATTICE_BALANCED, LATTICE_SQUARE, LATTICE_EXPLICIT]

# design-decision labels written into report headers
LATTICE_OFFSET_CONVENTION = "half-cell"
ALPHA_RULE = "alpha = dp / (2 dx)"
SAMPLING_PERIODIC = "minimum-image"
SAMPLING_PLAIN = "plain"
INVERSION_POLICY = "prune-then-invert (symmetric, left); invert-then-prune (both)"
PRUNE_STRATEGY_NOTE = "rule chosen by this tool: centers scored by classical energy P^2/2m + V(X)"

# row flags
FLAG_REGULARIZED = "regularized-S"
FLAG_HEURISTIC_LATTICE = "heuristic-lattice"
FLAG_EMPTY_MASK = "empty-mask"
FLAG_SOLVE_FAILED = "solve-failed"

# levels reported when SOLVE_LEVELS is not given: full bases, then pruned bases
DEFAULT_SOLVE_LEVELS = 20
MAX_TRACKED_PRUNED_LEVELS = 5

# output file names
SOLVE_CSV = "solve.csv"
CONVERGE_CSV = "converge.csv"
PRUNE_SCAN_CSV = "prune_scan.csv"
BASIS_SUMMARY_CSV = "basis_summary.csv"
BASIS_TRACE_TEMPLATE = "basis_{index:04d}.csv"

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_FAILURE = 2

CONCURRENT_WORKERS = 4
DEFAULT_PLOT_POINTS = 801
