# validation
UTILITY_BOUND = 30.0
NORMALIZATION_TOL = 1e-9

# portfolio enumeration / exact best response guards
MAX_PORTFOLIO_CATALOG = 20
MAX_SUPPORT_CATALOG = 12

# interior solver
REFERENCE_TOL = 1e-12
# |E_it| below this share of sum_p 1/beta_p is cancellation noise
REFERENCE_RTOL = 1e-9
DISCRIMINANT_TOL = 1e-12
DENOMINATOR_TOL = 1e-12
INTERIOR_MARGIN = 1e-7
DEDUP_RADIUS = 1e-6
DEFAULT_TOL = 1e-10
DEFAULT_STARTS = 32
DEFAULT_MAX_ITER = 200
DEFAULT_SEED = 0
GAUSS_SEIDEL_SWEEPS = 50

# verifier
DEFAULT_EPS = 1e-6
DEFAULT_NUMERIC_STARTS = 8
NUMERIC_TOL = 1e-12
NUMERIC_MAX_ITER = 2000
ARMIJO = 1e-4

# oracle
MAX_GRID_PROFILES = 10 ** 8
FINE_RESOLUTION = 0.005
COARSE_RESOLUTION = 0.05
DEFAULT_ORACLE_EPS = 1e-3

# dynamics
DEFAULT_MAX_ROUNDS = 500
DEFAULT_DYNAMICS_TOL = 1e-9
IMPROVEMENT_TOL = 1e-12

# method tags
SUPPORT_ENUMERATION = 'support-enumeration exact'
NUMERIC_MULTISTART = 'numeric multi-start'

CONVERGED = 'converged'
CYCLE_DETECTED = 'cycle-detected'
MAX_ROUNDS = 'max-rounds'
