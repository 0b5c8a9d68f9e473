# Global configuration for the tropical / m-Hessian toolkit

# Grid defaults (nodes per axis, keyed by ambient dimension)
GRID_RESOLUTION = {1: 129, 2: 65, 3: 33, 4: 17}

# m-positivity: tol = M_POSITIVE_TOL_SCALE * (1 + |sigma_1|)
M_POSITIVE_TOL_SCALE = 1e-8

# Mollifier bump (1 - |x/h|^2)^MOLLIFIER_EXPONENT
MOLLIFIER_EXPONENT = 3
CONVERGENCE_HS = (0.4, 0.2, 0.1, 0.05)

# Stable intersection displacement
DISPLACEMENT_RETRIES = 16
DISPLACEMENT_RANGE = 997     # numerators drawn from [-range, range]
DISPLACEMENT_DENOMINATOR = 1009
DEFAULT_SEED = 20231

# Capacity solver
CAPACITY_TOL = 1e-6
CAPACITY_MAX_ITER = 20000
CAPACITY_MARGIN = 2          # K must stay this many nodes away from the boundary of D
BISECTION_STEPS = 40
SWEEP_ORDER = 'red-black'    # or 'jacobi'
ORACLE_REFINEMENT = 4
CANDIDATE_DIRECTIONS = 8

# Quasicontinuity experiment
QUASI_K_MAX = 12
QUASI_EPS = 1e-3

# Indicators
RECESSION_TS = tuple(2 ** k for k in range(4, 11))
RECESSION_DIRECTIONS = 64
RECESSION_TOL = 1e-3
RATIONAL_DENOMINATOR_LIMIT = 64

# Logging
LOG_LEVEL = 'WARNING'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
