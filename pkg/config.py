# ---------- Config ----------
import os

# ---- Surrogate / basis ----
DEFAULT_PCE_ORDER = 5
QUADRATURE_EXTRA_NODES = 2           # m = N + ceil(d/2) + 2 for declared-degree plants
NONPOLY_QUADRATURE_BASE = 16         # m = 2N + 16 when the degree is unknown
QUADRATURE_SELF_CHECK_RTOL = 1e-10

# ---- Linear algebra ----
HURWITZ_MARGIN = 1e-9
LYAP_RESIDUAL_RTOL = 1e-8            # accept if residual <= rtol * (1 + ||Q||_F)
LYAP_CONDITION_WARN = 1e12
KRON_REFERENCE_MAX_DIM = 64
KLEINMAN_TOL = 1e-10
KLEINMAN_MAX_ITER = 100
RICCATI_RESIDUAL_TOL = 1e-8
SEED_GAIN_SCALES = (1.0, 10.0, 100.0, 1000.0)

# ---- Optimizer ----
DEFAULT_STEP_SIZE = 0.01
DEFAULT_GRAD_TOL = 1e-3
DEFAULT_MAX_ITERS = 20_000
DEFAULT_ARMIJO_C = 1e-4
DEFAULT_ARMIJO_SHRINK = 0.5
MAX_BACKTRACKS = 60
DIVERGENCE_FACTOR = 1e6
COST_ROUNDING_RTOL = 1.8e-15         # about eight ulps; fixed-step cost comparison only
LOG_EVERY = 500

# ---- Validation ----
TRUE_COST_GRID_ORDER = 64
TRUE_COST_SELF_CHECK_RTOL = 1e-8
VALIDATION_GRID_POINTS = 101
DOMINANCE_GRID_POINTS = 21
X0_STATE_COUNT = 3
FD_STEP = 1e-6
GRADIENT_REL_FLOOR = 1e-8            # relative error denominator never drops below this × (1 + ||g||)
HESSIAN_FD_STEP = 1e-4
CURVATURE_DIRECTIONS = 10
CONVERGENCE_ORDERS = (1, 2, 3, 4, 5, 6)

# ---- CLI ----
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_ITERS = 2
EXIT_STEP_REJECTED = 3
EXIT_INADMISSIBLE_INITIAL = 4
EXIT_INADMISSIBLE_GRID = 5
EXIT_TARGET_MISSED = 6
CSV_FLOAT_FORMAT = ".17g"            # full round-trip precision

# ---- Environment overrides (main.py calls load_dotenv() before importing us) ----
DEFAULT_SEED = int(os.environ.get("PCE_LQR_SEED", "42"))
DEFAULT_OUT_DIR = os.environ.get("PCE_LQR_OUT_DIR", "results")
LOG_LEVEL = os.environ.get("PCE_LQR_LOG_LEVEL", "INFO").upper()
