THREADS_ENV_VAR: str = "PATCHKPP_THREADS"

# Cap used for a logistic patch with no positive root (sink-only reaction).
SINK_CAP: float = 1.0

# Hypothesis sampling: s in [HYPOTHESIS_S_MIN, 10 * max(K1, K2)], log spaced
HYPOTHESIS_S_MIN: float = 1e-6
HYPOTHESIS_SAMPLES: int = 400

# Tolerances
ROOT_TOL: float = 1e-14
AGREEMENT_TOL: float = 1e-6
RESCALE_TOL: float = 1e-10
BOUND_TOL: float = 1e-9
EIGEN_TOL: float = 1e-13

# Eigen
TAN_CLAMP: float = 1e-12
SCAN_FRACTION: float = 0.05
POSITIVITY_SAMPLES_PER_PATCH: int = 16
MIN_NODES_PER_PATCH_EIGEN: int = 8
MIN_NODES_PER_PATCH_PDE: int = 4
MIN_SEGMENT_INTERVALS: int = 3

# Time stepping
DEFAULT_DT: float = 5e-3
DEFAULT_NEWTON_TOL: float = 1e-12
DEFAULT_NEWTON_MAX_ITER: int = 25
MESH_RATIO_WARNING: float = 0.5

# Steady states
EXTINCTION_THRESHOLD: float = 1e-8
MARCH_TOL: float = 1e-10
UNIQUENESS_TOL: float = 1e-7
NEAR_CRITICAL: float = 1e-3
MAX_MARCH_STEPS: int = 20000
MAX_HORIZON_DOUBLINGS: int = 6

# Spreading speed
MU_START: float = 1e-3
MU_MIN: float = 1e-9
MAX_DOUBLINGS: int = 60
GOLDEN_TOL: float = 1e-10
FIT_FRACTION: float = 0.6

# Exit codes
EXIT_OK: int = 0
EXIT_CONFIG: int = 2
EXIT_NOT_PERSISTENT: int = 3
EXIT_NUMERICAL: int = 4

# CSV headers
TRAJECTORY_COLUMNS: list[str] = ["t", "x", "u", "v", "patch_type"]
PROFILE_COLUMNS: list[str] = ["x", "p", "patch_type"]
EIGENFUNCTION_COLUMNS: list[str] = ["x", "phi"]
FRONT_COLUMNS: list[str] = ["t", "x_front_right", "x_front_left"]
PHI_COLUMNS: list[str] = ["mu", "lambda_mu", "phi"]
SIGMA_SWEEP_COLUMNS: list[str] = ["sigma", "alpha", "lambda1"]

# Run artifacts
MANIFEST_NAME: str = "manifest.json"
VERSIONED_PACKAGES: list[str] = ["patchkpp", "numpy", "scipy", "pandas", "pydantic"]
