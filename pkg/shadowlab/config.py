from typing import Dict, Any
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv(override=True)

# Numerical tolerances shared by every module
TOLERANCES = {
    "symp": 1e-9,  # relative, ||L^T Omega L - Omega||
    "nd": 1e-9,  # |det| of the restricted form on an orthonormal basis
    "newton": 1e-10,
    "rank_loss": 1e-10,
    "orbit": 1e-8,
    "energy_drift": 1e-9,
    "resolution": 1e-3,
    "average": 1e-10,
    "obstruction": 1e-8,
}

# Spherical quadrature
QUADRATURE_CONFIG = {
    "default_order": 24,
    "chunk_size": 4096,
}

# Shadow boundary continuation
CHART_CONFIG = {
    "max_newton_iterations": 12,
    "max_t_step": 0.02,
    "retry_attempts": 3,
}

# Independent radial membership oracle
ORACLE_CONFIG = {
    "starts": 8,
    "order": 16,
    "bisection_rtol": 1e-7,
    "membership_tol": 1e-9,
    "bracket": (0.6, 1.6),
    "ray_inside": (0.15, 0.3, 0.45, 0.6, 0.75, 0.9),
    "ray_outside": (1.1, 1.3),
}

# Contact geometry and minimal action
CONTACT_CONFIG = {
    "pinch": (0.5, 2.0),
    "random_seeds": 16,
    "loop_samples": 256,
    "flow_rtol": 1e-12,
    "flow_atol": 1e-13,
    "fit_order": 32,
    "fit_degree": 6,
    "chebyshev_degree": 14,
    "flow_window": 0.2,
    "t_check": 0.01,
    "sphere_order": 48,
}

# Runtime settings, overridable from the environment
RUNTIME_CONFIG = {
    "workers": int(os.getenv("SHADOWLAB_WORKERS", "1")),
    "seed": int(os.getenv("SHADOWLAB_SEED", "20240917")),
    "log_level": os.getenv("SHADOWLAB_LOG_LEVEL", "INFO"),
    "out_dir": os.getenv("SHADOWLAB_OUT", "results"),
}

SCENARIO_SCHEMA = "shadowlab.scenario/1"


def resolve_workers(cli_value: Any = None) -> int:
    """Worker count from the CLI flag, falling back to SHADOWLAB_WORKERS."""
    if cli_value is not None:
        return max(1, int(cli_value))
    env_value = os.getenv("SHADOWLAB_WORKERS")
    if env_value:
        return max(1, int(env_value))
    return max(1, RUNTIME_CONFIG["workers"])


def merged(base: Dict[str, Any], overrides: Dict[str, Any] = None) -> Dict[str, Any]:
    """Return a copy of a config dict with the non-None overrides applied."""
    out = dict(base)
    for key, value in (overrides or {}).items():
        if value is not None:
            out[key] = value
    return out
