"""
Numerical configuration and environment handling
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# config.env at the repository root; real environment variables take precedence
load_dotenv(Path(__file__).resolve().parents[2] / "config.env")

# Integrator tolerances
RTOL = float(os.getenv("TFT_RTOL", "1e-10"))
ODE_METHOD = os.getenv("TFT_ODE_METHOD", "DOP853")

# Invertibility threshold at unit scale
DET_TOL = float(os.getenv("TFT_DET_TOL", "1e-10"))

# Finite-difference step for connection reconstruction
FD_STEP = float(os.getenv("TFT_FD_STEP", "1e-4"))

# Root scanning: samples per unit parameter length, bisection tolerance
GRID_DENSITY = int(os.getenv("TFT_GRID_DENSITY", "200"))
ROOT_TOL = float(os.getenv("TFT_ROOT_TOL", "1e-12"))

LOG_LEVEL = os.getenv("TFT_LOG_LEVEL", "WARNING")
DEFAULT_SEED = int(os.getenv("TFT_SEED", "0"))


def get_settings() -> dict:
    """
    Snapshot of the active configuration (echoed in reports)
    """
    return {
        "rtol": RTOL,
        "ode_method": ODE_METHOD,
        "det_tol": DET_TOL,
        "fd_step": FD_STEP,
        "grid_density": GRID_DENSITY,
        "root_tol": ROOT_TOL,
    }
