"""
Ring Road Wave Simulator - Configuration
========================================
Defaults for the multi-lane ring-road experiments plus environment overrides.

Every value below can be overridden in an experiment config file
(see data_io.load_sim_config).
"""

import os
from typing import Literal

# Try to load dotenv
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass


def _env_flag(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# =============================================================================
# RUNTIME CONFIGURATION
# =============================================================================

LOG_LEVEL = os.getenv("RINGROAD_LOG_LEVEL", "INFO")

OUTPUT_DIR = os.getenv("RINGROAD_OUTPUT_DIR", "outputs")

# Worker processes for sweeps (0 or unset = one per CPU)
DEFAULT_JOBS = int(os.getenv("RINGROAD_JOBS", "0")) or (os.cpu_count() or 1)

# Run cache (metrics only, keyed by config hash)
ENABLE_CACHE = _env_flag("RINGROAD_ENABLE_CACHE", False)
CACHE_DIR = os.getenv("RINGROAD_CACHE_DIR", "cache")


# =============================================================================
# MODEL DEFAULTS
# =============================================================================

MODEL_DEFAULTS = {
    # Geometry: three 240 m lanes of 24 vehicles
    "n_per_lane": 24,
    "lanes": 3,
    "lane_length": 240.0,

    # Bando-FTL
    "alpha": 0.5,
    "beta": 20.0,
    "l_v": 4.5,
    "d_0": 2.5,
    "a_cap_max": 2.5,
    "a_cap_min": 4.0,
    # Makes the default geometry unstable (V'(10) > alpha/2 + beta/(h - l_v)^2)
    "v_max": 9.75,

    # Integration
    "dt": 0.02,
    "t_f": 1000.0,

    # Lane changing; the thresholds are swept
    "iter_lc": 50,
    "tau": 5.0,
    "delta_i": 3.0,
    "delta_s": 0.5,

    # AV controller
    "k": 1.0,
    "c1": 0.5,
    "t1": 10.0,
    "t2": 10.0,
    # Ramp and override
    "v_min": 2.0,
    "t_tr": 100.0,
    "gap_safe": 6.0,  # between l_v and the 10 m equilibrium headway

    # Collaborative drivers; these weights satisfy the stable inequality
    "alpha_s": 4.0,
    "beta_s": 20.0,

    # Initial positions within 1 m of the uniform spacing
    "perturbation_amplitude": 1.0,
}

# IDM defaults; delta is the usual exponent
IDM_DEFAULTS = {
    "v0": 30.0,
    "s0": 2.0,
    "T": 1.5,
    "a": 1.0,
    "b": 2.0,
    "delta": 4.0,
}

# Averaging window for the last-seconds metrics
METRICS_WINDOW = 300.0

# Trajectory recording stride in steps (variance is recorded every step regardless)
SAMPLE_STRIDE = 50

# Numerical tolerance for the eigenvalue instability flag
EIGEN_TOLERANCE = 1e-9


# =============================================================================
# EXPERIMENT PRESETS
# =============================================================================

SWEEP_BOUNDS = {
    "delta_i": (0.6, 3.0),
    "delta_s": (0.5, 5.0),
}

PresetName = Literal["quick", "paper"]

PRESETS = {
    "quick": {
        "di": (0.6, 3.0, 5),
        "ds": (0.5, 5.0, 5),
        "seeds": 10,
        "t_f": 600.0,
    },
    "paper": {
        "di": (0.6, 3.0, 13),
        "ds": (0.5, 5.0, 10),
        "seeds": 100,
        "t_f": 1000.0,
    },
}

COLLAB_DEFAULTS = {
    "lane_length": 258.0,
    "n": 25,
    "counts": [25, 12, 8, 6, 5, 4, 3, 2, 1, 0],
    "seeds": 40,
    "t_f": 1000.0,
    "window": 100.0,
}

# Base seed mixed into every per-cell seed
BASE_SEED = 20240101


def get_preset(name: str) -> dict:
    """Get a sweep preset by name"""
    if name not in PRESETS:
        raise ValueError(f"Unknown preset: {name} (expected one of {sorted(PRESETS)})")
    return PRESETS[name]
