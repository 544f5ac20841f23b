"""
Configuration constants and settings for sber-outage.
"""

import os
from pathlib import Path

# Application info
APP_NAME = "sber-outage"

# Try to get version from package metadata, fallback to "0.3.0" if not installed
try:
    from importlib.metadata import version

    APP_VERSION = version("sber-outage")
except Exception:
    # Package not installed (development mode) or version not available
    APP_VERSION = "0.3.0"


# Paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = Path(os.environ.get("SBER_DATA_DIR", BASE_DIR / "data_files"))
LOGS_DIR = DATA_DIR / "logs"
OUTPUT_DIR = DATA_DIR / "output"

# Estimate cache
CACHE_DB_PATH = DATA_DIR / "estimates.db"

# Worker pool
WORKERS_ENV = "SBER_WORKERS"


def get_worker_count() -> int:
    """
    Worker-pool size from the environment, at least 1.
    """
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ensure_dirs():
    """Create the data directories on first use."""
    for path in (DATA_DIR, LOGS_DIR, OUTPUT_DIR):
        path.mkdir(parents=True, exist_ok=True)


# Link defaults (linear units, watts)
LINK_DEFAULTS = {
    "p_source_w": 15.0,
    "p_u_w": 0.2,
    "noise_w": 1e-10,
    "eta": 0.6,
    "zeta_db": -100.0,
    "phi_g_db": -15.0,
    "phi_ud_db": -60.0,
    "phi_si_db": 0.0,
}

# Circuit block consumption, mW
DEFAULT_CIRCUIT_MW = {
    "p_dac_w": 1.0,
    "p_adc_w": 1.0,
    "p_mix_w": 30.3,
    "p_lna_w": 20.0,
    "p_ifa_w": 3.0,
    "p_filt_w": 2.5,
    "p_filr_w": 2.5,
    "p_syn_w": 50.0,
}

# Series and quadrature
SERIES_REL_TOL = 1e-14
SERIES_MAX_TERMS = 10_000
DEFAULT_GL_ORDER = 60
MAX_GL_ORDER = 200
GL_CONVERGENCE_RTOL = 1e-8
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 400

# Agreement tolerances between analytic forms and their numeric fallbacks
HD_D_AGREEMENT_ATOL = 1e-6
FD_SBS_AGREEMENT_ATOL = 1e-5

# Monte Carlo
MC_BATCH_SIZE = 2**16
MC_DEFAULT_SAMPLES = 10**7
MC_MIN_SAMPLES = 10**4
EH_CAP_FACTOR = 10.0
Z_95 = 1.959963984540054

# Output
CSV_FLOAT_FORMAT = "{:.8e}"
HISTOGRAM_BINS = 200
