# app/config.py
import os
from dotenv import load_dotenv

# ──────────────────────────────────────────────────────────────────────────────
# Config
# ──────────────────────────────────────────────────────────────────────────────
load_dotenv()

DEFAULT_SOLVER = os.getenv("MOMENT_LP_SOLVER", "highs")
N_MAX = int(os.getenv("MOMENT_LP_N_MAX", "16"))
WORKERS = int(os.getenv("MOMENT_LP_WORKERS", "4"))
FEASIBILITY_TOL = float(os.getenv("MOMENT_LP_FEAS_TOL", "1e-9"))
MC_BATCH_SIZE = int(os.getenv("MC_BATCH_SIZE", "10000"))

# normalization cutoff for polynomial coefficients, relative to max |coeff|
COEFF_CUTOFF = 1e-14
# PSD certificate cutoff, relative to the trace
PSD_TOL = 1e-9

API_HOST = os.getenv("API_HOST", "0.0.0.0")
API_PORT = int(os.getenv("API_PORT", "8000"))
