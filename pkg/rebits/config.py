"""
Configuration settings for the REBits toolkit
"""

import os
import sys

from dotenv import load_dotenv

load_dotenv()

# Trace output (stderr); stdout is reserved for CLI artifacts
VERBOSE = os.getenv("REBITS_VERBOSE", "1") not in ("0", "false", "False", "")

# How the REBits arithmetic obtains the addition error:
#   softfp - bit-level emulated adder (the FPERR register model)
#   host   - two_sum on host arithmetic (bitwise identical, much faster)
REBITS_ENGINE = os.getenv("REBITS_ENGINE", "softfp")

# Experiment defaults
DEFAULT_SEED = int(os.getenv("REBITS_DEFAULT_SEED", "1"))
DEFAULT_N = int(os.getenv("REBITS_DEFAULT_N", "100000"))
DEFAULT_FORMAT = os.getenv("REBITS_DEFAULT_FORMAT", "f32")
DEFAULT_WORKERS = int(os.getenv("REBITS_WORKERS", "4"))
DEFAULT_PARTITIONS = 4

# Skewed generator: first 3/4 in [2^20, 2^21), rest in [2^-6, 2^-5).
# binary64 shifts the large band up by 2^29 so the ulp gap still exceeds
# the precision and naive sums stall.
SKEW_LARGE_EXP = 20
SKEW_SMALL_EXP = -6
SKEW_BINARY64_OFFSET = 29

# Sea-height style grid
GRID_ROWS = 120
GRID_COLS = 64
GRID_LARGE_EXP = 44
GRID_PAIR_FRACTION = 8  # one cancelling pair per 8 cells

# Numerical integration of 400(x sin x + cos x - 1)
INTEGRATION_X_MAX = 100.0
INTEGRATION_STEPS = 1_000_000
INTEGRATION_SAMPLES = 200

# N-body sweep
NBODY_SWEEP = [1000, 2000, 4000, 8000]

# European call, Monte Carlo defaults
MC_PARAMS = {
    "S0": 100.0,
    "K": 100.0,
    "r": 0.1,
    "sigma": 0.25,
    "T": 1.0,
}
MC_PATHS = 1_000_000

# Double-Double workload / equivalence runs
DD_WORKLOAD_CALLS = 1_000_000
DD_EQUIVALENCE_PAIRS = 1_000_000

# Adder verification at full width
VERIFY_RANDOM_PAIRS = 10_000_000

# Exact accumulator guard bits (>= 2^60 additions without overflow)
EXACT_GUARD_BITS = 64


def trace(tag: str, message: str) -> None:
    """Print a tagged diagnostic line to stderr"""
    if VERBOSE:
        print(f"[{tag}] {message}", file=sys.stderr)
