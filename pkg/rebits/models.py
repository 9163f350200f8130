"""
Run and result models
"""

import math
from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

from rebits import config
from rebits.accum import FoldPolicy
from rebits.opcount import COUNTER_FIELDS, OpCounters
from rebits.softfp import FORMATS, RoundingMode

KERNELS = [
    "sum",
    "parallel-sum",
    "grid",
    "norm",
    "trapezoid",
    "trapezoid-profile",
    "nbody",
    "mc",
    "dd-workload",
    "dd-equivalence",
    "verify-adder",
    "table8",
]

ORDERS = ["row", "reverse-row", "col", "reverse-col"]

OUTPUT_FORMATS = ["csv", "json"]


class RunConfig(BaseModel):
    """One experiment cell matrix; echoed into every output file"""

    kernel: str = "sum"
    schemes: List[str] = ["naive", "rebits", "oracle"]
    format: str = config.DEFAULT_FORMAT
    n: Optional[int] = None
    seed: int = config.DEFAULT_SEED
    policy: str = "none"
    orders: List[str] = ORDERS
    partitions: int = config.DEFAULT_PARTITIONS
    # partition threads; excluded from the echoed config
    workers: int = Field(default=config.DEFAULT_WORKERS, exclude=True)
    paths: int = config.MC_PATHS
    steps: int = config.INTEGRATION_STEPS
    x_max: float = config.INTEGRATION_X_MAX
    samples: int = config.INTEGRATION_SAMPLES
    rows: int = config.GRID_ROWS
    cols: int = config.GRID_COLS
    sweep: List[int] = config.NBODY_SWEEP
    engine: str = config.REBITS_ENGINE
    # verify-adder only; None checks every mode where the format allows it
    mode: Optional[str] = None
    out: str = "csv"
    output: Optional[str] = None

    @field_validator("kernel")
    @classmethod
    def _known_kernel(cls, v: str) -> str:
        if v not in KERNELS:
            raise ValueError(f"Unknown kernel: {v}. Valid options: {KERNELS}")
        return v

    @field_validator("format")
    @classmethod
    def _known_format(cls, v: str) -> str:
        if v not in FORMATS:
            raise ValueError(f"Unknown format: {v}. Valid options: {list(FORMATS.keys())}")
        return v

    @field_validator("orders")
    @classmethod
    def _known_orders(cls, v: List[str]) -> List[str]:
        unknown = [order for order in v if order not in ORDERS]
        if unknown:
            raise ValueError(f"Unknown traversal orders: {unknown}. Valid options: {ORDERS}")
        return v

    @field_validator("engine")
    @classmethod
    def _known_engine(cls, v: str) -> str:
        if v not in ("softfp", "host"):
            raise ValueError(f"Unknown engine: {v}")
        return v

    @field_validator("mode")
    @classmethod
    def _known_mode(cls, v: Optional[str]) -> Optional[str]:
        if v is not None:
            RoundingMode(v)
        return v

    @field_validator("policy")
    @classmethod
    def _known_policy(cls, v: str) -> str:
        FoldPolicy.parse(v)
        return v

    @field_validator("out")
    @classmethod
    def _known_output(cls, v: str) -> str:
        if v not in OUTPUT_FORMATS:
            raise ValueError(f"Unknown output format: {v}. Valid options: {OUTPUT_FORMATS}")
        return v

    @field_validator("n", "partitions", "workers", "paths", "steps", "samples", "rows", "cols")
    @classmethod
    def _positive(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"Must be >= 1, got {v}")
        return v

    @field_validator("x_max")
    @classmethod
    def _positive_float(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"x_max must be > 0, got {v}")
        return v


class ResultRecord(BaseModel):
    """One (kernel, scheme, parameter point) measurement"""

    kernel: str
    scheme: str
    format: str
    n: int = 0
    seed: int = 0
    policy: str = ""
    order: str = ""
    partitions: int = 1
    value: Optional[float] = None
    abs_err: Optional[float] = None
    rel_err: Optional[float] = None
    fpadd: int = 0
    fpmult: int = 0
    fpdiv: int = 0
    fpcomp: int = 0
    move_fperr: int = 0
    error: Optional[str] = None
    note: str = ""

    @property
    def counters(self) -> OpCounters:
        return OpCounters(**{name: getattr(self, name) for name in COUNTER_FIELDS})

    def sort_key(self):
        return (self.kernel, self.format, self.n, self.seed, self.order, self.partitions, self.scheme, self.policy)


def measure(
    kernel: str,
    scheme: str,
    fmt: str,
    value,
    oracle,
    counters: Optional[OpCounters] = None,
    **params,
) -> ResultRecord:
    """Build a record; errors vs. the oracle are computed exactly, then rounded once"""
    counts = (counters or OpCounters()).as_dict()
    abs_err = rel_err = None
    if value is not None and oracle is not None:
        value_f, oracle_f = float(value), float(oracle)
        if math.isfinite(value_f) and math.isfinite(oracle_f):
            diff = abs(Fraction(value_f) - Fraction(oracle_f))
            abs_err = float(diff)
            if oracle_f != 0:
                rel_err = float(diff / abs(Fraction(oracle_f)))
    return ResultRecord(
        kernel=kernel,
        scheme=scheme,
        format=fmt,
        value=None if value is None else float(value),
        abs_err=abs_err,
        rel_err=rel_err,
        **counts,
        **params,
    )
