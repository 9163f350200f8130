"""
REBits Core Module
"""

from .config import *
from .errors import (
    RebitsError,
    FormatMismatchError,
    NonFiniteInputError,
    AccumulatorOverflowError,
    PoisonedAccumulatorError,
    UsageError,
)
from .softfp import (
    FloatFormat,
    PackedFloat,
    Unpacked,
    RoundingMode,
    AddFlags,
    AddResult,
    BINARY16,
    BINARY32,
    BINARY64,
    E5M2,
    get_format,
    unpack,
    pack,
    round_pack,
    add_with_err,
)
from .opcount import OpKind, OpCounters, CountScope
from .arith import SchemeVariant, NativeArithmetic, RebitsArithmetic, make_arithmetic
from .eft import SumAndError, two_sum, fast_two_sum, kahan_sum, priest_sum, two_prod
from .accum import (
    FloatErr,
    FoldPolicy,
    ErrMerge,
    ExactAccumulator,
    fe_add_scalar,
    fe_add_fe,
    fold,
    finalize,
    sum_with_policy,
    exact_add,
    exact_sum,
    exact_round,
)
from .ddouble import DDouble, dd_normalize, dd_negate, dd_add, dd_sub, dd_mul, dd_div
