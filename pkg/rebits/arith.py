"""
Arithmetic Backends

Every instrumented algorithm runs against an explicit backend object:
NativeArithmetic is host IEEE-754 arithmetic (nearest-even), and
RebitsArithmetic adds `add_err`, the addition that also latches its exact
error. The backend owns the CountScope, so op accounting follows the
object through the call chain instead of living in global state.
"""

import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from rebits import config
from rebits.opcount import CountScope, OpKind
from rebits.softfp import (
    BINARY64,
    RNE,
    FloatFormat,
    RoundingMode,
    add_bits_with_err,
    from_bits,
    host_type,
    to_bits,
)

ENGINES = ("softfp", "host")


class SchemeVariant(str, Enum):
    """How an algorithm obtains addition errors"""

    NATIVE = "native"  # inferred by extra additions
    REBITS = "rebits"  # read from the adder (FPERR)


class NativeArithmetic:
    """Host arithmetic in one format, counting every operation into `scope`"""

    variant = SchemeVariant.NATIVE

    def __init__(self, fmt: FloatFormat = BINARY64, scope: Optional[CountScope] = None):
        self.fmt = fmt
        self.scope = scope
        self.scalar = host_type(fmt)
        self.zero = self.scalar(0.0)

    def _count(self, kind: OpKind, n: int = 1) -> None:
        if self.scope is not None:
            self.scope.record(kind, n)

    def with_scope(self, scope: Optional[CountScope]) -> "NativeArithmetic":
        return NativeArithmetic(self.fmt, scope)

    def cast(self, x):
        """Convert to this backend's host scalar (uncounted, rounds once)"""
        return self.scalar(x)

    def add(self, a, b):
        self._count(OpKind.FPADD)
        return a + b

    def sub(self, a, b):
        self._count(OpKind.FPADD)
        return a - b

    def mul(self, a, b):
        self._count(OpKind.FPMULT)
        return a * b

    def div(self, a, b):
        self._count(OpKind.FPDIV)
        return a / b

    def sqrt(self, a):
        # not part of the addition cost model
        if self.scalar is float:
            return math.sqrt(a)
        return self.scalar(np.sqrt(a))

    def less(self, a, b) -> bool:
        self._count(OpKind.FPCOMP)
        return bool(a < b)

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def abs(a):
        return abs(a)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.fmt.label})"


class RebitsArithmetic(NativeArithmetic):
    """
    Arithmetic on a REBits machine.

    `add_err` is one fpadd plus one FPERR read. The error comes from the
    emulated adder (engine "softfp") or from an uncounted host two_sum
    (engine "host"); both engines agree bitwise under nearest-even.
    Directed rounding modes always use the emulated adder, for plain adds too.
    """

    variant = SchemeVariant.REBITS

    def __init__(
        self,
        fmt: FloatFormat = BINARY64,
        scope: Optional[CountScope] = None,
        engine: Optional[str] = None,
        mode: RoundingMode = RNE,
    ):
        super().__init__(fmt, scope)
        self.engine = engine or config.REBITS_ENGINE
        if self.engine not in ENGINES:
            raise ValueError(f"Unknown engine: {self.engine}. Valid options: {list(ENGINES)}")
        self.mode = mode
        # OR of every flag mask the emulated adder has produced
        self.flag_mask = 0

    def with_scope(self, scope: Optional[CountScope]) -> "RebitsArithmetic":
        return RebitsArithmetic(self.fmt, scope, self.engine, self.mode)

    def _softfp_add(self, a, b) -> Tuple[object, object]:
        sum_bits, err_bits, mask = add_bits_with_err(self.fmt, to_bits(a, self.fmt), to_bits(b, self.fmt), self.mode)
        self.flag_mask |= mask
        return from_bits(sum_bits, self.fmt), from_bits(err_bits, self.fmt)

    def add(self, a, b):
        if self.mode is RNE:
            return super().add(a, b)
        self._count(OpKind.FPADD)
        return self._softfp_add(a, b)[0]

    def sub(self, a, b):
        if self.mode is RNE:
            return super().sub(a, b)
        self._count(OpKind.FPADD)
        return self._softfp_add(a, -b)[0]

    def add_err(self, a, b) -> Tuple[object, object]:
        """(fl(a + b), exact error); err is +0 when the sum is not finite"""
        self._count(OpKind.FPADD)
        self._count(OpKind.MOVE_FPERR)
        if self.engine == "softfp" or self.mode is not RNE:
            return self._softfp_add(a, b)
        s = a + b
        if not math.isfinite(s):
            return s, self.zero
        bb = s - a
        e = (a - (s - bb)) + (b - bb)
        return s, (e if e != 0 else self.zero)


def make_arithmetic(
    variant: SchemeVariant,
    fmt: FloatFormat = BINARY64,
    scope: Optional[CountScope] = None,
    engine: Optional[str] = None,
) -> NativeArithmetic:
    if SchemeVariant(variant) is SchemeVariant.REBITS:
        return RebitsArithmetic(fmt, scope, engine)
    return NativeArithmetic(fmt, scope)
