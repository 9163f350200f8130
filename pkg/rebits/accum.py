"""
Folding Accumulation and the Exact Oracle

FloatErr is the (val, err) programming model: every addition to `val`
hands its exact error to a plain running `err`, which is folded back into
`val` on a schedule. ExactAccumulator is a wide fixed-point integer that
sums any number of finite values without rounding; it is the gold
standard every kernel is measured against.
"""

import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Tuple

from rebits import config
from rebits.arith import NativeArithmetic, RebitsArithmetic, SchemeVariant
from rebits.eft import two_sum
from rebits.errors import AccumulatorOverflowError, NonFiniteInputError, PoisonedAccumulatorError
from rebits.opcount import CountScope, OpCounters
from rebits.softfp import BINARY64, RNE, FloatFormat, PackedFloat, round_pack


# ===== FLOATERR =====


@dataclass(frozen=True)
class FloatErr:
    """A running value plus the accumulated rounding error of its additions"""

    val: object
    err: object
    # elements absorbed so far; poisoned_at is the index of the first one
    # that drove val non-finite
    seen: int = 0
    poisoned_at: Optional[int] = None

    @classmethod
    def zero(cls, arith: NativeArithmetic) -> "FloatErr":
        return cls(arith.zero, arith.zero)

    @property
    def poisoned(self) -> bool:
        return self.poisoned_at is not None


class ErrMerge(str, Enum):
    """How fe_add_fe combines the operands' errors"""

    SUM = "sum"  # err' = (a.err + b.err) + FPERR
    FPERR_ONLY = "fperr"  # err' = FPERR


@dataclass(frozen=True)
class FoldPolicy:
    """When to fold err back into val; finalize always folds once more"""

    k: Optional[int] = None

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError(f"Fold interval must be >= 1, got {self.k}")

    @classmethod
    def none(cls) -> "FoldPolicy":
        return cls(None)

    @classmethod
    def every_k(cls, k: int) -> "FoldPolicy":
        return cls(int(k))

    @classmethod
    def parse(cls, text: str) -> "FoldPolicy":
        """Accepts 'none', 'fold=1000', 'every_k(1000)' or a bare interval"""
        text = text.strip().lower()
        if text in ("none", "fold=none", ""):
            return cls.none()
        match = re.fullmatch(r"(?:fold=|every_k\()?(\d+)\)?", text)
        if match is None:
            raise ValueError(f"Invalid fold policy: {text!r}")
        return cls.every_k(int(match.group(1)))

    @property
    def is_none(self) -> bool:
        return self.k is None

    def __str__(self) -> str:
        return "none" if self.k is None else f"fold={self.k}"


@dataclass(frozen=True)
class FoldStats:
    folds: int = 0
    counters: OpCounters = field(default_factory=OpCounters)


def _default_arith(arith: Optional[NativeArithmetic]) -> RebitsArithmetic:
    if arith is None:
        return RebitsArithmetic(BINARY64)
    if not isinstance(arith, RebitsArithmetic):
        raise ValueError(f"FloatErr accumulation needs a RebitsArithmetic backend, got {arith!r}")
    return arith


def fe_add_scalar(acc: FloatErr, x, arith: Optional[RebitsArithmetic] = None) -> FloatErr:
    """val' = val + x; err' = err + FPERR (the error of the err add is dropped)"""
    arith = _default_arith(arith)
    s, e = arith.add_err(acc.val, x)
    err = arith.add(acc.err, e)
    poisoned_at = acc.poisoned_at
    if poisoned_at is None and not math.isfinite(s):
        poisoned_at = acc.seen
    return FloatErr(s, err, acc.seen + 1, poisoned_at)


def fe_add_fe(
    a: FloatErr, b: FloatErr, arith: Optional[RebitsArithmetic] = None, merge: ErrMerge = ErrMerge.SUM
) -> FloatErr:
    arith = _default_arith(arith)
    s, e = arith.add_err(a.val, b.val)
    if merge is ErrMerge.FPERR_ONLY:
        err = e
    else:
        err = arith.add(arith.add(a.err, b.err), e)

    if a.poisoned_at is not None:
        poisoned_at = a.poisoned_at
    elif b.poisoned_at is not None:
        poisoned_at = a.seen + b.poisoned_at
    elif not math.isfinite(s):
        poisoned_at = max(a.seen + b.seen - 1, 0)
    else:
        poisoned_at = None
    return FloatErr(s, err, a.seen + b.seen, poisoned_at)


def fold(acc: FloatErr, arith: Optional[RebitsArithmetic] = None) -> FloatErr:
    """val' = val + err; err' = FPERR, the residual below val's precision"""
    arith = _default_arith(arith)
    s, e = arith.add_err(acc.val, acc.err)
    poisoned_at = acc.poisoned_at
    if poisoned_at is None and not math.isfinite(s):
        poisoned_at = max(acc.seen - 1, 0)
    return replace(acc, val=s, err=e, poisoned_at=poisoned_at)


def finalize(acc: FloatErr, arith: Optional[NativeArithmetic] = None):
    """val + err, or PoisonedAccumulatorError naming the first non-finite element"""
    arith = arith or NativeArithmetic(BINARY64)
    if acc.poisoned_at is not None:
        raise PoisonedAccumulatorError(acc.poisoned_at, acc.val)
    return arith.add(acc.val, acc.err)


def accumulate(
    v: Iterable, policy: FoldPolicy = FoldPolicy(), arith: Optional[RebitsArithmetic] = None, start: Optional[FloatErr] = None
) -> Tuple[FloatErr, int]:
    """Run the folding loop without the terminal add; returns (state, folds)"""
    arith = _default_arith(arith)
    acc = start if start is not None else FloatErr.zero(arith)
    k = policy.k
    folds = 0
    for i, x in enumerate(v, 1):
        acc = fe_add_scalar(acc, x, arith)
        if k is not None and i % k == 0:
            acc = fold(acc, arith)
            folds += 1
    return acc, folds


def sum_with_policy(
    v: Iterable, policy: FoldPolicy = FoldPolicy(), arith: Optional[RebitsArithmetic] = None
) -> Tuple[object, FoldStats]:
    """
    Sum of positive numbers with folding:

        for x in v:
            sum = sum + x; err = err + FPERR
            every k elements: sum = sum + err; err = FPERR
        result = sum + err
    """
    arith = _default_arith(arith)
    scope = CountScope("sum_with_policy", parent=arith.scope)
    local = arith.with_scope(scope)
    acc, folds = accumulate(v, policy, local)
    value = finalize(acc, local)
    arith.flag_mask |= local.flag_mask
    return value, FoldStats(folds, scope.report())


def sum2_cascade(v: Iterable, arith: Optional[NativeArithmetic] = None):
    """Cascaded Knuth two_sum with plainly summed errors"""
    arith = arith or NativeArithmetic(BINARY64)
    s = arith.zero
    sigma = arith.zero
    for x in v:
        s, q = two_sum(s, x, arith, SchemeVariant.NATIVE)
        sigma = arith.add(sigma, q)
    return arith.add(s, sigma)


# ===== EXACT ACCUMULATOR =====


def exact_width(fmt: FloatFormat) -> int:
    """Declared two's-complement width: dynamic range + 2p + guard bits"""
    return (fmt.emax - fmt.emin) + 2 * fmt.precision + config.EXACT_GUARD_BITS


@dataclass(frozen=True)
class ExactAccumulator:
    """
    Fixed-point sum in units of the smallest subnormal of `fmt`.

    Any finite value of `fmt` (or of a narrower format) is an integer
    multiple of that unit, so accumulation never rounds.
    """

    fmt: FloatFormat = BINARY64
    units: int = 0
    count: int = 0

    @property
    def lsb_exponent(self) -> int:
        return self.fmt.emin - self.fmt.frac_bits

    @property
    def width(self) -> int:
        return exact_width(self.fmt)

    def is_zero(self) -> bool:
        return self.units == 0


def _to_units(x, acc: ExactAccumulator) -> int:
    value = float(x)
    if not math.isfinite(value):
        raise NonFiniteInputError(f"Exact accumulator rejects non-finite input {x!r}")
    num, den = value.as_integer_ratio()
    shift = -acc.lsb_exponent - (den.bit_length() - 1)
    if shift < 0:
        raise ValueError(f"{x!r} is finer than the {acc.fmt.label} accumulator resolution")
    return num << shift


def _checked(acc: ExactAccumulator, units: int, count: int) -> ExactAccumulator:
    if units.bit_length() >= acc.width:
        raise AccumulatorOverflowError(f"Exact accumulator exceeded {acc.width} bits after {count} additions")
    return ExactAccumulator(acc.fmt, units, count)


def exact_add(acc: ExactAccumulator, x) -> ExactAccumulator:
    return _checked(acc, acc.units + _to_units(x, acc), acc.count + 1)


def exact_sum(values: Iterable, fmt: FloatFormat = BINARY64) -> ExactAccumulator:
    """Accumulate a whole sequence"""
    acc = ExactAccumulator(fmt)
    units = 0
    count = 0
    for x in values:
        units += _to_units(x, acc)
        count += 1
    return _checked(acc, units, count)


def exact_merge(a: ExactAccumulator, b: ExactAccumulator) -> ExactAccumulator:
    if a.fmt != b.fmt:
        raise ValueError(f"Cannot merge {a.fmt.label} and {b.fmt.label} accumulators")
    return _checked(a, a.units + b.units, a.count + b.count)


def exact_round_packed(acc: ExactAccumulator, fmt: FloatFormat) -> PackedFloat:
    """Nearest-even rounding of the exact sum into any format"""
    packed, _ = round_pack(fmt, -1 if acc.units < 0 else 1, acc.lsb_exponent, abs(acc.units), RNE)
    return packed


def exact_round(acc: ExactAccumulator, fmt: Optional[FloatFormat] = None):
    """Nearest-even rounding of the exact sum to a host scalar; overflow gives infinity"""
    return exact_round_packed(acc, fmt or acc.fmt).to_float()


def to_fraction(acc: ExactAccumulator) -> Fraction:
    return Fraction(acc.units) * Fraction(2) ** acc.lsb_exponent


def exact_round_sqrt(acc: ExactAccumulator, fmt: Optional[FloatFormat] = None):
    """Correctly rounded square root of the exact (non-negative) sum"""
    fmt = fmt or acc.fmt
    if acc.units < 0:
        raise ValueError("Square root of a negative exact sum")
    units, exponent = acc.units, acc.lsb_exponent
    if units == 0:
        return exact_round_packed(acc, fmt).to_float()
    if exponent % 2:
        units <<= 1
        exponent -= 1
    # widen until the root carries precision + 2 bits, then keep a sticky bit
    extra = max(0, 2 * (fmt.precision + 2) - units.bit_length() + 1)
    extra += extra % 2
    units <<= extra
    exponent -= extra
    root = math.isqrt(units)
    sticky = 1 if root * root != units else 0
    packed, _ = round_pack(fmt, 1, exponent // 2 - 1, (root << 1) | sticky, RNE)
    return packed.to_float()
