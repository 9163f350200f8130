"""
Error-Free Transformations and Compensated Summation

Knuth two_sum, Dekker fast_two_sum and two_prod, Kahan and Priest
summation. Each summation algorithm has a native variant, which infers the
rounding error with extra additions, and a rebits variant, which reads it
from the adder.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, List, Optional, Tuple

from rebits.arith import NativeArithmetic, RebitsArithmetic, SchemeVariant
from rebits.softfp import BINARY64

# Deepest error-distillation level for the rebits Priest variant
PRIEST_MAX_LEVELS = 64


@dataclass(frozen=True)
class SumAndError:
    s: object
    e: object
    # two_prod only: the splitting constant overflowed
    overflow: bool = False

    def __iter__(self):
        yield self.s
        yield self.e


def resolve_backend(arith: Optional[NativeArithmetic], variant: Optional[SchemeVariant]) -> Tuple[NativeArithmetic, SchemeVariant]:
    if arith is None:
        arith = NativeArithmetic(BINARY64)
    variant = SchemeVariant(variant) if variant is not None else arith.variant
    if variant is SchemeVariant.REBITS and not isinstance(arith, RebitsArithmetic):
        raise ValueError(f"The rebits variant needs a RebitsArithmetic backend, got {arith!r}")
    return arith, variant


def two_sum(a, b, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> SumAndError:
    """Knuth: s = fl(a + b) and s + e == a + b exactly (6 fpadd, or 1 fpadd + 1 move)"""
    arith, variant = resolve_backend(arith, variant)
    if variant is SchemeVariant.REBITS:
        return SumAndError(*arith.add_err(a, b))
    s = arith.add(a, b)
    bb = arith.sub(s, a)
    e = arith.add(arith.sub(a, arith.sub(s, bb)), arith.sub(b, bb))
    return SumAndError(s, e)


def _is_exact(a, b, s, e) -> bool:
    """s + e == a + b in exact arithmetic; vacuous once anything is non-finite"""
    values = [float(x) for x in (a, b, s, e)]
    if not all(math.isfinite(x) for x in values):
        return True
    return Fraction(values[2]) + Fraction(values[3]) == Fraction(values[0]) + Fraction(values[1])


def fast_two_sum(a, b, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> SumAndError:
    """
    Dekker quick_sum (3 fpadd, or 1 fpadd + 1 move).

    Exact when |a| >= |b|, or more generally when a is an integer multiple
    of ulp(b); the double-double division hits the second case after its
    deliberate cancellations. The native variant asserts exactness, so a
    violated precondition fails loudly unless Python runs with -O.
    """
    arith, variant = resolve_backend(arith, variant)
    if variant is SchemeVariant.REBITS:
        return SumAndError(*arith.add_err(a, b))
    s = arith.add(a, b)
    e = arith.sub(b, arith.sub(s, a))
    assert _is_exact(a, b, s, e), f"quick_sum precondition violated: a={a!r}, b={b!r}"
    return SumAndError(s, e)


def kahan_step(s, c, x, arith: NativeArithmetic, variant: SchemeVariant):
    """
    native: y = x - c; t = s + y; c = (t - s) - y        (4 fpadd)
    rebits: y = x - c; (t, e) = s + y with FPERR; c = -e  (2 fpadd, 1 move)
    """
    y = arith.sub(x, c)
    if variant is SchemeVariant.REBITS:
        t, e = arith.add_err(s, y)
        return t, -e
    t = arith.add(s, y)
    return t, arith.sub(arith.sub(t, s), y)


def kahan_sum(v: Iterable, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None):
    """Kahan compensated sum; the compensation term is dropped at the end"""
    arith, variant = resolve_backend(arith, variant)
    s = arith.zero
    c = arith.zero
    for x in v:
        s, c = kahan_step(s, c, x, arith, variant)
    return s


def magnitude_order(v: Iterable, arith: NativeArithmetic) -> List:
    """
    Sort by decreasing magnitude, ties broken by decreasing value.

    Every comparison is an fpcomp. The order is total on non-NaN values,
    so any permutation of the same multiset sorts identically.
    """

    def compare(a, b) -> int:
        abs_a, abs_b = abs(a), abs(b)
        if arith.less(abs_b, abs_a):
            return -1
        if arith.less(abs_a, abs_b):
            return 1
        if arith.less(b, a):
            return -1
        if arith.less(a, b):
            return 1
        return 0

    return sorted(v, key=cmp_to_key(compare))


def priest_step(s, c, x, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None):
    """
    One accumulation step of doubly compensated summation: (s, c) <- (s, c) + x.

    native runs the full doubly compensated update (10 fpadd). rebits is a
    single add with FPERR read; `c` is then the exact error of this step
    alone, to be distilled by the caller.
    """
    arith, variant = resolve_backend(arith, variant)
    if variant is SchemeVariant.REBITS:
        return arith.add_err(s, x)
    y = arith.add(c, x)
    u = arith.sub(x, arith.sub(y, c))
    t = arith.add(y, s)
    w = arith.sub(y, arith.sub(t, s))
    z = arith.add(u, w)
    s_new = arith.add(t, z)
    c_new = arith.sub(z, arith.sub(s_new, t))
    return s_new, c_new


def _distill(values: List, arith: NativeArithmetic):
    """Accumulate `values` with FPERR reads; the errors become the next level"""
    level_sums = []
    level = values
    for _ in range(PRIEST_MAX_LEVELS):
        level = [x for x in magnitude_order(level, arith) if x != 0]
        if not level:
            break
        s = arith.zero
        errors = []
        for x in level:
            s, e = arith.add_err(s, x)
            if e != 0:
                errors.append(e)
        level_sums.append(s)
        level = errors
    else:
        # residual errors past the deepest level are added plainly
        tail = arith.zero
        for x in level:
            tail = arith.add(tail, x)
        level_sums.append(tail)

    result = arith.zero
    for s in reversed(level_sums):
        result = arith.add(s, result)
    return result


def priest_sum(v: Iterable, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None):
    """
    Priest doubly compensated summation over the magnitude-ordered input.

    rebits accumulates with one fpadd + one FPERR read per element and
    distills the collected errors by the same procedure until they vanish.
    """
    arith, variant = resolve_backend(arith, variant)
    if variant is SchemeVariant.REBITS:
        return _distill(list(v), arith)
    ordered = magnitude_order(v, arith)
    if not ordered:
        return arith.zero
    s = ordered[0]
    c = arith.zero
    for x in ordered[1:]:
        s, c = priest_step(s, c, x, arith, variant)
    return s


def split_constant(fmt) -> int:
    """Dekker splitter 2^ceil(p/2) + 1"""
    return (1 << math.ceil(fmt.precision / 2)) + 1


def split(a, arith: Optional[NativeArithmetic] = None) -> Tuple[object, object, bool]:
    """a == hi + lo with both halves fitting half the precision (1 fpmult, 3 fpadd)"""
    arith = arith or NativeArithmetic(BINARY64)
    t = arith.mul(arith.cast(split_constant(arith.fmt)), a)
    overflow = not math.isfinite(t)
    hi = arith.sub(t, arith.sub(t, a))
    lo = arith.sub(a, hi)
    return hi, lo, overflow


def two_prod(a, b, arith: Optional[NativeArithmetic] = None) -> SumAndError:
    """
    Dekker product: s = fl(a * b) and s + e == a * b exactly (7 fpmult, 10 fpadd).

    Always software: the adder has no multiplication error output.
    """
    arith = arith or NativeArithmetic(BINARY64)
    p = arith.mul(a, b)
    a_hi, a_lo, a_over = split(a, arith)
    b_hi, b_lo, b_over = split(b, arith)
    e = arith.sub(arith.mul(a_hi, b_hi), p)
    e = arith.add(e, arith.mul(a_hi, b_lo))
    e = arith.add(e, arith.mul(a_lo, b_hi))
    e = arith.add(e, arith.mul(a_lo, b_lo))
    return SumAndError(p, e, a_over or b_over)
