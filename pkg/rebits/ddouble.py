"""
Double-Double Arithmetic

An unevaluated sum hi + lo of two binary64 values with |lo| <= 1/2 ulp(hi).
The algorithms follow the reference double-double library (IEEE-style
addition, Dekker-split multiplication, long-form division without FMA).
The rebits variant only swaps each error-inferring two_sum / quick_sum for
an add with FPERR read; results are bitwise identical.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from rebits.arith import NativeArithmetic, SchemeVariant
from rebits.eft import resolve_backend, fast_two_sum, two_prod, two_sum


@dataclass(frozen=True)
class DDouble:
    hi: float
    lo: float = 0.0

    def to_fraction(self) -> Fraction:
        return Fraction(self.hi) + Fraction(self.lo)

    def is_normalized(self) -> bool:
        return (self.hi == 0 and self.lo == 0) or self.hi + self.lo == self.hi

    def __iter__(self):
        yield self.hi
        yield self.lo


def dd_normalize(hi, lo, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    """Renormalize with a two_sum (magnitudes need not be ordered)"""
    s, e = two_sum(hi, lo, arith, variant)
    return DDouble(s, e)


def dd_negate(x: DDouble) -> DDouble:
    return DDouble(-x.hi, -x.lo)


def dd_add(x: DDouble, y: DDouble, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    """
    IEEE double-double addition.

        s1, s2 = two_sum(x.hi, y.hi)
        t1, t2 = two_sum(x.lo, y.lo)
        s2 += t1;  s1, s2 = quick_sum(s1, s2)
        s2 += t2;  s1, s2 = quick_sum(s1, s2)

    native: 20 fpadd. rebits: 6 fpadd, 4 move.
    """
    arith, variant = resolve_backend(arith, variant)
    s1, s2 = two_sum(x.hi, y.hi, arith, variant)
    t1, t2 = two_sum(x.lo, y.lo, arith, variant)
    s2 = arith.add(s2, t1)
    s1, s2 = fast_two_sum(s1, s2, arith, variant)
    s2 = arith.add(s2, t2)
    s1, s2 = fast_two_sum(s1, s2, arith, variant)
    return DDouble(s1, s2)


def dd_sub(x: DDouble, y: DDouble, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    return dd_add(x, dd_negate(y), arith, variant)


def dd_add_d(x: DDouble, b, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    """Double-double plus double: two_sum, one add, quick_sum (10 fpadd, or 3 fpadd + 2 move)"""
    arith, variant = resolve_backend(arith, variant)
    s1, s2 = two_sum(x.hi, b, arith, variant)
    s2 = arith.add(s2, x.lo)
    s1, s2 = fast_two_sum(s1, s2, arith, variant)
    return DDouble(s1, s2)


def mul_dd_d(x: DDouble, b, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    """Double-double times double (8 fpmult; 14 fpadd, or 12 fpadd + 1 move)"""
    arith, variant = resolve_backend(arith, variant)
    p1, p2 = two_prod(x.hi, b, arith)
    p2 = arith.add(p2, arith.mul(x.lo, b))
    p1, p2 = fast_two_sum(p1, p2, arith, variant)
    return DDouble(p1, p2)


def dd_mul(x: DDouble, y: DDouble, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    """
    Double-double product: two_prod of the hi parts, both cross terms, quick_sum.

    native: 9 fpmult, 15 fpadd. rebits: 9 fpmult, 13 fpadd, 1 move.
    """
    arith, variant = resolve_backend(arith, variant)
    p1, p2 = two_prod(x.hi, y.hi, arith)
    cross = arith.add(arith.mul(x.hi, y.lo), arith.mul(x.lo, y.hi))
    p2 = arith.add(p2, cross)
    p1, p2 = fast_two_sum(p1, p2, arith, variant)
    return DDouble(p1, p2)


def dd_div(x: DDouble, y: DDouble, arith: Optional[NativeArithmetic] = None, variant: Optional[SchemeVariant] = None) -> DDouble:
    """
    Long-form double-double division with two correction steps.

        q1 = x.hi / y.hi;  r = x - q1 * y
        q2 = r.hi / y.hi;  r = r - q2 * y
        q3 = r.hi / y.hi
        q1, q2 = quick_sum(q1, q2);  result = (q1, q2) + q3

    native: 3 fpdiv, 16 fpmult, 81 fpadd.
    rebits: 3 fpdiv, 16 fpmult, 40 fpadd, 13 move.
    """
    arith, variant = resolve_backend(arith, variant)
    q1 = arith.div(x.hi, y.hi)
    r = dd_sub(x, mul_dd_d(y, q1, arith, variant), arith, variant)

    q2 = arith.div(r.hi, y.hi)
    r = dd_sub(r, mul_dd_d(y, q2, arith, variant), arith, variant)

    q3 = arith.div(r.hi, y.hi)

    q1, q2 = fast_two_sum(q1, q2, arith, variant)
    return dd_add_d(DDouble(q1, q2), q3, arith, variant)
