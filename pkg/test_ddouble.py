"""
Tests for double-double arithmetic and its rebits variant
"""

from fractions import Fraction

import numpy as np
import pytest

from rebits.arith import NativeArithmetic, RebitsArithmetic, SchemeVariant
from rebits.ddouble import DDouble, dd_add, dd_add_d, dd_div, dd_mul, dd_normalize, dd_sub, mul_dd_d
from rebits.opcount import CountScope, OpCounters
from rebits.softfp import BINARY64, to_bits

from kernels import DoubleDoubleKernel

X = DDouble(1.0, 2.0**-60)
Y = DDouble(0.3333333333333333, 1.850371707708594e-17)


def counted(operation, variant, *args):
    scope = CountScope(operation.__name__)
    if variant is SchemeVariant.REBITS:
        arith = RebitsArithmetic(BINARY64, scope, "softfp")
    else:
        arith = NativeArithmetic(BINARY64, scope)
    operation(*args, arith, variant)
    return scope.report()


@pytest.mark.parametrize(
    "operation, args, native, rebits",
    [
        (dd_add, (X, Y), OpCounters(fpadd=20), OpCounters(fpadd=6, move_fperr=4)),
        (dd_mul, (X, Y), OpCounters(fpmult=9, fpadd=15), OpCounters(fpmult=9, fpadd=13, move_fperr=1)),
        (
            dd_div,
            (X, Y),
            OpCounters(fpdiv=3, fpmult=16, fpadd=81),
            OpCounters(fpdiv=3, fpmult=16, fpadd=40, move_fperr=13),
        ),
        (dd_add_d, (X, 0.75), OpCounters(fpadd=10), OpCounters(fpadd=3, move_fperr=2)),
        (mul_dd_d, (X, 0.75), OpCounters(fpmult=8, fpadd=14), OpCounters(fpmult=8, fpadd=12, move_fperr=1)),
    ],
)
def test_operation_counts(operation, args, native, rebits):
    assert counted(operation, SchemeVariant.NATIVE, *args) == native
    assert counted(operation, SchemeVariant.REBITS, *args) == rebits


def test_add_keeps_the_low_word():
    assert dd_add(DDouble(1.0), DDouble(2.0**-80)) == DDouble(1.0, 2.0**-80)
    assert dd_sub(X, X) == DDouble(0.0, 0.0)


def test_mul_is_exact_when_representable():
    x = DDouble(1.0 + 2.0**-30)
    assert dd_mul(x, x) == DDouble(1.0 + 2.0**-29, 2.0**-60)


def test_div_accuracy():
    q = dd_div(DDouble(1.0), DDouble(3.0))
    assert q.is_normalized()
    assert abs(q.to_fraction() - Fraction(1, 3)) / Fraction(1, 3) < Fraction(1, 10**30)


def test_normalize():
    assert dd_normalize(1.0, 2.0**-53) == DDouble(1.0, 2.0**-53)
    assert dd_normalize(2.0**-53, 1.0) == DDouble(1.0, 2.0**-53)


def random_dd(rng, count):
    hi = rng.uniform(-1.0, 1.0, size=count) * np.exp2(rng.integers(-20, 20, size=count))
    lo = hi * rng.uniform(-1.0, 1.0, size=count) * 2.0**-54
    return [dd_normalize(h, l) for h, l in zip(hi.tolist(), lo.tolist())]


@pytest.mark.parametrize("operation", [dd_add, dd_mul, dd_div])
def test_rebits_variant_is_bitwise_identical(operation):
    rng = np.random.default_rng(4)
    xs, ys = random_dd(rng, 200), random_dd(rng, 200)
    native = NativeArithmetic(BINARY64)
    rebits = RebitsArithmetic(BINARY64, engine="softfp")
    for x, y in zip(xs, ys):
        a = operation(x, y, native)
        b = operation(x, y, rebits)
        assert [to_bits(v, BINARY64) for v in a] == [to_bits(v, BINARY64) for v in b]
        assert a.is_normalized()


@pytest.mark.parametrize(
    "operation, exact",
    [
        (dd_add, lambda x, y: x + y),
        (dd_mul, lambda x, y: x * y),
        (dd_div, lambda x, y: x / y),
    ],
)
def test_accuracy_against_rationals(operation, exact):
    kernel = DoubleDoubleKernel()
    xs, ys = kernel.gen_operands(500, 8), kernel.gen_operands(500, 9)
    bound = Fraction(1, 2**104)
    for x, y in zip(xs, ys):
        expected = exact(x.to_fraction(), y.to_fraction())
        result = operation(x, y)
        assert abs(result.to_fraction() - expected) <= bound * abs(expected)
