"""
Tests for FloatErr accumulation, fold policies and the exact accumulator
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from rebits.accum import (
    ErrMerge,
    ExactAccumulator,
    FloatErr,
    FoldPolicy,
    accumulate,
    exact_add,
    exact_merge,
    exact_round,
    exact_round_sqrt,
    exact_sum,
    exact_width,
    fe_add_fe,
    fe_add_scalar,
    finalize,
    fold,
    sum2_cascade,
    sum_with_policy,
    to_fraction,
)
from rebits.arith import NativeArithmetic, RebitsArithmetic
from rebits.errors import AccumulatorOverflowError, NonFiniteInputError, PoisonedAccumulatorError
from rebits.opcount import CountScope, OpCounters
from rebits.softfp import BINARY32, BINARY64


def stalled_vector():
    return [np.float32(2.0**24)] + [np.float32(1.0)] * 100


@pytest.mark.parametrize("engine", ["softfp", "host"])
def test_errors_recover_what_val_drops(engine):
    arith = RebitsArithmetic(BINARY32, engine=engine)
    acc = FloatErr.zero(arith)
    for x in stalled_vector():
        acc = fe_add_scalar(acc, x, arith)
    assert acc.val == np.float32(2.0**24)
    assert acc.err == np.float32(100.0)
    assert acc.seen == 101
    assert finalize(acc, arith) == np.float32(16777316.0)


def test_sum_with_policy_counts():
    """One fpadd + one move per element over naive, plus the final fold"""
    n = 100
    v = [np.float32(1.0)] * n
    scope = CountScope("test")
    value, stats = sum_with_policy(v, FoldPolicy.none(), RebitsArithmetic(BINARY32, scope))
    assert value == np.float32(n)
    assert stats.folds == 0
    assert stats.counters == OpCounters(fpadd=2 * n + 1, move_fperr=n)
    assert scope.report() == stats.counters

    _, stats = sum_with_policy(v, FoldPolicy.every_k(10), RebitsArithmetic(BINARY32))
    assert stats.folds == 10
    assert stats.counters == OpCounters(fpadd=2 * n + 1 + 10, move_fperr=n + 10)


def test_fold_preserves_the_exact_value():
    arith = RebitsArithmetic(BINARY64)
    acc = FloatErr(1.0, 2.0**-60 + 2.0**-100)
    folded = fold(acc, arith)
    assert Fraction(folded.val) + Fraction(folded.err) == Fraction(acc.val) + Fraction(acc.err)
    assert folded.val == 1.0


@pytest.mark.parametrize("fmt", [BINARY64, BINARY32])
def test_unfolded_sum_matches_cascaded_two_sum(fmt):
    """No-fold accumulation is bitwise the Sum2 cascade"""
    rng = np.random.default_rng(2)
    native = NativeArithmetic(fmt)
    rebits = RebitsArithmetic(fmt, engine="softfp")
    for _ in range(30):
        size = int(rng.integers(1, 120))
        v = [native.cast(x) for x in (rng.standard_normal(size) * np.exp2(rng.integers(-20, 20, size=size))).tolist()]
        value, _ = sum_with_policy(v, FoldPolicy.none(), rebits)
        cascade = sum2_cascade(v, native)
        assert value == cascade
        assert math.copysign(1.0, float(value)) == math.copysign(1.0, float(cascade))


def test_accumulate_resumes_from_a_start_state():
    arith = RebitsArithmetic(BINARY64)
    v = [float(i) for i in range(1, 51)]
    whole, _ = accumulate(v, FoldPolicy.none(), arith)
    head, _ = accumulate(v[:20], FoldPolicy.none(), arith)
    tail, _ = accumulate(v[20:], FoldPolicy.none(), arith, start=head)
    assert (tail.val, tail.err, tail.seen) == (whole.val, whole.err, whole.seen)


def test_fe_add_fe_merge_modes():
    arith = RebitsArithmetic(BINARY64)
    a = FloatErr(1.0, 2.0**-60, seen=3)
    b = FloatErr(2.0**-53, 2.0**-70, seen=2)

    merged = fe_add_fe(a, b, arith, ErrMerge.SUM)
    assert merged.seen == 5
    assert Fraction(merged.val) + Fraction(merged.err) == (
        Fraction(a.val) + Fraction(a.err) + Fraction(b.val) + Fraction(b.err)
    )

    fperr_only = fe_add_fe(a, b, arith, ErrMerge.FPERR_ONLY)
    assert fperr_only.val == merged.val
    assert fperr_only.err == 2.0**-53


def test_poisoned_accumulator_names_the_first_bad_element():
    arith = RebitsArithmetic(BINARY32)
    v = [np.float32(3e38), np.float32(3e38), np.float32(1.0)]
    acc, _ = accumulate(v, FoldPolicy.none(), arith)
    assert acc.poisoned_at == 1
    with pytest.raises(PoisonedAccumulatorError) as excinfo:
        finalize(acc, arith)
    assert excinfo.value.index == 1


def test_fold_policy_parse():
    assert FoldPolicy.parse("none").is_none
    assert FoldPolicy.parse("fold=1000").k == 1000
    assert FoldPolicy.parse("every_k(100)").k == 100
    assert FoldPolicy.parse("7").k == 7
    assert str(FoldPolicy.every_k(5)) == "fold=5"
    assert str(FoldPolicy.none()) == "none"
    with pytest.raises(ValueError):
        FoldPolicy.parse("sometimes")
    with pytest.raises(ValueError):
        FoldPolicy.parse("fold=0")


def test_native_backend_rejected():
    with pytest.raises(ValueError):
        fe_add_scalar(FloatErr(0.0, 0.0), 1.0, NativeArithmetic(BINARY64))


# ===== EXACT ACCUMULATOR =====


def test_exact_sum_and_rounding():
    acc = exact_sum([1e16, 1.0, -1e16])
    assert acc.count == 3
    assert exact_round(acc) == 1.0
    assert to_fraction(acc) == 1

    acc = exact_sum([1.0, 2.0**-30])
    assert exact_round(acc) == 1.0 + 2.0**-30
    assert exact_round(acc, BINARY32) == np.float32(1.0)


def test_exact_sum_is_order_independent():
    rng = np.random.default_rng(9)
    v = (rng.standard_normal(1000) * np.exp2(rng.integers(-60, 60, size=1000))).tolist()
    assert exact_sum(v).units == exact_sum(v[::-1]).units
    assert exact_sum(v).units == exact_sum(sorted(v)).units


def test_exact_add_and_merge():
    left = exact_add(exact_add(ExactAccumulator(), 0.5), 0.25)
    right = exact_sum([0.125])
    merged = exact_merge(left, right)
    assert merged.count == 3
    assert exact_round(merged) == 0.875


def test_exact_accumulator_rejects_non_finite():
    with pytest.raises(NonFiniteInputError):
        exact_add(ExactAccumulator(), math.inf)
    with pytest.raises(NonFiniteInputError):
        exact_sum([1.0, math.nan])


def test_exact_accumulator_overflow():
    half = ExactAccumulator(BINARY64, units=1 << (exact_width(BINARY64) - 2))
    with pytest.raises(AccumulatorOverflowError):
        exact_merge(half, half)


def test_exact_round_sqrt():
    assert exact_round_sqrt(exact_sum([9.0, 16.0])) == 5.0
    assert exact_round_sqrt(exact_sum([2.0])) == math.sqrt(2.0)
    assert exact_round_sqrt(exact_sum([2.0]), BINARY32) == np.sqrt(np.float32(2.0))
    assert exact_round_sqrt(ExactAccumulator()) == 0.0
    with pytest.raises(ValueError):
        exact_round_sqrt(exact_sum([-1.0]))
