"""
Double-Double Kernels

dd-workload: a chain of dd_add calls standing in for a DD-add dominated
application; only its op counts are of interest.
dd-equivalence: native and rebits Double-Double arithmetic must agree
bitwise in both limbs.
"""

import asyncio
from typing import Callable, Dict, List, Optional

import numpy as np

from rebits import config
from rebits.arith import NativeArithmetic, RebitsArithmetic, SchemeVariant
from rebits.ddouble import DDouble, dd_add, dd_div, dd_mul, dd_normalize
from rebits.models import ResultRecord, RunConfig, measure
from rebits.opcount import CountScope, OpCounters
from rebits.softfp import BINARY64, FloatFormat, to_bits

DD_OPERATIONS: Dict[str, Callable] = {
    "add": dd_add,
    "mul": dd_mul,
    "div": dd_div,
}


def _bitwise_equal(x: DDouble, y: DDouble) -> bool:
    return to_bits(x.hi, BINARY64) == to_bits(y.hi, BINARY64) and to_bits(x.lo, BINARY64) == to_bits(y.lo, BINARY64)


class DoubleDoubleKernel:
    """
    Double-Double experiments

    Responsible for:
    - Seeded normalized operands
    - The dd_add workload op-count comparison
    - Native vs rebits bitwise equivalence for add, mul and div
    """

    def __init__(self):
        self.role = "Double-Double Arithmetic"

    def gen_operands(self, count: int, seed: int, exponent_range: int = 20) -> List[DDouble]:
        """
        hi = u * 2^k with u uniform in [-1, 1), k in [-range, range); lo = hi * u' * 2^-54,
        renormalized so |lo| <= ulp(hi) / 2. Zeros are replaced by 1.
        """
        rng = np.random.default_rng(seed)
        hi = rng.uniform(-1.0, 1.0, size=count) * np.exp2(rng.integers(-exponent_range, exponent_range, size=count))
        hi[hi == 0] = 1.0
        lo = hi * rng.uniform(-1.0, 1.0, size=count) * 2.0**-54
        return [dd_normalize(h, l) for h, l in zip(hi.tolist(), lo.tolist())]

    def dd_workload(self, calls: int, seed: int, engine: Optional[str] = None) -> List[ResultRecord]:
        """
        acc = dd_add(acc, x_i) for `calls` seeded operands, once per variant.
        The rebits fpadd count must be exactly 6/20 of the native one with
        4 move_fperr per call.
        """
        config.trace("DoubleDoubleKernel", f"workload: {calls} dd_add calls, seed={seed}")
        operands = self.gen_operands(calls, seed)
        results = {}
        for variant in SchemeVariant:
            scope = CountScope(f"dd-workload:{variant.value}")
            if variant is SchemeVariant.REBITS:
                arith = RebitsArithmetic(BINARY64, scope, engine)
            else:
                arith = NativeArithmetic(BINARY64, scope)
            acc = DDouble(0.0, 0.0)
            for x in operands:
                acc = dd_add(acc, x, arith, variant)
            results[variant] = (acc, scope.report())

        (native_acc, native), (rebits_acc, rebits) = results[SchemeVariant.NATIVE], results[SchemeVariant.REBITS]
        expected = OpCounters(fpadd=6 * calls, move_fperr=4 * calls)
        ratio_ok = rebits.fpadd * 20 == native.fpadd * 6 and rebits == expected and native == OpCounters(fpadd=20 * calls)
        same = _bitwise_equal(native_acc, rebits_acc)
        note = "PASS" if ratio_ok and same else f"FAIL: native {native.describe()}, rebits {rebits.describe()}, bitwise equal {same}"
        config.trace("DoubleDoubleKernel", f"workload: native {native.describe()}; rebits {rebits.describe()}")

        records = []
        for variant, (acc, counters) in results.items():
            record = measure("dd-workload", f"dd_add:{variant.value}", BINARY64.label, acc.hi, native_acc.hi, counters, n=calls, seed=seed)
            records.append(record.model_copy(update={"note": note}))
        return records

    def dd_equivalence(self, pairs: int, seed: int, engine: Optional[str] = None) -> List[ResultRecord]:
        """One record per operation; value is the number of mismatching pairs"""
        config.trace("DoubleDoubleKernel", f"equivalence: {pairs} pairs per operation, seed={seed}")
        xs = self.gen_operands(pairs, seed)
        ys = self.gen_operands(pairs, seed + 1)
        native = NativeArithmetic(BINARY64)
        rebits = RebitsArithmetic(BINARY64, engine=engine)

        records = []
        for name, operation in DD_OPERATIONS.items():
            mismatches = 0
            first = None
            for x, y in zip(xs, ys):
                expected = operation(x, y, native, SchemeVariant.NATIVE)
                actual = operation(x, y, rebits, SchemeVariant.REBITS)
                if not _bitwise_equal(expected, actual):
                    mismatches += 1
                    if first is None:
                        first = f"x=({x.hi.hex()}, {x.lo.hex()}) y=({y.hi.hex()}, {y.lo.hex()})"
            note = "PASS" if mismatches == 0 else f"FAIL: {mismatches} mismatches, first {first}"
            config.trace("DoubleDoubleKernel", f"dd_{name}: {note}")
            records.append(
                ResultRecord(
                    kernel="dd-equivalence",
                    scheme=f"dd_{name}",
                    format=BINARY64.label,
                    n=pairs,
                    seed=seed,
                    value=float(mismatches),
                    note=note,
                )
            )
        return records

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List) -> List[ResultRecord]:
        """dd-workload or dd-equivalence; both always run in binary64 and ignore the scheme list"""
        if cfg.kernel == "dd-workload":
            return await asyncio.to_thread(self.dd_workload, cfg.n or config.DD_WORKLOAD_CALLS, cfg.seed, cfg.engine)
        return await asyncio.to_thread(self.dd_equivalence, cfg.n or config.DD_EQUIVALENCE_PAIRS, cfg.seed, cfg.engine)
