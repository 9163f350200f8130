"""
Adder Verification Kernel

Checks the emulated adder two ways:

- exhaustive: every ordered pair of bit patterns of a small format (width
  <= 12), every rounding mode, against a reference that works in integer
  multiples of the smallest subnormal;
- random: seeded bit pairs (half of them with nearby exponents) plus
  directed edge patterns for binary16/32/64, against numpy's sum and the
  host two_sum error, nearest-even only.
"""

import asyncio
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from rebits import config
from rebits.errors import UsageError
from rebits.models import ResultRecord, RunConfig
from rebits.softfp import (
    ERR_UNREPRESENTABLE,
    RNE,
    FloatClass,
    FloatFormat,
    PackedFloat,
    RoundingMode,
    add_bits_with_err,
    from_bits,
    unpack,
)

EXHAUSTIVE_MAX_WIDTH = 12

# sentinel for "any NaN" in the exhaustive reference
NAN = -1

_HOST_VIEWS = {
    16: (np.uint16, np.float16),
    32: (np.uint32, np.float32),
    64: (np.uint64, np.float64),
}


@dataclass
class VerificationReport:
    fmt: FloatFormat
    mode: RoundingMode
    pairs: int = 0
    failures: int = 0
    first_failure: Optional[str] = None
    seed: int = 0

    def fail(self, a: int, b: int, detail: str) -> None:
        self.failures += 1
        if self.first_failure is None:
            digits = (self.fmt.width + 3) // 4
            self.first_failure = f"a=0x{a:0{digits}x} b=0x{b:0{digits}x}: {detail}"

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_record(self) -> ResultRecord:
        note = "PASS" if self.passed else f"FAIL: {self.failures} failures, first {self.first_failure}"
        return ResultRecord(
            kernel="verify-adder",
            scheme=f"softfp:{self.mode.value}",
            format=self.fmt.label,
            n=self.pairs,
            seed=self.seed,
            value=float(self.failures),
            note=note,
        )


class ExhaustiveReference:
    """Correct rounding of a + b for a small format, by table lookup"""

    def __init__(self, fmt: FloatFormat):
        self.fmt = fmt
        f = fmt.frac_bits
        self.sign_bit = 1 << (fmt.width - 1)
        self.inf_bits = ((1 << fmt.exp_bits) - 1) << f
        # signed value of every finite pattern in units of the smallest subnormal
        self.units: List[Optional[int]] = []
        self.nan: List[bool] = []
        for bits in range(1 << fmt.width):
            u = unpack(PackedFloat(fmt, bits))
            self.nan.append(u.cls is FloatClass.NAN)
            if u.cls in (FloatClass.INFINITY, FloatClass.NAN):
                self.units.append(None)
            else:
                self.units.append(u.sign * (u.significand << (u.exponent - fmt.emin)))
        # positive finite magnitudes are increasing in their bit pattern
        self.magnitudes = self.units[: self.inf_bits]
        self.representable = set(self.magnitudes)
        self.max_units = self.magnitudes[-1]
        self.half_ulp_max = 1 << (fmt.emax - fmt.emin - 1)

    def expected_sum(self, a: int, b: int, mode: RoundingMode) -> int:
        va, vb = self.units[a], self.units[b]
        if va is None or vb is None:
            if self.nan[a] or self.nan[b]:
                return NAN
            if va is None and vb is None and (a ^ b) & self.sign_bit:
                return NAN
            return a if va is None else b

        exact = va + vb
        if exact == 0:
            if va == 0 and vb == 0 and not (a ^ b) & self.sign_bit:
                return a
            return self.sign_bit if mode is RoundingMode.TOWARD_NEGATIVE else 0

        negative = exact < 0
        sign = self.sign_bit if negative else 0
        m = abs(exact)
        if m > self.max_units:
            if mode is RNE:
                to_infinity = m >= self.max_units + self.half_ulp_max
            elif mode is RoundingMode.TOWARD_ZERO:
                to_infinity = False
            elif mode is RoundingMode.TOWARD_POSITIVE:
                to_infinity = not negative
            else:
                to_infinity = negative
            return sign | (self.inf_bits if to_infinity else self.inf_bits - 1)

        lo = bisect_right(self.magnitudes, m) - 1
        if self.magnitudes[lo] == m:
            return sign | lo
        hi = lo + 1
        if mode is RNE:
            below, above = m - self.magnitudes[lo], self.magnitudes[hi] - m
            if below != above:
                pick = lo if below < above else hi
            else:
                pick = lo if lo % 2 == 0 else hi
        elif mode is RoundingMode.TOWARD_ZERO:
            pick = lo
        elif mode is RoundingMode.TOWARD_POSITIVE:
            pick = lo if negative else hi
        else:
            pick = hi if negative else lo
        return sign | pick

    def check(self, a: int, b: int, mode: RoundingMode) -> Optional[str]:
        """None when the adder is right about (a, b), otherwise what went wrong"""
        sum_bits, err_bits, mask = add_bits_with_err(self.fmt, a, b, mode)
        expected = self.expected_sum(a, b, mode)
        if expected == NAN:
            if not self.nan[sum_bits]:
                return f"sum 0x{sum_bits:x}, expected NaN"
        elif sum_bits != expected:
            return f"sum 0x{sum_bits:x}, expected 0x{expected:x}"

        if self.units[sum_bits] is None:
            return None if err_bits == 0 else f"non-finite sum with err 0x{err_bits:x}"
        if self.units[err_bits] is None:
            return f"err 0x{err_bits:x} is not finite"

        residual = self.units[a] + self.units[b] - self.units[sum_bits]
        if mask & ERR_UNREPRESENTABLE:
            if mode is RNE or abs(residual) in self.representable:
                return f"err flagged unrepresentable, residual {residual} units"
            return None
        if self.units[err_bits] != residual:
            return f"err 0x{err_bits:x}, residual {residual} units"
        if residual == 0 and err_bits != 0:
            return "zero error is not +0"
        return None


def edge_patterns(fmt: FloatFormat) -> List[int]:
    """Zeros, subnormal and normal boundaries, one, the largest finite, infinities and NaNs, both signs"""
    f = fmt.frac_bits
    frac_mask = (1 << f) - 1
    inf_bits = ((1 << fmt.exp_bits) - 1) << f
    one = fmt.bias << f
    magnitudes = [
        0,
        1,
        2,
        frac_mask,
        1 << f,
        (1 << f) | 1,
        one,
        one | 1,
        one | frac_mask,
        (fmt.bias + f + 1) << f,
        inf_bits - 2,
        inf_bits - 1,
        inf_bits,
        inf_bits | (1 << (f - 1)),
        inf_bits | 1,
    ]
    sign = 1 << (fmt.width - 1)
    return magnitudes + [m | sign for m in magnitudes]


class AdderVerificationKernel:
    """
    Emulated adder verification

    Responsible for:
    - Exhaustive checks of small formats in every rounding mode
    - Random and edge-pattern checks of host formats against numpy
    """

    def __init__(self):
        self.role = "Adder Verification"

    def verify_exhaustive(self, fmt: FloatFormat, mode: RoundingMode = RNE) -> VerificationReport:
        if fmt.width > EXHAUSTIVE_MAX_WIDTH:
            raise UsageError(f"Exhaustive verification needs width <= {EXHAUSTIVE_MAX_WIDTH}, {fmt.label} has {fmt.width}")
        reference = ExhaustiveReference(fmt)
        report = VerificationReport(fmt, mode)
        patterns = range(1 << fmt.width)
        for a in patterns:
            for b in patterns:
                report.pairs += 1
                problem = reference.check(a, b, mode)
                if problem:
                    report.fail(a, b, problem)
        config.trace("AdderVerification", f"{fmt.label}/{mode.value}: {report.pairs} pairs, {report.failures} failures")
        return report

    def random_pairs(self, fmt: FloatFormat, count: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """Uniform bit pairs; for half of them b's exponent is moved within p + 3 of a's"""
        rng = np.random.default_rng(seed)
        top = (1 << fmt.width) - 1
        a = rng.integers(0, top, size=count, dtype=np.uint64, endpoint=True)
        b = rng.integers(0, top, size=count, dtype=np.uint64, endpoint=True)

        f = np.uint64(fmt.frac_bits)
        exp_mask = (1 << fmt.exp_bits) - 1
        reach = fmt.precision + 3
        a_exp = ((a >> f) & np.uint64(exp_mask)).astype(np.int64)
        near = np.clip(a_exp + rng.integers(-reach, reach + 1, size=count), 0, exp_mask).astype(np.uint64)
        moved = (b & ~(np.uint64(exp_mask) << f)) | (near << f)
        close = rng.random(count) < 0.5
        b = np.where(close, moved, b)

        edges = np.array(edge_patterns(fmt), dtype=np.uint64)
        a = np.concatenate([a, np.repeat(edges, len(edges))])
        b = np.concatenate([b, np.tile(edges, len(edges))])
        return a, b

    def verify_random(self, fmt: FloatFormat, count: int, seed: int) -> VerificationReport:
        if fmt.width not in _HOST_VIEWS or not fmt.is_host:
            raise UsageError(f"Random verification needs a host format, not {fmt.label}")
        uint, host = _HOST_VIEWS[fmt.width]
        a, b = self.random_pairs(fmt, count, seed)

        soft_sum = np.empty(len(a), dtype=np.uint64)
        soft_err = np.empty(len(a), dtype=np.uint64)
        for i, (x, y) in enumerate(zip(a.tolist(), b.tolist())):
            soft_sum[i], soft_err[i], _ = add_bits_with_err(fmt, x, y, RNE)

        ha = a.astype(uint).view(host)
        hb = b.astype(uint).view(host)
        with np.errstate(all="ignore"):
            s = ha + hb
            bb = s - ha
            e = (ha - (s - bb)) + (hb - bb)

            host_nan = np.isnan(s)
            soft_nan = np.isnan(soft_sum.astype(uint).view(host))
            sum_ok = np.where(host_nan, soft_nan, soft_sum == s.view(uint).astype(np.uint64))

            finite = np.isfinite(s)
            expected_err = np.where(~finite | (e == 0), np.uint64(0), e.view(uint).astype(np.uint64))
            err_ok = soft_err == expected_err
            # spurious overflow inside the host two_sum: fall back to an exact check
            spurious = finite & ~np.isfinite(e)

        for i in np.flatnonzero(spurious & ~err_ok).tolist():
            exact = Fraction(float(ha[i])) + Fraction(float(hb[i])) - Fraction(float(s[i]))
            err_ok[i] = exact == Fraction(float(from_bits(int(soft_err[i]), fmt)))

        report = VerificationReport(fmt, RNE, pairs=len(a), seed=seed)
        for i in np.flatnonzero(~(sum_ok & err_ok)).tolist():
            report.fail(
                int(a[i]),
                int(b[i]),
                f"softfp (0x{int(soft_sum[i]):x}, 0x{int(soft_err[i]):x}), host sum 0x{int(s.view(uint)[i]):x}",
            )
        config.trace("AdderVerification", f"{fmt.label}: {report.pairs} random/edge pairs, {report.failures} failures")
        return report

    def verify_adder(
        self,
        fmt: FloatFormat,
        mode: Optional[RoundingMode] = None,
        pairs: Optional[int] = None,
        seed: int = config.DEFAULT_SEED,
    ) -> List[ResultRecord]:
        """
        Small formats: exhaustive, in `mode` or all four modes when None.
        Host formats: `pairs` random pairs plus edge patterns, nearest-even.
        """
        if fmt.width <= EXHAUSTIVE_MAX_WIDTH:
            modes = [RoundingMode(mode)] if mode is not None else list(RoundingMode)
            return [self.verify_exhaustive(fmt, m).to_record() for m in modes]
        if mode is not None and RoundingMode(mode) is not RNE:
            raise UsageError(f"Host comparison covers nearest-even only, got mode {RoundingMode(mode).value}")
        count = pairs if pairs is not None else config.VERIFY_RANDOM_PAIRS
        return [self.verify_random(fmt, count, seed).to_record()]

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List) -> List[ResultRecord]:
        mode = RoundingMode(cfg.mode) if cfg.mode else None
        return await asyncio.to_thread(self.verify_adder, fmt, mode, cfg.n, cfg.seed)
