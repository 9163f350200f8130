"""
Software IEEE-754 Adder with Recycled Error Bits

Bit-level, format-parameterized binary floating-point addition. Every
addition returns the correctly rounded sum together with its exact rounding
error, the value the REBits hardware latches into FPERR. There is no global
FPERR register here: the error travels in the return value.
"""

import struct
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from rebits.errors import FormatMismatchError


@dataclass(frozen=True)
class FloatFormat:
    """IEEE-754 binary format with `exp_bits` exponent and `frac_bits` stored fraction bits"""

    exp_bits: int
    frac_bits: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.exp_bits < 2 or self.frac_bits < 1:
            raise ValueError(f"Invalid format: exp_bits={self.exp_bits}, frac_bits={self.frac_bits}")
        if self.exp_bits + self.frac_bits + 1 > 64:
            raise ValueError(f"Format wider than 64 bits: {self.exp_bits + self.frac_bits + 1}")

    @property
    def precision(self) -> int:
        return self.frac_bits + 1

    @property
    def bias(self) -> int:
        return (1 << (self.exp_bits - 1)) - 1

    @property
    def emax(self) -> int:
        return self.bias

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def width(self) -> int:
        return self.exp_bits + self.frac_bits + 1

    @property
    def label(self) -> str:
        return self.name or f"e{self.exp_bits}m{self.frac_bits}"

    @property
    def is_host(self) -> bool:
        return (self.exp_bits, self.frac_bits) in _HOST_CODECS

    def __str__(self) -> str:
        return self.label


BINARY16 = FloatFormat(5, 10, "binary16")
BINARY32 = FloatFormat(8, 23, "binary32")
BINARY64 = FloatFormat(11, 52, "binary64")
E5M2 = FloatFormat(5, 2, "e5m2")

FORMATS: Dict[str, FloatFormat] = {
    "f16": BINARY16,
    "binary16": BINARY16,
    "f32": BINARY32,
    "binary32": BINARY32,
    "f64": BINARY64,
    "binary64": BINARY64,
    "e5m2": E5M2,
}

# (float struct code, unsigned struct code, host scalar type)
_HOST_CODECS = {
    (5, 10): ("<e", "<H", np.float16),
    (8, 23): ("<f", "<I", np.float32),
    (11, 52): ("<d", "<Q", float),
}


def get_format(name: str) -> FloatFormat:
    """Look up a named format"""
    if name not in FORMATS:
        raise ValueError(f"Unknown format: {name}. Valid options: {list(FORMATS.keys())}")
    return FORMATS[name]


class FloatClass(str, Enum):
    ZERO = "zero"
    SUBNORMAL = "subnormal"
    NORMAL = "normal"
    INFINITY = "infinity"
    NAN = "nan"


class RoundingMode(str, Enum):
    NEAREST_EVEN = "rne"
    TOWARD_ZERO = "rtz"
    TOWARD_POSITIVE = "rup"
    TOWARD_NEGATIVE = "rdn"


RNE = RoundingMode.NEAREST_EVEN

# Flag bits used on the integer fast path
INEXACT = 1
OVERFLOW = 2
INVALID = 4
ERR_UNREPRESENTABLE = 8
SUBNORMAL = 16

# Alignment guard bits; bits shifted out below them are kept exactly
GUARD_BITS = 3


@dataclass(frozen=True)
class AddFlags:
    inexact: bool = False
    overflow: bool = False
    invalid: bool = False
    err_unrepresentable: bool = False
    # set when an operand, the sum or the error is subnormal
    subnormal: bool = False

    @classmethod
    def from_mask(cls, mask: int) -> "AddFlags":
        return cls(
            inexact=bool(mask & INEXACT),
            overflow=bool(mask & OVERFLOW),
            invalid=bool(mask & INVALID),
            err_unrepresentable=bool(mask & ERR_UNREPRESENTABLE),
            subnormal=bool(mask & SUBNORMAL),
        )


@dataclass(frozen=True)
class PackedFloat:
    """A bit pattern in a FloatFormat"""

    format: FloatFormat
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.format.width):
            raise ValueError(f"Bit pattern {self.bits:#x} does not fit {self.format.label}")

    @classmethod
    def from_float(cls, value, fmt: FloatFormat) -> "PackedFloat":
        return cls(fmt, to_bits(value, fmt))

    def to_float(self):
        return from_bits(self.bits, self.format)

    def is_finite(self) -> bool:
        return unpack(self).cls not in (FloatClass.INFINITY, FloatClass.NAN)

    def to_fraction(self) -> Fraction:
        return unpack(self).to_fraction()

    def __repr__(self) -> str:
        digits = (self.format.width + 3) // 4
        return f"PackedFloat({self.format.label}, 0x{self.bits:0{digits}x})"


@dataclass(frozen=True)
class Unpacked:
    """Decomposed value: sign * significand * 2**(exponent - frac_bits)"""

    sign: int
    cls: FloatClass
    exponent: int
    significand: int
    frac_bits: int

    def to_fraction(self) -> Fraction:
        if self.cls in (FloatClass.INFINITY, FloatClass.NAN):
            raise ValueError(f"{self.cls.value} has no rational value")
        return Fraction(self.sign * self.significand) * Fraction(2) ** (self.exponent - self.frac_bits)


@lru_cache(maxsize=None)
def _layout(fmt: FloatFormat) -> Tuple[int, int, int, int, int, int, int]:
    """(frac_bits, exp_mask, frac_mask, sign_shift, bias, emin, emax)"""
    return (
        fmt.frac_bits,
        (1 << fmt.exp_bits) - 1,
        (1 << fmt.frac_bits) - 1,
        fmt.width - 1,
        fmt.bias,
        fmt.emin,
        fmt.emax,
    )


def to_bits(value, fmt: FloatFormat) -> int:
    """Host scalar -> bit pattern (binary16/32/64 only)"""
    codec = _HOST_CODECS.get((fmt.exp_bits, fmt.frac_bits))
    if codec is None:
        raise ValueError(f"No host type for format {fmt.label}")
    return struct.unpack(codec[1], struct.pack(codec[0], value))[0]


def from_bits(bits: int, fmt: FloatFormat):
    """Bit pattern -> host scalar (float, np.float32 or np.float16)"""
    codec = _HOST_CODECS.get((fmt.exp_bits, fmt.frac_bits))
    if codec is None:
        raise ValueError(f"No host type for format {fmt.label}")
    value = struct.unpack(codec[0], struct.pack(codec[1], bits))[0]
    return codec[2](value)


def host_type(fmt: FloatFormat):
    codec = _HOST_CODECS.get((fmt.exp_bits, fmt.frac_bits))
    if codec is None:
        raise ValueError(f"No host type for format {fmt.label}")
    return codec[2]


def unpack(x: PackedFloat) -> Unpacked:
    f, exp_mask, frac_mask, sign_shift, bias, emin, emax = _layout(x.format)
    sign = -1 if x.bits >> sign_shift else 1
    biased = (x.bits >> f) & exp_mask
    frac = x.bits & frac_mask
    if biased == exp_mask:
        cls = FloatClass.NAN if frac else FloatClass.INFINITY
        return Unpacked(sign, cls, emax + 1, frac, f)
    if biased == 0:
        cls = FloatClass.SUBNORMAL if frac else FloatClass.ZERO
        return Unpacked(sign, cls, emin, frac, f)
    return Unpacked(sign, FloatClass.NORMAL, biased - bias, frac | (1 << f), f)


def pack(u: Unpacked, fmt: FloatFormat) -> PackedFloat:
    f, exp_mask, frac_mask, sign_shift, bias, emin, emax = _layout(fmt)
    sign_bit = (1 if u.sign < 0 else 0) << sign_shift
    if u.cls is FloatClass.NAN:
        if not u.significand & frac_mask:
            raise ValueError("NaN needs a non-zero payload")
        return PackedFloat(fmt, sign_bit | (exp_mask << f) | (u.significand & frac_mask))
    if u.cls is FloatClass.INFINITY:
        return PackedFloat(fmt, sign_bit | (exp_mask << f))
    if u.cls is FloatClass.ZERO:
        return PackedFloat(fmt, sign_bit)
    if u.cls is FloatClass.SUBNORMAL:
        return PackedFloat(fmt, sign_bit | u.significand)
    return PackedFloat(fmt, sign_bit | ((u.exponent + bias) << f) | (u.significand - (1 << f)))


def _round_bits(
    fmt: FloatFormat, negative: bool, sig: int, scale: int, mode: RoundingMode
) -> Tuple[int, int, int, int]:
    """
    Round (-1)**negative * sig * 2**scale (sig > 0) into fmt.

    Returns (bits, rounded_sig, rounded_scale, flags); rounded_sig is -1 when
    the result overflowed to infinity.
    """
    f, exp_mask, frac_mask, sign_shift, bias, emin, emax = _layout(fmt)
    flags = 0
    e = scale + sig.bit_length() - 1
    if e < emin:
        e = emin
    q = e - f
    shift = q - scale
    if shift <= 0:
        rsig = sig << -shift
    else:
        rsig = sig >> shift
        rem = sig & ((1 << shift) - 1)
        if rem:
            flags |= INEXACT
            if mode is RoundingMode.NEAREST_EVEN:
                half = 1 << (shift - 1)
                up = rem > half or (rem == half and rsig & 1)
            elif mode is RoundingMode.TOWARD_ZERO:
                up = False
            elif mode is RoundingMode.TOWARD_POSITIVE:
                up = not negative
            else:
                up = negative
            if up:
                rsig += 1
                if rsig >> (f + 1):
                    rsig >>= 1
                    q += 1
                    e += 1

    sign_bit = (1 if negative else 0) << sign_shift
    if e > emax:
        flags |= OVERFLOW | INEXACT
        to_infinity = (
            mode is RoundingMode.NEAREST_EVEN
            or (mode is RoundingMode.TOWARD_POSITIVE and not negative)
            or (mode is RoundingMode.TOWARD_NEGATIVE and negative)
        )
        if to_infinity:
            return sign_bit | (exp_mask << f), -1, 0, flags
        max_sig = (1 << (f + 1)) - 1
        return sign_bit | ((emax + bias) << f) | (max_sig - (1 << f)), max_sig, emax - f, flags

    if rsig >> f:
        bits = sign_bit | ((e + bias) << f) | (rsig - (1 << f))
    else:
        bits = sign_bit | rsig
    return bits, rsig, q, flags


def round_pack(
    fmt: FloatFormat, sign: int, exponent: int, significand: int, mode: RoundingMode = RNE
) -> Tuple[PackedFloat, AddFlags]:
    """
    Correctly round sign * significand * 2**exponent into fmt.

    `significand` is an exact, unbounded integer; its bits below the format
    precision act as guard, round and sticky bits.
    """
    if significand < 0:
        raise ValueError("significand must be non-negative; pass the sign separately")
    sign_shift = fmt.width - 1
    if significand == 0:
        return PackedFloat(fmt, (1 << sign_shift) if sign < 0 else 0), AddFlags()
    bits, _, _, flags = _round_bits(fmt, sign < 0, significand, exponent, mode)
    return PackedFloat(fmt, bits), AddFlags.from_mask(flags)


def _add_special(fmt: FloatFormat, a: int, b: int) -> Tuple[int, int, int]:
    """At least one operand is an infinity or a NaN; the error is always +0"""
    f, exp_mask, frac_mask, sign_shift, bias, emin, emax = _layout(fmt)
    quiet = 1 << (f - 1)
    a_special = ((a >> f) & exp_mask) == exp_mask
    b_special = ((b >> f) & exp_mask) == exp_mask
    a_nan = a_special and bool(a & frac_mask)
    b_nan = b_special and bool(b & frac_mask)
    if a_nan or b_nan:
        flags = 0
        if (a_nan and not a & quiet) or (b_nan and not b & quiet):
            flags |= INVALID
        source = a if a_nan else b
        return source | quiet, 0, flags
    if a_special and b_special and (a >> sign_shift) != (b >> sign_shift):
        return (exp_mask << f) | quiet, 0, INVALID
    return (a if a_special else b), 0, 0


def _is_subnormal(bits: int, f: int, exp_mask: int, frac_mask: int) -> bool:
    return ((bits >> f) & exp_mask) == 0 and bool(bits & frac_mask)


def add_bits_with_err(fmt: FloatFormat, a: int, b: int, mode: RoundingMode = RNE) -> Tuple[int, int, int]:
    """
    Integer fast path of add_with_err: (sum_bits, err_bits, flag_mask).

    The addition follows the hardware flow: the smaller operand is aligned to
    the larger one's exponent, the bits shifted out below the guard bits are
    kept as an exact auxiliary value, the pre-round sum is rounded (the
    shifted-out bits only contribute a sticky bit to that decision), and the
    error is the rounding delta plus the alignment loss.
    """
    f, exp_mask, frac_mask, sign_shift, bias, emin, emax = _layout(fmt)
    ea = (a >> f) & exp_mask
    eb = (b >> f) & exp_mask
    if ea == exp_mask or eb == exp_mask:
        return _add_special(fmt, a, b)

    flags = 0
    if _is_subnormal(a, f, exp_mask, frac_mask) or _is_subnormal(b, f, exp_mask, frac_mask):
        flags |= SUBNORMAL

    sa = a >> sign_shift
    sb = b >> sign_shift
    if ea:
        ma = (a & frac_mask) | (1 << f)
        xa = ea - bias - f
    else:
        ma = a & frac_mask
        xa = emin - f
    if eb:
        mb = (b & frac_mask) | (1 << f)
        xb = eb - bias - f
    else:
        mb = b & frac_mask
        xb = emin - f

    if ma == 0 and mb == 0:
        if sa and sb:
            return 1 << sign_shift, 0, flags
        if sa != sb and mode is RoundingMode.TOWARD_NEGATIVE:
            return 1 << sign_shift, 0, flags
        return 0, 0, flags
    if mb == 0:
        return a, 0, flags
    if ma == 0:
        return b, 0, flags

    # |a| >= |b| from here on
    if (xa, ma) < (xb, mb):
        sa, sb, ma, mb, xa, xb = sb, sa, mb, ma, xb, xa
    d = xa - xb
    subtract = sa != sb

    # step 1: alignment; `lost` holds the shifted-out bits of b exactly
    wide_a = ma << GUARD_BITS
    wide_b = mb << GUARD_BITS
    kept = wide_b >> d
    lost = wide_b & ((1 << d) - 1) if d else 0
    sticky = 1 if lost else 0

    pre_round = wide_a - kept if subtract else wide_a + kept
    jammed = wide_a - (kept | sticky) if subtract else wide_a + (kept | sticky)
    scale = xa - GUARD_BITS

    if jammed == 0:
        # exact cancellation
        if mode is RoundingMode.TOWARD_NEGATIVE:
            return 1 << sign_shift, 0, flags
        return 0, 0, flags

    # step 2: rounding
    sum_bits, rsig, rscale, rflags = _round_bits(fmt, bool(sa), jammed, scale, mode)
    flags |= rflags
    if rsig < 0:
        return sum_bits, 0, flags
    if _is_subnormal(sum_bits, f, exp_mask, frac_mask):
        flags |= SUBNORMAL

    # err = (pre_round - rounded) + alignment loss, relative to a's sign
    low = min(xb - GUARD_BITS, rscale)
    delta = (pre_round << (scale - low)) - (rsig << (rscale - low))
    loss = lost << (xb - GUARD_BITS - low)
    err = delta - loss if subtract else delta + loss
    if err == 0:
        return sum_bits, 0, flags

    err_negative = (err < 0) != bool(sa)
    err_bits, err_sig, _, err_flags = _round_bits(fmt, err_negative, abs(err), low, RNE)
    if err_flags:
        flags |= ERR_UNREPRESENTABLE
        if err_sig < 0:
            err_bits = 0
    if _is_subnormal(err_bits, f, exp_mask, frac_mask):
        flags |= SUBNORMAL
    return sum_bits, err_bits, flags


@dataclass(frozen=True)
class AddResult:
    sum: PackedFloat
    err: PackedFloat
    flags: AddFlags


def add_with_err(a: PackedFloat, b: PackedFloat, mode: RoundingMode = RNE) -> AddResult:
    """IEEE-754 addition returning (sum, err, flags) with sum + err == a + b exactly"""
    if a.format != b.format:
        raise FormatMismatchError(f"Cannot add {a.format.label} and {b.format.label}")
    fmt = a.format
    sum_bits, err_bits, mask = add_bits_with_err(fmt, a.bits, b.bits, mode)
    return AddResult(PackedFloat(fmt, sum_bits), PackedFloat(fmt, err_bits), AddFlags.from_mask(mask))


def add_host_with_err(a, b, fmt: FloatFormat, mode: RoundingMode = RNE):
    """add_with_err on host scalars: returns (sum, err, flag_mask) as host scalars"""
    sum_bits, err_bits, mask = add_bits_with_err(fmt, to_bits(a, fmt), to_bits(b, fmt), mode)
    return from_bits(sum_bits, fmt), from_bits(err_bits, fmt), mask


def finite_values(fmt: FloatFormat):
    """Yield (bits, exact value as Fraction) for every finite pattern of a small format"""
    for bits in range(1 << fmt.width):
        u = unpack(PackedFloat(fmt, bits))
        if u.cls in (FloatClass.INFINITY, FloatClass.NAN):
            continue
        yield bits, u.to_fraction()


def ulp(x: PackedFloat) -> Fraction:
    """Gap to the next larger-magnitude neighbor at x's exponent"""
    u = unpack(x)
    return Fraction(2) ** (u.exponent - x.format.frac_bits)
