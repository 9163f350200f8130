"""
Summation Schemes

A Scheme names how a kernel accumulates its terms: naive host adds, the
REBits folding accumulator, Kahan, Priest, a two_sum cascade, Double-Double,
or the exact oracle. Every scheme is available as a streaming accumulator
so kernels can read running values (integration profiles) as well as
final sums.
"""

import asyncio
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional

from rebits import config
from rebits.config import trace
from rebits.accum import (
    ExactAccumulator,
    FloatErr,
    FoldPolicy,
    exact_add,
    exact_round,
    exact_sum,
    fe_add_scalar,
    finalize,
    fold,
)
from rebits.arith import NativeArithmetic, RebitsArithmetic, SchemeVariant
from rebits.ddouble import DDouble, dd_add_d
from rebits.eft import kahan_step, priest_sum, two_sum
from rebits.errors import NonFiniteInputError, RebitsError
from rebits.models import ResultRecord, measure
from rebits.opcount import CountScope, OpCounters
from rebits.softfp import BINARY64, FloatFormat


# rebits records count one fold of err into val on top of the per-element adds
FINALIZE_NOTE = "fpadd includes 1 terminal fold"


class SchemeKind(str, Enum):
    NAIVE = "naive"
    REBITS = "rebits"
    KAHAN = "kahan"
    PRIEST = "priest"
    TWO_SUM = "two_sum"
    DD = "dd"
    DD_REBITS = "dd_rebits"
    ORACLE = "oracle"


@dataclass(frozen=True)
class Scheme:
    kind: SchemeKind
    policy: FoldPolicy = FoldPolicy()
    variant: SchemeVariant = SchemeVariant.NATIVE

    @classmethod
    def parse(cls, text: str, default_policy: Optional[FoldPolicy] = None) -> "Scheme":
        """
        Parse 'naive', 'rebits', 'rebits:fold=1000', 'rebits:fold=none',
        'kahan', 'kahan:variant=rebits', 'priest[:variant=rebits]',
        'two_sum', 'dd', 'dd_rebits' or 'oracle'.
        """
        name, _, options = text.strip().partition(":")
        try:
            kind = SchemeKind(name.strip().lower())
        except ValueError:
            raise ValueError(f"Unknown scheme: {name!r}. Valid options: {[k.value for k in SchemeKind]}")

        policy = default_policy or FoldPolicy.none()
        variant = SchemeVariant.NATIVE
        for option in filter(None, options.split(",")):
            key, _, value = option.partition("=")
            key = key.strip().lower()
            if key == "fold" and kind is SchemeKind.REBITS:
                policy = FoldPolicy.parse(value)
            elif key == "variant" and kind in (SchemeKind.KAHAN, SchemeKind.PRIEST):
                variant = SchemeVariant(value.strip().lower())
            else:
                raise ValueError(f"Option {option!r} does not apply to scheme {kind.value}")
        if kind is not SchemeKind.REBITS:
            policy = FoldPolicy.none()
        return cls(kind, policy, variant)

    @property
    def label(self) -> str:
        if self.kind is SchemeKind.REBITS:
            return "rebits:fold=" + ("none" if self.policy.is_none else str(self.policy.k))
        if self.kind in (SchemeKind.KAHAN, SchemeKind.PRIEST) and self.variant is SchemeVariant.REBITS:
            return f"{self.kind.value}:variant=rebits"
        return self.kind.value

    @property
    def policy_label(self) -> str:
        return str(self.policy) if self.kind is SchemeKind.REBITS else ""

    @property
    def uses_fperr(self) -> bool:
        return self.kind in (SchemeKind.REBITS, SchemeKind.DD_REBITS) or self.variant is SchemeVariant.REBITS

    def arithmetic(self, fmt: FloatFormat, scope: Optional[CountScope] = None, engine: Optional[str] = None) -> NativeArithmetic:
        if self.uses_fperr:
            return RebitsArithmetic(fmt, scope, engine)
        return NativeArithmetic(fmt, scope)

    def accumulator(self, fmt: FloatFormat, scope: Optional[CountScope] = None, engine: Optional[str] = None) -> "StreamingSum":
        if self.kind is SchemeKind.ORACLE:
            return OracleSum(fmt)
        if self.kind in (SchemeKind.DD, SchemeKind.DD_REBITS):
            variant = SchemeVariant.REBITS if self.kind is SchemeKind.DD_REBITS else SchemeVariant.NATIVE
            dd_arith = self.arithmetic(BINARY64, scope, engine)
            return DoubleDoubleSum(NativeArithmetic(fmt), dd_arith, variant)
        arith = self.arithmetic(fmt, scope, engine)
        if self.kind is SchemeKind.NAIVE:
            return NaiveSum(arith)
        if self.kind is SchemeKind.REBITS:
            return RebitsSum(arith, self.policy)
        if self.kind is SchemeKind.KAHAN:
            return KahanSum(arith, self.variant)
        if self.kind is SchemeKind.PRIEST:
            return PriestSum(arith, self.variant)
        return CascadeSum(arith)

    def __str__(self) -> str:
        return self.label


def parse_schemes(texts: Iterable[str], default_policy: Optional[FoldPolicy] = None) -> List[Scheme]:
    return [Scheme.parse(text, default_policy) for text in texts if text.strip()]


# ===== STREAMING ACCUMULATORS =====


class StreamingSum:
    """push() terms, read result() at any point without disturbing the state"""

    def push(self, x) -> None:
        raise NotImplementedError

    def extend(self, values: Iterable) -> "StreamingSum":
        for x in values:
            self.push(x)
        return self

    def result(self):
        raise NotImplementedError


class NaiveSum(StreamingSum):
    def __init__(self, arith: NativeArithmetic):
        self.arith = arith
        self.s = arith.zero

    def push(self, x) -> None:
        self.s = self.arith.add(self.s, x)

    def result(self):
        return self.s


class RebitsSum(StreamingSum):
    def __init__(self, arith: RebitsArithmetic, policy: FoldPolicy):
        self.arith = arith
        self.policy = policy
        self.acc = FloatErr.zero(arith)
        self.folds = 0

    def push(self, x) -> None:
        self.acc = fe_add_scalar(self.acc, x, self.arith)
        k = self.policy.k
        if k is not None and self.acc.seen % k == 0:
            self.acc = fold(self.acc, self.arith)
            self.folds += 1

    def result(self):
        return finalize(self.acc, self.arith)


class KahanSum(StreamingSum):
    def __init__(self, arith: NativeArithmetic, variant: SchemeVariant):
        self.arith = arith
        self.variant = variant
        self.s = arith.zero
        self.c = arith.zero

    def push(self, x) -> None:
        self.s, self.c = kahan_step(self.s, self.c, x, self.arith, self.variant)

    def result(self):
        return self.s


class PriestSum(StreamingSum):
    """Priest needs the whole multiset (it sorts), so terms are buffered"""

    def __init__(self, arith: NativeArithmetic, variant: SchemeVariant):
        self.arith = arith
        self.variant = variant
        self.terms = []

    def push(self, x) -> None:
        self.terms.append(x)

    def result(self):
        return priest_sum(self.terms, self.arith, self.variant)


class CascadeSum(StreamingSum):
    """Knuth two_sum cascade with the errors summed plainly"""

    def __init__(self, arith: NativeArithmetic):
        self.arith = arith
        self.s = arith.zero
        self.sigma = arith.zero

    def push(self, x) -> None:
        self.s, q = two_sum(self.s, x, self.arith, SchemeVariant.NATIVE)
        self.sigma = self.arith.add(self.sigma, q)

    def result(self):
        return self.arith.add(self.s, self.sigma)


class DoubleDoubleSum(StreamingSum):
    """Accumulate widened terms into a Double-Double; round the result back to the term format"""

    def __init__(self, out: NativeArithmetic, dd_arith: NativeArithmetic, variant: SchemeVariant):
        self.out = out
        self.dd_arith = dd_arith
        self.variant = variant
        self.acc = DDouble(0.0, 0.0)

    def push(self, x) -> None:
        self.acc = dd_add_d(self.acc, float(x), self.dd_arith, self.variant)

    def result(self):
        return self.out.cast(self.dd_arith.add(self.acc.hi, self.acc.lo))


class OracleSum(StreamingSum):
    def __init__(self, fmt: FloatFormat):
        self.fmt = fmt
        self.acc = ExactAccumulator(BINARY64)

    def push(self, x) -> None:
        self.acc = exact_add(self.acc, x)

    def extend(self, values: Iterable) -> "OracleSum":
        values = list(values)
        if self.acc.count == 0:
            self.acc = exact_sum(values, BINARY64)
        else:
            for x in values:
                self.push(x)
        return self

    def result(self):
        return exact_round(self.acc, self.fmt)


def accumulate_terms(terms: Iterable, scheme: Scheme, fmt: FloatFormat, scope: Optional[CountScope] = None, engine: Optional[str] = None):
    """Final sum of `terms` under `scheme`"""
    return scheme.accumulator(fmt, scope, engine or config.REBITS_ENGINE).extend(terms).result()


# ===== SCORING =====


def oracle_of(terms: List, fmt: FloatFormat):
    """exact_round of the exact sum, or (None, reason) when a term is not finite"""
    try:
        return exact_round(exact_sum(terms, BINARY64), fmt), None
    except RebitsError as exc:
        return None, str(exc)


def score_scheme(
    kernel: str,
    terms: List,
    scheme: Scheme,
    fmt: FloatFormat,
    oracle,
    oracle_error: Optional[str] = None,
    engine: Optional[str] = None,
    base: OpCounters = OpCounters(),
    finish: Optional[Callable] = None,
    **params,
) -> ResultRecord:
    """
    One record: accumulate `terms` under `scheme`, optionally post-process
    the sum with `finish(sum, arith)`, compare with `oracle`.
    Accumulation failures land in the record's error field.
    """
    scope = CountScope(scheme.label)
    params.setdefault("policy", scheme.policy_label)
    try:
        if scheme.kind is SchemeKind.ORACLE:
            if oracle_error:
                raise NonFiniteInputError(oracle_error)
            value = oracle
        else:
            total = accumulate_terms(terms, scheme, fmt, scope, engine)
            value = finish(total, NativeArithmetic(fmt, scope)) if finish else total
    except RebitsError as exc:
        trace("Schemes", f"{kernel}/{scheme.label}: {exc}")
        return ResultRecord(
            kernel=kernel, scheme=scheme.label, format=fmt.label, error=str(exc), **(base + scope.report()).as_dict(), **params
        )
    if scheme.kind is SchemeKind.REBITS:
        params.setdefault("note", FINALIZE_NOTE)
    return measure(kernel, scheme.label, fmt.label, value, oracle, base + scope.report(), **params)


async def score_schemes(
    kernel: str,
    terms: List,
    schemes: List[Scheme],
    fmt: FloatFormat,
    oracle=None,
    oracle_error: Optional[str] = None,
    engine: Optional[str] = None,
    base: OpCounters = OpCounters(),
    finish: Optional[Callable] = None,
    **params,
) -> List[ResultRecord]:
    """Score every scheme on the same terms; cells run concurrently, results keep scheme order"""
    if oracle is None and oracle_error is None:
        oracle, oracle_error = oracle_of(terms, fmt)
        if finish is not None and oracle is not None:
            oracle = finish(oracle, NativeArithmetic(fmt))
    cells = [
        asyncio.to_thread(score_scheme, kernel, terms, scheme, fmt, oracle, oracle_error, engine, base, finish, **params)
        for scheme in schemes
    ]
    return list(await asyncio.gather(*cells))


def max_error(records: List[ResultRecord], scheme: str, field: str = "rel_err") -> float:
    """Largest abs_err / rel_err of one scheme over a sweep; 0.0 when none was measured"""
    errors = [getattr(r, field) for r in records if r.scheme == scheme and getattr(r, field) is not None]
    return max(errors) if errors else 0.0
