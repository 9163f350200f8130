"""
2-Norm Kernel

sqrt(sum x_i^2) with the squares computed once in the working format (their
rounding errors are ignored, as the folding programming model does) and
only the accumulation varying by scheme.
"""

from typing import List, Optional

from rebits import config
from rebits.accum import exact_round_sqrt, exact_sum
from rebits.arith import NativeArithmetic
from rebits.eft import two_prod
from rebits.errors import RebitsError
from rebits.models import ResultRecord, RunConfig
from rebits.opcount import CountScope
from rebits.softfp import BINARY64, FloatFormat

from kernels.schemes import Scheme, SchemeKind, accumulate_terms, score_schemes
from kernels.sum_kernel import SumKernel


def exact_norm(v: List, fmt: FloatFormat):
    """
    Correctly rounded norm of the exact squares. A binary32 square is exact
    in binary64; wider inputs are split into two binary64 limbs.
    """
    limbs = []
    for x in v:
        x = float(x)
        if fmt.precision * 2 <= BINARY64.precision:
            limbs.append(x * x)
        else:
            p, e = two_prod(x, x)
            limbs += [p, e]
    return exact_round_sqrt(exact_sum(limbs, BINARY64), fmt)


class NormKernel:
    """
    Vector 2-norm

    Responsible for:
    - Squaring the input once per run
    - Accumulating the squares under every scheme
    """

    def __init__(self):
        self.role = "Vector 2-Norm"

    def squares(self, v: List, fmt: FloatFormat, scope: Optional[CountScope] = None) -> List:
        arith = NativeArithmetic(fmt, scope)
        return [arith.mul(arith.cast(x), arith.cast(x)) for x in v]

    def two_norm(self, v: List, scheme: Scheme, fmt: FloatFormat = BINARY64, engine: Optional[str] = None):
        """Norm of a single vector under one scheme"""
        if scheme.kind is SchemeKind.ORACLE:
            return exact_norm(v, fmt)
        scope = CountScope("two_norm")
        total = accumulate_terms(self.squares(v, fmt, scope), scheme, fmt, scope, engine)
        return NativeArithmetic(fmt, scope).sqrt(total)

    async def norm_experiment(
        self,
        v: List,
        schemes: List[Scheme],
        fmt: FloatFormat,
        seed: int = 0,
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        config.trace("NormKernel", f"n={len(v)} format={fmt.label} schemes={[s.label for s in schemes]}")
        scope = CountScope("squares")
        terms = self.squares(v, fmt, scope)
        try:
            oracle, oracle_error = exact_norm(v, fmt), None
        except RebitsError as exc:
            oracle, oracle_error = None, str(exc)
        return await score_schemes(
            "norm",
            terms,
            schemes,
            fmt,
            oracle=oracle,
            oracle_error=oracle_error,
            engine=engine,
            base=scope.report(),
            finish=lambda total, arith: arith.sqrt(total),
            n=len(v),
            seed=seed,
        )

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List[Scheme]) -> List[ResultRecord]:
        """2-norm of the skewed positive vector"""
        v = SumKernel().gen_skewed_positive(cfg.n or config.DEFAULT_N, cfg.seed, fmt)
        return await self.norm_experiment(v, schemes, fmt, cfg.seed, cfg.engine)
