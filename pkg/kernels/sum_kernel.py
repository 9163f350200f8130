"""
Summation Kernel

Sum of positive numbers on a skewed vector: the first three quarters are
large, the last quarter small enough that a naive running sum stalls on
them. Also the partitioned (parallel) form of the folding accumulator.
"""

import asyncio
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from rebits import config
from rebits.accum import FoldPolicy, accumulate, fe_add_fe, finalize
from rebits.arith import NativeArithmetic, RebitsArithmetic
from rebits.errors import NonFiniteInputError, RebitsError, UsageError
from rebits.models import ResultRecord, RunConfig, measure
from rebits.opcount import CountScope
from rebits.softfp import BINARY32, BINARY64, FloatFormat, host_type

from kernels.schemes import FINALIZE_NOTE, Scheme, SchemeKind, oracle_of, score_schemes


def to_host_list(values: np.ndarray, fmt: FloatFormat) -> List:
    """numpy array -> list of host scalars of fmt (Python floats for binary64)"""
    scalar = host_type(fmt)
    if scalar is float:
        return values.astype(np.float64).tolist()
    return list(values.astype(scalar))


async def run_partitions(task, partitions: int, workers: Optional[int] = None) -> List:
    """task(i) for every partition on at most `workers` threads; results in partition order"""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers or config.DEFAULT_WORKERS, thread_name_prefix="partition") as pool:
        return await asyncio.gather(*(loop.run_in_executor(pool, task, i) for i in range(partitions)))


def skew_exponents(fmt: FloatFormat) -> Tuple[int, int]:
    """(large, small) band exponents; the ulp of the large band exceeds every small value"""
    if fmt == BINARY32:
        return config.SKEW_LARGE_EXP, config.SKEW_SMALL_EXP
    if fmt == BINARY64:
        return config.SKEW_LARGE_EXP + config.SKEW_BINARY64_OFFSET, config.SKEW_SMALL_EXP
    raise ValueError(f"Skewed generator supports binary32 and binary64, not {fmt.label}")


class SumKernel:
    """
    Summation experiments

    Responsible for:
    - Generating the skewed positive vector
    - Scoring every scheme against the exact oracle
    - Partitioned summation with a deterministic merge
    """

    def __init__(self):
        self.role = "Summation of Positive Numbers"

    def gen_skewed_positive(self, n: int, seed: int, fmt: FloatFormat = BINARY32) -> List:
        """
        First ceil(3n/4) values uniform in [2^L, 2^(L+1)), the rest in [2^S, 2^(S+1)).

        Values are built as (2^f + k) * 2^(E - f) with integer k, so every one
        is exactly representable in fmt.
        """
        if n < 4:
            raise ValueError(f"Skewed vector needs n >= 4, got {n}")
        large_exp, small_exp = skew_exponents(fmt)
        f = fmt.frac_bits
        n_large = math.ceil(3 * n / 4)
        rng = np.random.default_rng(seed)
        k = rng.integers(0, 1 << f, size=n, dtype=np.int64).astype(np.float64)
        exponents = np.full(n, small_exp - f, dtype=np.float64)
        exponents[:n_large] = large_exp - f
        values = (2.0**f + k) * np.exp2(exponents)
        return to_host_list(values, fmt)

    async def sum_experiment(
        self,
        n: int,
        seed: int,
        fmt: FloatFormat,
        schemes: List[Scheme],
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        """One record per scheme on the skewed vector"""
        config.trace("SumKernel", f"n={n} seed={seed} format={fmt.label} schemes={[s.label for s in schemes]}")
        v = self.gen_skewed_positive(n, seed, fmt)
        records = await score_schemes("sum", v, schemes, fmt, engine=engine, n=n, seed=seed)
        self._trace_ratio(records)
        return records

    async def parallel_sum(
        self,
        v: List,
        partitions: int,
        policy: FoldPolicy,
        fmt: FloatFormat,
        engine: Optional[str] = None,
        scope: Optional[CountScope] = None,
        workers: Optional[int] = None,
    ):
        """
        Contiguous chunks summed independently (no terminal add), partials
        merged in chunk order with fe_add_fe, then finalized. The result
        depends only on (v, partitions, policy), never on `workers`.
        """
        if partitions < 1:
            raise ValueError(f"partitions must be >= 1, got {partitions}")
        bounds = np.linspace(0, len(v), partitions + 1).astype(int)
        chunks = [v[bounds[i] : bounds[i + 1]] for i in range(partitions)]
        scopes = [CountScope(f"partition-{i}") for i in range(partitions)]

        def run_chunk(i):
            arith = RebitsArithmetic(fmt, scopes[i], engine)
            return accumulate(chunks[i], policy, arith)[0]

        partials = await run_partitions(run_chunk, partitions, workers)

        merge_scope = CountScope("merge", parent=scope)
        for chunk_scope in scopes:
            merge_scope.merge(chunk_scope.report())
        arith = RebitsArithmetic(fmt, merge_scope, engine)
        total = partials[0]
        for partial in partials[1:]:
            total = fe_add_fe(total, partial, arith)
        return finalize(total, arith), merge_scope.report()

    async def naive_parallel_sum(
        self,
        v: List,
        partitions: int,
        fmt: FloatFormat,
        scope: Optional[CountScope] = None,
        workers: Optional[int] = None,
    ):
        """Per-chunk naive sums added in chunk order"""
        bounds = np.linspace(0, len(v), partitions + 1).astype(int)
        scopes = [CountScope(f"partition-{i}") for i in range(partitions)]

        def run_chunk(i):
            arith = NativeArithmetic(fmt, scopes[i])
            s = arith.zero
            for x in v[bounds[i] : bounds[i + 1]]:
                s = arith.add(s, x)
            return s

        partials = await run_partitions(run_chunk, partitions, workers)
        merge_scope = CountScope("merge", parent=scope)
        for chunk_scope in scopes:
            merge_scope.merge(chunk_scope.report())
        arith = NativeArithmetic(fmt, merge_scope)
        total = partials[0]
        for partial in partials[1:]:
            total = arith.add(total, partial)
        return total, merge_scope.report()

    async def parallel_experiment(
        self,
        n: int,
        seed: int,
        fmt: FloatFormat,
        partitions: int,
        schemes: List[Scheme],
        engine: Optional[str] = None,
        workers: Optional[int] = None,
    ) -> List[ResultRecord]:
        """parallel_sum records for the naive, rebits and oracle schemes"""
        unsupported = [s.label for s in schemes if s.kind not in (SchemeKind.NAIVE, SchemeKind.REBITS, SchemeKind.ORACLE)]
        if unsupported:
            raise UsageError(f"parallel-sum supports naive, rebits and oracle, not {unsupported}")
        v = self.gen_skewed_positive(n, seed, fmt)
        oracle, oracle_error = oracle_of(v, fmt)
        params = dict(n=n, seed=seed, partitions=partitions)
        records = []
        for scheme in schemes:
            try:
                if scheme.kind is SchemeKind.REBITS:
                    value, counts = await self.parallel_sum(v, partitions, scheme.policy, fmt, engine, workers=workers)
                elif scheme.kind is SchemeKind.NAIVE:
                    value, counts = await self.naive_parallel_sum(v, partitions, fmt, workers=workers)
                else:
                    if oracle_error:
                        raise NonFiniteInputError(oracle_error)
                    value, counts = oracle, None
            except RebitsError as exc:
                records.append(
                    ResultRecord(kernel="parallel-sum", scheme=scheme.label, format=fmt.label, error=str(exc), **params)
                )
                continue
            note = FINALIZE_NOTE if scheme.kind is SchemeKind.REBITS else ""
            records.append(
                measure(
                    "parallel-sum", scheme.label, fmt.label, value, oracle, counts, policy=scheme.policy_label, note=note, **params
                )
            )
        if oracle_error:
            config.trace("SumKernel", f"oracle unavailable: {oracle_error}")
        self._trace_ratio(records)
        return records

    @staticmethod
    def _trace_ratio(records: List[ResultRecord]) -> None:
        """Report the naive / rebits relative-error ratio as a measurement"""
        naive = [r.rel_err for r in records if r.scheme == "naive" and r.rel_err is not None]
        rebits = [r.rel_err for r in records if r.scheme == "rebits:fold=none" and r.rel_err is not None]
        if naive and rebits:
            ratio = "inf" if rebits[0] == 0 else f"{naive[0] / rebits[0]:.3g}"
            config.trace("SumKernel", f"naive rel err {naive[0]:.3g}, rebits (no fold) rel err {rebits[0]:.3g}, ratio {ratio}")

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List[Scheme]) -> List[ResultRecord]:
        """Run a `sum` or `parallel-sum` configuration"""
        n = cfg.n or config.DEFAULT_N
        if cfg.kernel == "parallel-sum":
            return await self.parallel_experiment(n, cfg.seed, fmt, cfg.partitions, schemes, cfg.engine, cfg.workers)
        return await self.sum_experiment(n, cfg.seed, fmt, schemes, cfg.engine)
