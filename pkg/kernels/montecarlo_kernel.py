"""
Monte Carlo Kernel

European call under geometric Brownian motion:

    S_T = S0 exp((r - sigma^2 / 2) T + sigma sqrt(T) Z),  Z ~ N(0, 1)
    price = exp(-r T) * sum(max(S_T - K, 0)) / paths

Payoffs are computed once in the working format; the payoff sum is the
scheme-dependent step.
"""

import math
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, field_validator

from rebits import config
from rebits.arith import NativeArithmetic
from rebits.models import ResultRecord, RunConfig
from rebits.opcount import CountScope, OpKind
from rebits.softfp import BINARY32, FloatFormat, host_type

from kernels.schemes import Scheme, SchemeKind, accumulate_terms, oracle_of, score_schemes
from kernels.sum_kernel import to_host_list

# (rng, size) -> standard normal draws
NormalSource = Callable[[np.random.Generator, int], np.ndarray]


class MarketParams(BaseModel):
    S0: float = config.MC_PARAMS["S0"]
    K: float = config.MC_PARAMS["K"]
    r: float = config.MC_PARAMS["r"]
    sigma: float = config.MC_PARAMS["sigma"]
    T: float = config.MC_PARAMS["T"]

    @field_validator("sigma", "T")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"Must be > 0, got {v}")
        return v


def standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.standard_normal(size)


class MonteCarloKernel:
    """
    Option pricing by simulation

    Responsible for:
    - Seeded terminal prices and call payoffs
    - Discounted mean of the payoffs under every scheme
    """

    def __init__(self):
        self.role = "Monte Carlo European Pricing"

    def payoff_terms(
        self,
        paths: int,
        seed: int,
        params: MarketParams,
        fmt: FloatFormat,
        scope: Optional[CountScope] = None,
        normals: NormalSource = standard_normals,
    ) -> List:
        """Per path: 2 fpadd, 2 fpmult, 1 fpcomp (exp is not counted)"""
        if paths < 1:
            raise ValueError(f"paths must be >= 1, got {paths}")
        dtype = np.float64 if host_type(fmt) is float else host_type(fmt)
        z = np.asarray(normals(np.random.default_rng(seed), paths), dtype=np.float64).astype(dtype)
        drift = dtype((params.r - 0.5 * params.sigma**2) * params.T)
        vol = dtype(params.sigma * math.sqrt(params.T))
        with np.errstate(all="ignore"):
            s_t = dtype(params.S0) * np.exp(drift + vol * z)
            payoffs = np.maximum(s_t - dtype(params.K), dtype(0))
        if scope is not None:
            scope.record(OpKind.FPADD, 2 * paths)
            scope.record(OpKind.FPMULT, 2 * paths)
            scope.record(OpKind.FPCOMP, paths)
        return to_host_list(payoffs, fmt)

    @staticmethod
    def discount(params: MarketParams, paths: int) -> Callable:
        """finish step: exp(-r T) * total / paths (1 fpmult, 1 fpdiv)"""

        def finish(total, arith: NativeArithmetic):
            factor = arith.cast(math.exp(-params.r * params.T))
            return arith.div(arith.mul(factor, total), arith.cast(paths))

        return finish

    def mc_euro_price(
        self,
        paths: int,
        seed: int,
        params: Optional[MarketParams] = None,
        scheme: Optional[Scheme] = None,
        fmt: FloatFormat = BINARY32,
        engine: Optional[str] = None,
        normals: NormalSource = standard_normals,
    ):
        """Price under one scheme"""
        params = params or MarketParams()
        scheme = scheme or Scheme(SchemeKind.REBITS)
        terms = self.payoff_terms(paths, seed, params, fmt, normals=normals)
        if scheme.kind is SchemeKind.ORACLE:
            total, error = oracle_of(terms, fmt)
            if error:
                raise ValueError(error)
        else:
            total = accumulate_terms(terms, scheme, fmt, engine=engine)
        return self.discount(params, paths)(total, NativeArithmetic(fmt))

    async def mc_experiment(
        self,
        paths: int,
        seed: int,
        schemes: List[Scheme],
        fmt: FloatFormat,
        params: Optional[MarketParams] = None,
        engine: Optional[str] = None,
        normals: NormalSource = standard_normals,
    ) -> List[ResultRecord]:
        params = params or MarketParams()
        config.trace("MonteCarloKernel", f"paths={paths} seed={seed} format={fmt.label} {params.model_dump()}")
        scope = CountScope("payoffs")
        terms = self.payoff_terms(paths, seed, params, fmt, scope, normals)
        return await score_schemes(
            "mc",
            terms,
            schemes,
            fmt,
            engine=engine,
            base=scope.report(),
            finish=self.discount(params, paths),
            n=paths,
            seed=seed,
        )

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List[Scheme]) -> List[ResultRecord]:
        return await self.mc_experiment(cfg.paths, cfg.seed, schemes, fmt, engine=cfg.engine)
