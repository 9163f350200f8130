"""
Numerical Integration Kernel

Composite trapezoid rule for y = integral_0^x 400 (t sin t + cos t - 1) dt,
whose closed form is 400 (2 sin x - x cos x - x). Each panel area
h (f(x_{i-1}) + f(x_i)) / 2 is computed once in the working format with
numpy's sin/cos; only the accumulation of the panels varies by scheme.
"""

import asyncio
import math
from typing import List, Optional

import numpy as np

from rebits import config
from rebits.accum import ExactAccumulator, exact_add, exact_round
from rebits.errors import RebitsError
from rebits.models import ResultRecord, RunConfig, measure
from rebits.opcount import CountScope, OpKind
from rebits.softfp import BINARY64, FloatFormat, host_type

from kernels.schemes import Scheme, SchemeKind, max_error, score_schemes
from kernels.sum_kernel import to_host_list


def closed_form(x: float) -> float:
    return 400.0 * (2.0 * math.sin(x) - x * math.cos(x) - x)


class IntegrationKernel:
    """
    Running integral accuracy

    Responsible for:
    - Panel areas in the working format
    - Final integral and sampled running integral per scheme
    """

    def __init__(self):
        self.role = "Trapezoid Integration"

    def panel_terms(self, x_max: float, steps: int, fmt: FloatFormat, scope: Optional[CountScope] = None) -> List:
        """Panel areas; 2 fpadd + 2 fpmult per f(x), 1 fpadd + 2 fpmult per area"""
        if steps < 1 or not x_max > 0:
            raise ValueError(f"Need steps >= 1 and x_max > 0, got steps={steps}, x_max={x_max}")
        dtype = np.float64 if host_type(fmt) is float else host_type(fmt)
        h = dtype(x_max / steps)
        x = (np.arange(steps + 1, dtype=np.float64) * (x_max / steps)).astype(dtype)
        with np.errstate(all="ignore"):
            f = dtype(400) * (x * np.sin(x) + np.cos(x) - dtype(1))
            areas = (f[:-1] + f[1:]) * h * dtype(0.5)
        if scope is not None:
            scope.record(OpKind.FPADD, 2 * (steps + 1) + steps)
            scope.record(OpKind.FPMULT, 2 * (steps + 1) + 2 * steps)
        return to_host_list(areas, fmt)

    async def trapezoid_integrate(
        self,
        x_max: float,
        steps: int,
        schemes: List[Scheme],
        fmt: FloatFormat,
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        config.trace("IntegrationKernel", f"x_max={x_max} steps={steps} format={fmt.label}")
        scope = CountScope("panels")
        terms = self.panel_terms(x_max, steps, fmt, scope)
        return await score_schemes("trapezoid", terms, schemes, fmt, engine=engine, base=scope.report(), n=steps)

    def trapezoid_profile(
        self,
        x_max: float,
        steps: int,
        samples: int,
        schemes: List[Scheme],
        fmt: FloatFormat,
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        """
        Running integral at `samples` evenly spaced panel counts. Each record's
        `n` is the panel count, so x = n * x_max / steps.
        """
        terms = self.panel_terms(x_max, steps, fmt)
        marks = sorted({max(1, round(k * steps / samples)) for k in range(1, samples + 1)})
        config.trace("IntegrationKernel", f"profile: {len(marks)} points over {steps} panels")

        oracle_values = []
        exact = ExactAccumulator(BINARY64)
        position = 0
        for mark in marks:
            for x in terms[position:mark]:
                exact = exact_add(exact, x)
            position = mark
            oracle_values.append(exact_round(exact, fmt))

        records = []
        for scheme in schemes:
            scope = CountScope(scheme.label)
            try:
                acc = scheme.accumulator(fmt, scope, engine)
                position = 0
                for mark, oracle in zip(marks, oracle_values):
                    if scheme.kind is not SchemeKind.ORACLE:
                        acc.extend(terms[position:mark])
                    position = mark
                    value = oracle if scheme.kind is SchemeKind.ORACLE else acc.result()
                    records.append(
                        measure(
                            "trapezoid-profile",
                            scheme.label,
                            fmt.label,
                            value,
                            oracle,
                            scope.report(),
                            n=mark,
                            policy=scheme.policy_label,
                        )
                    )
            except RebitsError as exc:
                records.append(
                    ResultRecord(kernel="trapezoid-profile", scheme=scheme.label, format=fmt.label, error=str(exc), n=steps)
                )
        return records

    @staticmethod
    def max_abs_err(records: List[ResultRecord], scheme: str) -> float:
        return max_error(records, scheme, "abs_err")

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List[Scheme]) -> List[ResultRecord]:
        """Run a `trapezoid` or `trapezoid-profile` configuration"""
        if cfg.kernel == "trapezoid-profile":
            return await asyncio.to_thread(self.trapezoid_profile, cfg.x_max, cfg.steps, cfg.samples, schemes, fmt, cfg.engine)
        return await self.trapezoid_integrate(cfg.x_max, cfg.steps, schemes, fmt, cfg.engine)
