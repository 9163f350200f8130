"""
N-Body Kernel

Electric potential energy of n point charges, U = sum_{i<j} q_i q_j / |r_i - r_j|,
by direct pairwise summation with a unit Coulomb constant. Pair terms are
computed once in the working format; only their accumulation varies.
"""

from typing import List, Optional, Tuple

import numpy as np

from rebits import config
from rebits.models import ResultRecord, RunConfig
from rebits.opcount import CountScope, OpKind
from rebits.softfp import BINARY32, FloatFormat, host_type

from kernels.schemes import Scheme, SchemeKind, accumulate_terms, max_error, oracle_of, score_schemes
from kernels.sum_kernel import to_host_list


class NBodyKernel:
    """
    Point-charge potential

    Responsible for:
    - Seeded particle generation
    - Pairwise potential terms in the working format
    - Sweeps over the particle count
    """

    def __init__(self):
        self.role = "N-Body Potential"

    def gen_particles(self, n: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """Positions uniform in the unit cube, charges uniform in [-1, 1]"""
        if n < 2:
            raise ValueError(f"N-body needs n >= 2, got {n}")
        rng = np.random.default_rng(seed)
        positions = rng.random((n, 3))
        charges = rng.uniform(-1.0, 1.0, size=n)
        if len(np.unique(positions, axis=0)) < n:
            raise ValueError(f"Coincident particles for n={n}, seed={seed}")
        return positions, charges

    def pair_terms(
        self,
        positions: np.ndarray,
        charges: np.ndarray,
        fmt: FloatFormat,
        scope: Optional[CountScope] = None,
    ) -> List:
        """
        q_i q_j / r_ij for i < j, row by row. Per pair: 5 fpadd, 4 fpmult,
        1 fpdiv (the square root is not counted).
        """
        dtype = np.float64 if host_type(fmt) is float else host_type(fmt)
        pos = np.asarray(positions, dtype=np.float64).astype(dtype)
        q = np.asarray(charges, dtype=np.float64).astype(dtype)
        n = len(q)
        if pos.shape != (n, 3):
            raise ValueError(f"positions must have shape ({n}, 3), got {pos.shape}")

        terms = []
        with np.errstate(all="ignore"):
            for i in range(n - 1):
                d = pos[i + 1 :] - pos[i]
                r = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
                if np.any(r == 0):
                    j = i + 1 + int(np.argmax(r == 0))
                    raise ValueError(f"Particles {i} and {j} coincide")
                terms += to_host_list((q[i] * q[i + 1 :]) / r, fmt)

        pairs = n * (n - 1) // 2
        if scope is not None:
            scope.record(OpKind.FPADD, 5 * pairs)
            scope.record(OpKind.FPMULT, 4 * pairs)
            scope.record(OpKind.FPDIV, pairs)
        return terms

    def potential(
        self,
        positions,
        charges,
        scheme: Scheme,
        fmt: FloatFormat = BINARY32,
        engine: Optional[str] = None,
    ):
        """Potential of explicit particles under one scheme"""
        terms = self.pair_terms(positions, charges, fmt)
        if scheme.kind is SchemeKind.ORACLE:
            value, error = oracle_of(terms, fmt)
            if error:
                raise ValueError(error)
            return value
        return accumulate_terms(terms, scheme, fmt, engine=engine)

    def nbody_potential(
        self,
        n: int,
        seed: int,
        scheme: Scheme,
        fmt: FloatFormat = BINARY32,
        engine: Optional[str] = None,
    ):
        positions, charges = self.gen_particles(n, seed)
        return self.potential(positions, charges, scheme, fmt, engine)

    async def nbody_experiment(
        self,
        n: int,
        seed: int,
        schemes: List[Scheme],
        fmt: FloatFormat,
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        config.trace("NBodyKernel", f"n={n} seed={seed} format={fmt.label}")
        positions, charges = self.gen_particles(n, seed)
        scope = CountScope("pairs")
        terms = self.pair_terms(positions, charges, fmt, scope)
        return await score_schemes("nbody", terms, schemes, fmt, engine=engine, base=scope.report(), n=n, seed=seed)

    async def nbody_sweep(
        self,
        sweep: List[int],
        seed: int,
        schemes: List[Scheme],
        fmt: FloatFormat,
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        """One nbody_experiment per particle count"""
        records = []
        for n in sweep:
            records += await self.nbody_experiment(n, seed, schemes, fmt, engine)
        for scheme in schemes:
            config.trace("NBodyKernel", f"{scheme.label}: max rel err {max_error(records, scheme.label):.3g} over {sweep}")
        return records

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List[Scheme]) -> List[ResultRecord]:
        """The configured sweep, or the single particle count `n` when given"""
        sweep = [cfg.n] if cfg.n else cfg.sweep
        return await self.nbody_sweep(sweep, cfg.seed, schemes, fmt, cfg.engine)
