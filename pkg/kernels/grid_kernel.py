"""
Grid Kernel

Sum of a rows x cols field (sea-height style) under four traversal orders.
The shipped generator overlays cancelling pairs of huge values on a small
signal, so the summation is ill-conditioned and naive results depend on
the traversal order.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from rebits import config
from rebits.accum import exact_sum, to_fraction
from rebits.models import ORDERS, ResultRecord, RunConfig
from rebits.softfp import BINARY64, FloatFormat

from kernels.schemes import Scheme, score_schemes
from kernels.sum_kernel import to_host_list


@dataclass(frozen=True)
class Grid:
    values: np.ndarray  # rows x cols, float64

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def traverse(self, order: str) -> np.ndarray:
        """Flatten in one of: row, reverse-row, col, reverse-col"""
        if order == "row":
            return self.values.ravel(order="C")
        if order == "reverse-row":
            return self.values.ravel(order="C")[::-1]
        if order == "col":
            return self.values.ravel(order="F")
        if order == "reverse-col":
            return self.values.ravel(order="F")[::-1]
        raise ValueError(f"Unknown traversal order: {order}. Valid options: {ORDERS}")

    def condition_number(self) -> float:
        """sum |x| / |sum x|, both exact"""
        flat = self.values.ravel().tolist()
        total = to_fraction(exact_sum(flat))
        magnitude = to_fraction(exact_sum(abs(x) for x in flat))
        return float("inf") if total == 0 else float(magnitude / abs(total))


class GridKernel:
    """
    Order-sensitivity experiments

    Responsible for:
    - Generating the seeded ill-conditioned grid
    - Summing it under every traversal order and scheme
    """

    def __init__(self):
        self.role = "Grid Summation Orders"

    def gen_grid(
        self,
        rows: int = config.GRID_ROWS,
        cols: int = config.GRID_COLS,
        seed: int = config.DEFAULT_SEED,
        fmt: FloatFormat = BINARY64,
    ) -> Grid:
        """
        Signal: integers * 2^-20 in [-1, 1]. Overlay: one cancelling pair
        (+L, -L) per GRID_PAIR_FRACTION cells, L in [2^44, 2^45), written
        over the signal. Every value is exact in fmt; the exact sum is the
        sum of the surviving signal cells.
        """
        rng = np.random.default_rng(seed)
        cells = rows * cols
        signal = rng.integers(-(1 << 20), (1 << 20) + 1, size=cells).astype(np.float64) * 2.0**-20

        f = fmt.frac_bits
        pairs = cells // config.GRID_PAIR_FRACTION // 2
        positions = rng.permutation(cells)[: 2 * pairs]
        k = rng.integers(0, 1 << min(f, 52), size=pairs).astype(np.float64)
        large = (2.0**f + k) * 2.0 ** (config.GRID_LARGE_EXP - f)
        signal[positions[:pairs]] = large
        signal[positions[pairs:]] = -large
        return Grid(signal.reshape(rows, cols))

    def constant_grid(self, rows: int, cols: int, value: float = 1.0) -> Grid:
        return Grid(np.full((rows, cols), value, dtype=np.float64))

    async def grid_sum_orders(
        self,
        grid: Grid,
        schemes: List[Scheme],
        fmt: FloatFormat = BINARY64,
        orders: Optional[List[str]] = None,
        seed: int = 0,
        engine: Optional[str] = None,
    ) -> List[ResultRecord]:
        """One record per (order, scheme)"""
        orders = orders or ORDERS
        config.trace("GridKernel", f"{grid.rows}x{grid.cols} orders={orders} schemes={[s.label for s in schemes]}")
        records = []
        for order in orders:
            terms = to_host_list(grid.traverse(order), fmt)
            records += await score_schemes(
                "grid", terms, schemes, fmt, engine=engine, n=grid.rows * grid.cols, seed=seed, order=order
            )
        self._trace_spread(records)
        return records

    @staticmethod
    def spread(records: List[ResultRecord], scheme: str) -> float:
        """max - min of one scheme's values across orders"""
        values = [r.value for r in records if r.scheme == scheme and r.value is not None]
        return max(values) - min(values) if values else 0.0

    def _trace_spread(self, records: List[ResultRecord]) -> None:
        for scheme in sorted({r.scheme for r in records}):
            config.trace("GridKernel", f"{scheme}: order spread {self.spread(records, scheme):.6g}")

    async def execute(self, cfg: RunConfig, fmt: FloatFormat, schemes: List[Scheme]) -> List[ResultRecord]:
        grid = self.gen_grid(cfg.rows, cfg.cols, cfg.seed, fmt)
        config.trace("GridKernel", f"condition number {grid.condition_number():.3g}")
        return await self.grid_sum_orders(grid, schemes, fmt, cfg.orders, cfg.seed, cfg.engine)
