"""
REBits Experiment Kernels
"""

from .schemes import Scheme, SchemeKind, parse_schemes
from .sum_kernel import SumKernel
from .grid_kernel import Grid, GridKernel
from .norm_kernel import NormKernel
from .integration_kernel import IntegrationKernel
from .nbody_kernel import NBodyKernel
from .montecarlo_kernel import MarketParams, MonteCarloKernel
from .dd_kernel import DoubleDoubleKernel
from .verify_kernel import AdderVerificationKernel

__all__ = [
    "Scheme",
    "SchemeKind",
    "parse_schemes",
    "SumKernel",
    "Grid",
    "GridKernel",
    "NormKernel",
    "IntegrationKernel",
    "NBodyKernel",
    "MarketParams",
    "MonteCarloKernel",
    "DoubleDoubleKernel",
    "AdderVerificationKernel"
]
