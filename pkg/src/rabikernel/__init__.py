"""Quantum Rabi model heat kernel: series, Trotter kernels, partition functions and a Fock-space oracle."""

from .core import EvalPoint, Kernel2x2, ModelParams, SimplexPoint
from .quadrature import QuadraturePlan, SimplexRule
from .series import TruncationPolicy, heat_kernel, parity_kernel
from .thermo import ThermoPoint, parity_partition, partition_function

__all__ = [
    "EvalPoint", "Kernel2x2", "ModelParams", "SimplexPoint",
    "QuadraturePlan", "SimplexRule", "TruncationPolicy",
    "heat_kernel", "parity_kernel", "ThermoPoint", "partition_function", "parity_partition",
]

__version__ = "0.1.0"
