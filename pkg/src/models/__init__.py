"""
Delayed Cucker-Smale Model

This module provides the ensemble state, communication rates, initial data
and the right-hand side of the Cucker-Smale system with reaction-type delay.
"""

from .cucker_smale import (
    EnsembleState,
    ModelParams,
    cs_rhs,
    interaction_matrix,
    make_flat_rhs,
    pairwise_distances,
    velocity_update,
)
from .initial_data import InitialDatum, constant_datum, linear_ramp, random_cloud
from .kernels import Kernel, kernel_derivative, kernel_eval, validate_kernel
from .simulation import simulate

__all__ = [
    "EnsembleState",
    "ModelParams",
    "cs_rhs",
    "interaction_matrix",
    "make_flat_rhs",
    "pairwise_distances",
    "velocity_update",
    "InitialDatum",
    "constant_datum",
    "linear_ramp",
    "random_cloud",
    "Kernel",
    "kernel_derivative",
    "kernel_eval",
    "validate_kernel",
    "simulate",
]
