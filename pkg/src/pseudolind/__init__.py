"""Pseudo-Lindblad representation of Redfield dynamics and its quantum-trajectory unravelling."""

from .bath import BathSpec, OhmicDrude, coupling_density, coupling_density_table
from .opcore import SpectralBasis, eigendecompose, gksl_dissipator
from .plform import JumpPair, TransformParams, lambda_phi_jumps, minimal_weights, optimal_params, weights
from .redfield import CouplingChannel, RedfieldGenerator

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "CouplingChannel",
    "JumpPair",
    "OhmicDrude",
    "RedfieldGenerator",
    "SpectralBasis",
    "TransformParams",
    "coupling_density",
    "coupling_density_table",
    "eigendecompose",
    "gksl_dissipator",
    "lambda_phi_jumps",
    "minimal_weights",
    "optimal_params",
    "weights",
]
