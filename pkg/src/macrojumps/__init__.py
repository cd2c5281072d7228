"""Trajectory simulator and analytic toolkit for macroscopic quantum jumps
of two three-level atoms in a lossy optical cavity.

The emitted photon stream blinks between macroscopic light and dark periods;
dark periods herald the maximally entangled antisymmetric ground state.
"""

from macrojumps.model import (
    BasisIndex,
    JumpChannel,
    Model,
    ModelParams,
    Operator,
    build_model,
)

__all__ = [
    "BasisIndex",
    "JumpChannel",
    "Model",
    "ModelParams",
    "Operator",
    "build_model",
]

__version__ = "0.1.0"
