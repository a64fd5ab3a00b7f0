"""Quantum state updates as entropic projections, with a numerical verification harness."""

from . import diverge, modular, rules, specmat, states
from .diverge import DivergenceKind, divergence
from .errors import QEPError
from .states import (
    CommutantQL,
    DensityOperator,
    FaceQsL,
    OrthogonalResolution,
    Projector,
    SupportBlock,
    TracePinnedQqJ,
)

__version__ = "0.1.0"

__all__ = [
    "CommutantQL",
    "DensityOperator",
    "DivergenceKind",
    "FaceQsL",
    "OrthogonalResolution",
    "Projector",
    "QEPError",
    "SupportBlock",
    "TracePinnedQqJ",
    "divergence",
    "diverge",
    "modular",
    "rules",
    "specmat",
    "states",
]
