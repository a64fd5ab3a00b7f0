"""Entropic projections, their closed-form counterparts and the verification harness."""

from .harness import HarnessReport, TrialRecord, THEOREMS, verify
from .oracle import sampling_oracle
from .solver import (
    ProjectionResult,
    SolverConfig,
    entropic_project,
    with_seed,
)
from .theory import (
    commutant_of,
    intersect,
    mre_joint,
    mre_posterior,
    regularized_d0P,
    sequential_projection,
    total_variation,
    triangle_residual,
)

__all__ = [
    "HarnessReport",
    "ProjectionResult",
    "SolverConfig",
    "THEOREMS",
    "TrialRecord",
    "commutant_of",
    "entropic_project",
    "intersect",
    "mre_joint",
    "mre_posterior",
    "regularized_d0P",
    "sampling_oracle",
    "sequential_projection",
    "total_variation",
    "triangle_residual",
    "verify",
    "with_seed",
]
