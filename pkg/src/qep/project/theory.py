"""Triangle equality, sequential projections, the regularised D0 and classical MRE."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .. import specmat as sm
from ..diverge import DivergenceKind, d0, divergence
from ..errors import InfiniteDivergence, ZeroProbability
from ..rules import JointTable, Sharp, as_evidence
from ..states import (
    CommutantQL,
    OrthogonalResolution,
    TracePinnedQqJ,
    as_projector,
    common_refinement,
    matrix_of,
    resolution_from_groups,
    validate_state,
)
from .solver import SolverConfig, entropic_project

TOL_PROB = 1e-12


def triangle_residual(kind, phi, rho, psi) -> float:
    """``|D(phi, rho) + D(rho, psi) - D(phi, psi)|``."""
    a = divergence(kind, phi, rho)
    b = divergence(kind, rho, psi)
    c = divergence(kind, phi, psi)
    if not all(map(math.isfinite, (a, b, c))):
        raise InfiniteDivergence("triangle residual needs finite divergences")
    return abs(a + b - c)


def regularized_d0P(phi, psi, P) -> float:
    """D0 evaluated on the compressions of both arguments to ``ran(P)``.

    The compressed ``psi`` keeps its trace ``tr(P psi)``; the unnormalised D0
    absorbs the deficit.
    """
    P = as_projector(P)
    psi_m = matrix_of(psi)
    if float(np.trace(P.matrix @ psi_m).real) <= TOL_PROB:
        raise ZeroProbability("tr(P psi) vanishes")
    V = P.basis()
    phi_b = sm.dagger(V) @ matrix_of(phi) @ V
    psi_b = sm.dagger(V) @ psi_m @ V
    return d0(validate_state(phi_b, normalized=False), validate_state(psi_b, normalized=False))


def intersect(constraints: Sequence) -> CommutantQL:
    """Intersection of commutant constraints with pairwise commuting generators."""
    if not all(isinstance(K, CommutantQL) for K in constraints):
        raise TypeError("only CommutantQL constraints can be intersected")
    return CommutantQL(common_refinement(*(K.resolution for K in constraints)))


def sequential_projection(psi, constraints: Sequence, kind=DivergenceKind.D0,
                          cfg: SolverConfig | None = None):
    """Project onto each constraint in turn, feeding each output into the next."""
    current = psi
    for K in constraints:
        current = entropic_project(kind, current, K, cfg).minimizer
    return current


def commutant_of(P) -> CommutantQL:
    """``{omega : [omega, P] = 0}`` as a commutant of ``{P, I - P}``."""
    P = as_projector(P)
    members = tuple(Q for Q in (P, P.complement()) if Q.rank > 0)
    return CommutantQL(OrthogonalResolution(members))


# --- classical maximum relative entropy -------------------------------------------

def _product_encoding(prior: JointTable):
    """Diagonal state for a joint table and the resolution grouping cells by observation."""
    nx, nt = prior.p.shape
    psi = np.diag(prior.p.reshape(-1).astype(complex))
    groups = [list(range(x * nt, (x + 1) * nt)) for x in range(nx)]
    return validate_state(psi, normalized=True), resolution_from_groups(np.eye(nx * nt), groups)


def mre_joint(prior: JointTable, evidence, cfg: SolverConfig | None = None):
    """Minimise ``WGKL(q, p)`` over joint tables ``q`` with a prescribed observation marginal."""
    evidence = as_evidence(evidence, prior.nx)
    if isinstance(evidence, Sharp):
        f = np.zeros(prior.nx)
        f[int(evidence.index)] = 1.0
    else:
        f = np.asarray(evidence.f, dtype=float)
    psi, R = _product_encoding(prior)
    result = entropic_project(DivergenceKind.WGKL, psi, TracePinnedQqJ(R, tuple(f)), cfg)
    q = np.diag(result.minimizer.matrix).real.reshape(prior.p.shape)
    return q, result


def mre_posterior(prior: JointTable, evidence, cfg: SolverConfig | None = None) -> np.ndarray:
    q, _ = mre_joint(prior, evidence, cfg)
    return q.sum(axis=0)


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
