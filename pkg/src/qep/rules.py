"""Closed-form state-update rules: the Lüders family, quantum Jeffrey, Bayes and Jeffrey."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import specmat as sm
from .errors import (
    DimensionMismatch,
    SupportViolation,
    WeightMismatch,
    ZeroEvidence,
    ZeroProbability,
)
from .states import (
    DensityOperator,
    OrthogonalResolution,
    as_projector,
    as_weights,
    block_decompose,
    matrix_of,
    validate_state,
)

TOL_PROB = 1e-12


def _check_dim(A: np.ndarray, d: int) -> None:
    if A.shape != (d, d):
        raise DimensionMismatch(f"state of shape {A.shape} vs dimension {d}")


def _state(A: np.ndarray, normalized: bool) -> DensityOperator:
    return validate_state(A, normalized=normalized)


def outcome_probability(rho, P) -> float:
    """``tr(P rho)``."""
    return float(np.trace(as_projector(P).matrix @ matrix_of(rho)).real)


def weak_lueders(rho, R: OrthogonalResolution) -> DensityOperator:
    """Pinching ``rho -> sum_i P_i rho P_i``; trace is preserved, not renormalized."""
    A = matrix_of(rho)
    _check_dim(A, R.dim)
    return _state(block_decompose(A, R).diagonal_part(), normalized=False)


def strong_lueders(rho, P) -> DensityOperator:
    """``P rho P / tr(P rho P)``; raises :class:`ZeroProbability` when ``tr(P rho)`` vanishes."""
    P = as_projector(P)
    A = matrix_of(rho)
    _check_dim(A, P.dim)
    p = outcome_probability(A, P)
    if p <= TOL_PROB:
        raise ZeroProbability(f"tr(P rho) = {p:.3e}")
    return _state(P.matrix @ A @ P.matrix / p, normalized=True)


def semi_strong_lueders(rho, R: OrthogonalResolution, J: Sequence[int]) -> DensityOperator:
    """Partial collapse onto the members of ``R`` indexed by ``J`` (zero-based)."""
    A = matrix_of(rho)
    _check_dim(A, R.dim)
    J = sorted(set(int(j) for j in J))
    if not J or J[0] < 0 or J[-1] >= len(R):
        raise IndexError(f"index subset {J!r} out of range for {len(R)} projectors")
    num = sum(R[j].matrix @ A @ R[j].matrix for j in J)
    p = float(np.trace(num).real)
    if p <= TOL_PROB:
        raise ZeroProbability(f"sum of outcome probabilities is {p:.3e}")
    return _state(num / p, normalized=True)


def strong_von_neumann(xi, P) -> np.ndarray:
    """State-vector reduction ``xi -> P xi / <xi, P xi>^{1/2}``."""
    P = as_projector(P)
    xi = np.asarray(xi, dtype=complex).ravel()
    if xi.size != P.dim:
        raise DimensionMismatch(f"vector of length {xi.size} vs dimension {P.dim}")
    Pxi = P.matrix @ xi
    p = float(np.vdot(xi, Pxi).real)
    if p <= TOL_PROB:
        raise ZeroProbability(f"<xi, P xi> = {p:.3e}")
    return Pxi / np.sqrt(p)


def quantum_jeffrey(rho, R: OrthogonalResolution, weights) -> DensityOperator:
    """``sum_i lambda_i P_i rho P_i / tr(rho P_i)``.

    Blocks with ``lambda_i = 0`` are dropped, so ``tr(rho P_i)`` may vanish there.
    """
    lam = as_weights(weights)
    if len(lam) != len(R):
        raise WeightMismatch(f"{len(lam)} weights for {len(R)} projectors")
    A = matrix_of(rho)
    _check_dim(A, R.dim)
    out = np.zeros_like(A)
    for P, w in zip(R, lam):
        if w == 0.0:
            continue
        p = outcome_probability(A, P)
        if p <= TOL_PROB:
            raise ZeroProbability(f"tr(rho P_i) = {p:.3e} with lambda_i = {w}")
        out = out + w * (P.matrix @ A @ P.matrix) / p
    return _state(out, normalized=True)


def qj_consistency(rho_new, rho, R: OrthogonalResolution,
                   tol: float = 1e-9) -> tuple[bool, float]:
    """Check the block-proportionality characterisation of quantum Jeffrey outputs.

    ``rho_new`` must commute with every ``P_i`` and, on every block it
    populates, ``P_i rho_new P_i / tr(rho_new P_i) = P_i rho P_i / tr(rho P_i)``.
    Blocks carrying no weight in ``rho_new`` are exempt.
    """
    N = matrix_of(rho_new)
    A = matrix_of(rho)
    _check_dim(N, R.dim)
    _check_dim(A, R.dim)
    residual = sm.operator_norm(block_decompose(N, R).remainder)
    for P in R:
        q = outcome_probability(N, P)
        if q <= TOL_PROB:
            continue
        p = outcome_probability(A, P)
        if p <= TOL_PROB:
            raise ZeroProbability(f"tr(rho P_i) = {p:.3e} where rho_new has weight {q:.3e}")
        diff = P.matrix @ N @ P.matrix / q - P.matrix @ A @ P.matrix / p
        residual = max(residual, float(np.max(np.abs(diff))))
    return bool(residual <= tol), residual


# --- classical branch -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JointTable:
    """Joint probabilities ``p[x, theta]`` on a finite grid (rows are observations)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise ValueError(f"joint table must be a nonempty 2-d array, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("joint table entries must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"joint table sums to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def nx(self) -> int:
        return self.p.shape[0]

    @property
    def ntheta(self) -> int:
        return self.p.shape[1]

    def marginal_x(self) -> np.ndarray:
        return self.p.sum(axis=1)

    def marginal_theta(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def conditional_theta(self, x: int) -> np.ndarray:
        row = self.p[x]
        total = row.sum()
        if total <= 0:
            raise ZeroEvidence(f"p(x={x}) = 0")
        return row / total


@dataclass(frozen=True)
class Sharp:
    """Evidence that observation ``index`` occurred."""

    index: int


@dataclass(frozen=True)
class Soft:
    """Evidence fixing the new marginal on observations to ``f``."""

    f: tuple

    def __post_init__(self):
        f = tuple(float(v) for v in self.f)
        if any(v < 0 for v in f) or abs(sum(f) - 1.0) > 1e-12:
            raise ValueError("soft evidence must be a probability vector")
        object.__setattr__(self, "f", f)


Evidence = Union[Sharp, Soft]


def bayes_update(prior: JointTable, evidence: Sharp) -> np.ndarray:
    b = int(evidence.index)
    if not 0 <= b < prior.nx:
        raise IndexError(f"observation {b} out of range")
    return prior.conditional_theta(b)


def jeffrey_update(prior: JointTable, evidence: Soft) -> np.ndarray:
    f = np.asarray(evidence.f)
    if f.size != prior.nx:
        raise ValueError(f"{f.size} evidence weights for {prior.nx} observations")
    px = prior.marginal_x()
    out = np.zeros(prior.ntheta)
    for x in range(prior.nx):
        if f[x] == 0.0:
            continue
        if px[x] <= 0.0:
            raise SupportViolation(f"f({x}) > 0 but p(x={x}) = 0")
        out += f[x] * prior.conditional_theta(x)
    return out


def jeffrey_joint(prior: JointTable, evidence: Soft) -> np.ndarray:
    """Updated joint table ``p(theta | x) f(x)``."""
    f = np.asarray(evidence.f)
    out = np.zeros_like(prior.p)
    for x in range(prior.nx):
        if f[x] > 0.0:
            out[x] = f[x] * prior.conditional_theta(x)
    return out


def as_evidence(evidence, nx: int) -> Evidence:
    if isinstance(evidence, (Sharp, Soft)):
        return evidence
    if np.ndim(evidence) == 0:
        return Sharp(int(evidence))
    return Soft(tuple(evidence))


def classical_update(prior: JointTable, evidence) -> np.ndarray:
    evidence = as_evidence(evidence, prior.nx)
    if isinstance(evidence, Sharp):
        return bayes_update(prior, evidence)
    return jeffrey_update(prior, evidence)
