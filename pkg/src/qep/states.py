"""Quantum states, projector families and the constraint sets built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import specmat as sm
from .errors import (
    DimensionMismatch,
    NotNormalized,
    NotPartition,
    NotProjector,
    NotResolution,
    NotUnitary,
    WeightMismatch,
)

TOL_PROJ = 1e-9
TOL_MEMBER = 1e-8
TOL_UNITARY = 1e-9
TOL_TRACE = 1e-9


def _readonly(A: np.ndarray) -> np.ndarray:
    A = np.array(A, dtype=complex)
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A positive semidefinite Hermitian matrix with its recorded trace.

    Normalized states have ``trace == 1``; unnormalized positive functionals
    (for example a compressed block ``P psi P``) carry their actual trace.
    Build instances through :func:`validate_state`.
    """

    matrix: np.ndarray
    trace: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def support(self, rank_tol: float = sm.RANK_TOL) -> np.ndarray:
        return sm.support_projector(self.matrix, rank_tol)

    def rank(self, rank_tol: float = sm.RANK_TOL) -> int:
        return sm.rank(self.matrix, rank_tol)

    def sqrt(self) -> "HSVector":
        return HSVector(_readonly(sm.fn_on_support(self.matrix, sm.SQRT)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim}, trace={self.trace:.6g})"


@dataclass(frozen=True, eq=False)
class HSVector:
    """Square-root representative of a state in Hilbert-Schmidt space."""

    matrix: np.ndarray

    @property
    def norm(self) -> float:
        return sm.hs_norm(self.matrix)


StateLike = Union[DensityOperator, np.ndarray]


def matrix_of(x) -> np.ndarray:
    if isinstance(x, (DensityOperator, Projector, HSVector)):
        return x.matrix
    return np.asarray(x, dtype=complex)


def validate_state(M, normalized: bool = True) -> DensityOperator:
    """Check Hermiticity, positivity and (optionally) unit trace. Never rescales."""
    H = sm.check_hermitian(matrix_of(M))
    sm.psd_eigh(H)
    tr = float(np.trace(H).real)
    if normalized and abs(tr - 1.0) > TOL_TRACE:
        raise NotNormalized(f"trace is {tr!r}, expected 1")
    return DensityOperator(_readonly(H), tr)


def as_state(x, normalized: bool = False) -> DensityOperator:
    if isinstance(x, DensityOperator):
        return x
    return validate_state(x, normalized=normalized)


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=complex)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise NotProjector(f"expected a square matrix, got shape {P.shape}")
        defect = max(sm.hermiticity_defect(P), float(np.max(np.abs(P @ P - P))))
        if defect > TOL_PROJ:
            raise NotProjector(f"P^2 = P = P^dagger violated by {defect:.3e}")
        object.__setattr__(self, "matrix", _readonly(0.5 * (P + sm.dagger(P))))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def basis(self) -> np.ndarray:
        """Isometry ``V`` (d x rank) with ``V V^dagger = P``."""
        dec = sm.eigh(self.matrix)
        return dec.eigenvectors[:, dec.eigenvalues > 0.5]

    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim) - self.matrix)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def as_projector(P) -> Projector:
    return P if isinstance(P, Projector) else Projector(P)


@dataclass(frozen=True, eq=False)
class OrthogonalResolution:
    """Mutually orthogonal projectors summing to the identity."""

    members: tuple

    def __post_init__(self):
        members = tuple(as_projector(P) for P in self.members)
        if not members:
            raise NotResolution("empty resolution")
        d = members[0].dim
        if any(P.dim != d for P in members):
            raise DimensionMismatch("projectors of different dimension")
        total = sum(P.matrix for P in members)
        defect = float(np.max(np.abs(total - np.eye(d))))
        for i, P in enumerate(members):
            for Q in members[i + 1:]:
                defect = max(defect, float(np.max(np.abs(P.matrix @ Q.matrix))))
        if defect > TOL_PROJ:
            raise NotResolution(f"resolution of identity violated by {defect:.3e}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> Projector:
        return self.members[i]

    def matrices(self) -> list:
        return [P.matrix for P in self.members]


def resolution_from_groups(basis, groups: Sequence[Sequence[int]]) -> OrthogonalResolution:
    """``P_i = sum_{k in groups[i]} b_k b_k^dagger`` for the columns ``b_k`` of ``basis``.

    Group indices are zero-based.
    """
    B = np.asarray(basis, dtype=complex)
    d = B.shape[0]
    if B.shape != (d, d) or np.max(np.abs(sm.dagger(B) @ B - np.eye(d))) > TOL_UNITARY:
        raise NotUnitary("basis is not a unitary matrix")
    flat = sorted(int(k) for g in groups for k in g)
    if flat != list(range(d)) or any(len(g) == 0 for g in groups):
        raise NotPartition(f"groups {groups!r} do not partition range({d})")
    members = []
    for g in groups:
        cols = B[:, list(g)]
        members.append(Projector(cols @ sm.dagger(cols)))
    return OrthogonalResolution(tuple(members))


def computational_resolution(d: int, groups: Sequence[Sequence[int]] | None = None):
    if groups is None:
        groups = [[k] for k in range(d)]
    return resolution_from_groups(np.eye(d), groups)


def common_refinement(*resolutions: OrthogonalResolution) -> OrthogonalResolution:
    """Nonzero products of members of pairwise commuting resolutions."""
    products = [np.eye(resolutions[0].dim, dtype=complex)]
    for R in resolutions:
        nxt = []
        for A in products:
            for P in R:
                if np.max(np.abs(A @ P.matrix - P.matrix @ A)) > TOL_PROJ:
                    raise NotResolution("resolutions do not commute")
                C = A @ P.matrix
                if np.trace(C).real > 0.5:
                    nxt.append(C)
        products = nxt
    return OrthogonalResolution(tuple(products))


@dataclass(frozen=True)
class JeffreyWeights:
    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(x < 0 for x in w):
            raise WeightMismatch("weights must be nonnegative")
        if abs(sum(w) - 1.0) > 1e-12:
            raise WeightMismatch(f"weights sum to {sum(w)!r}, expected 1")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def __getitem__(self, i) -> float:
        return self.weights[i]


def as_weights(w) -> JeffreyWeights:
    return w if isinstance(w, JeffreyWeights) else JeffreyWeights(tuple(w))


# --- constraint sets ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CommutantQL:
    """States commuting with every member of a resolution."""

    resolution: OrthogonalResolution

    @property
    def dim(self) -> int:
        return self.resolution.dim


@dataclass(frozen=True, eq=False)
class TracePinnedQqJ:
    """Block-diagonal states with ``tr(omega P_i) = lambda_i``."""

    resolution: OrthogonalResolution
    weights: JeffreyWeights

    def __post_init__(self):
        object.__setattr__(self, "weights", as_weights(self.weights))
        if len(self.weights) != len(self.resolution):
            raise WeightMismatch(
                f"{len(self.weights)} weights for {len(self.resolution)} projectors")

    @property
    def dim(self) -> int:
        return self.resolution.dim


@dataclass(frozen=True, eq=False)
class FaceQsL:
    """The face ``{omega : tr(omega P) = tr(omega) = 1}``."""

    projector: Projector

    def __post_init__(self):
        object.__setattr__(self, "projector", as_projector(self.projector))

    @property
    def dim(self) -> int:
        return self.projector.dim


@dataclass(frozen=True, eq=False)
class SupportBlock:
    """Normalized states with ``omega = P omega P``."""

    projector: Projector

    def __post_init__(self):
        object.__setattr__(self, "projector", as_projector(self.projector))

    @property
    def dim(self) -> int:
        return self.projector.dim


ConstraintSet = Union[CommutantQL, TracePinnedQqJ, FaceQsL, SupportBlock]


def absolutely_continuous(omega, phi, rank_tol: float = sm.RANK_TOL,
                          tol: float = 1e-8) -> bool:
    """``supp(omega) <= supp(phi)``: every support eigenvector of omega lies in ran(phi)."""
    W = matrix_of(omega)
    F = matrix_of(phi)
    if W.shape != F.shape:
        raise DimensionMismatch(f"{W.shape} vs {F.shape}")
    dec = sm.psd_eigh(W)
    vecs = dec.eigenvectors[:, sm.support_mask(dec.eigenvalues, rank_tol)]
    if vecs.shape[1] == 0:
        return True
    S = sm.support_projector(F, rank_tol)
    leak = vecs - S @ vecs
    return bool(np.max(np.linalg.norm(leak, axis=0)) <= tol)


def in_constraint(omega, K: ConstraintSet, tol: float = TOL_MEMBER) -> tuple[bool, float]:
    """Membership test returning ``(residual <= tol, residual)``.

    The residual is the largest violation among the defining conditions:
    operator norms of commutators for ``CommutantQL``, trace deviations for the
    trace conditions, ``||omega - P omega P||`` for ``SupportBlock``.
    """
    W = matrix_of(omega)
    if W.shape != (K.dim, K.dim):
        raise DimensionMismatch(f"state of shape {W.shape} vs constraint dim {K.dim}")
    tr = np.trace(W).real
    res = abs(tr - 1.0)
    if isinstance(K, CommutantQL):
        for P in K.resolution:
            res = max(res, sm.operator_norm(P.matrix @ W - W @ P.matrix))
    elif isinstance(K, TracePinnedQqJ):
        for P, lam in zip(K.resolution, K.weights):
            res = max(res, sm.operator_norm(P.matrix @ W - W @ P.matrix))
            res = max(res, abs(np.trace(W @ P.matrix).real - lam))
    elif isinstance(K, FaceQsL):
        res = max(res, abs(np.trace(W @ K.projector.matrix).real - 1.0))
    elif isinstance(K, SupportBlock):
        P = K.projector.matrix
        res = max(res, sm.operator_norm(W - P @ W @ P))
    else:
        raise TypeError(f"unknown constraint set {K!r}")
    return bool(res <= tol), float(res)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: list = field(default_factory=list)
    remainder: np.ndarray = None

    def diagonal_part(self) -> np.ndarray:
        return sum(self.blocks)


def block_decompose(A, R: OrthogonalResolution) -> BlockDecomposition:
    """Split ``A`` into ``P_i A P_i`` and the off-diagonal remainder."""
    A = matrix_of(A)
    if A.shape != (R.dim, R.dim):
        raise DimensionMismatch(f"matrix of shape {A.shape} vs resolution dim {R.dim}")
    blocks = [P.matrix @ A @ P.matrix for P in R]
    return BlockDecomposition(blocks, A - sum(blocks))


def pinch(A, R: OrthogonalResolution) -> np.ndarray:
    return block_decompose(A, R).diagonal_part()


def subspace_intersection(V: np.ndarray, S: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of ``ran(V) ∩ ran(S)`` for an isometry ``V`` and projector ``S``."""
    if V.shape[1] == 0:
        return V
    dec = sm.eigh(sm.dagger(V) @ S @ V)
    return V @ dec.eigenvectors[:, dec.eigenvalues > 1.0 - tol]
