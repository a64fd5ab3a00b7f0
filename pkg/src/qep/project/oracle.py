"""Derivative-free corroboration of projection results.

The oracle draws random feasible states (flat-simplex spectra, Haar block
unitaries, flat-simplex block weights for free weights) and then refines the
best draw by a pattern search along a randomly rotated coordinate frame,
halving the mesh whenever a full sweep fails to improve. It only evaluates the
divergence, so it also handles the non-smooth trace-norm objective.
"""

from __future__ import annotations

import math

import numpy as np

from ..diverge import DivergenceKind, divergence
from ..errors import Infeasible
from ..states import (
    CommutantQL,
    FaceQsL,
    SupportBlock,
    TracePinnedQqJ,
    as_state,
    in_constraint,
    validate_state,
)
from .solver import ProjectionResult

MESH_TOL = 1e-10


class _Layout:
    """Feasible blocks and how a real parameter vector maps onto a state."""

    def __init__(self, K):
        if isinstance(K, CommutantQL):
            self.bases = [P.basis() for P in K.resolution]
            self.fixed = None
        elif isinstance(K, TracePinnedQqJ):
            pairs = [(P.basis(), lam) for P, lam in zip(K.resolution, K.weights) if lam > 0.0]
            self.bases = [V for V, _ in pairs]
            self.fixed = np.array([lam for _, lam in pairs])
        elif isinstance(K, (FaceQsL, SupportBlock)):
            if K.projector.rank == 0:
                raise Infeasible("the zero projector admits no states")
            self.bases = [K.projector.basis()]
            self.fixed = np.array([1.0])
        else:
            raise TypeError(f"unknown constraint set {K!r}")
        self.dim = K.dim
        self.sizes = [V.shape[1] for V in self.bases]
        self.n_weights = 0 if self.fixed is not None or len(self.bases) == 1 else len(self.bases)
        # a 1 x 1 block is pinned to its projector, so it carries no parameters
        self.n_params = self.n_weights + sum(2 * k * k for k in self.sizes if k > 1)

    def weights(self, x):
        if self.fixed is not None:
            return self.fixed
        if self.n_weights == 0:
            return np.array([1.0])
        a = x[: self.n_weights] ** 2
        total = a.sum()
        if total == 0.0:
            return np.full(self.n_weights, 1.0 / self.n_weights)
        return a / total

    def state(self, x) -> np.ndarray:
        w = self.weights(x)
        pos = self.n_weights
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for V, k, wi in zip(self.bases, self.sizes, w):
            if k == 1:
                out += wi * (V @ V.conj().T)
                continue
            A = (x[pos:pos + k * k] + 1j * x[pos + k * k:pos + 2 * k * k]).reshape(k, k)
            pos += 2 * k * k
            B = A @ A.conj().T
            t = np.trace(B).real
            B = B / t if t > 0 else np.eye(k) / k
            out += wi * (V @ B @ V.conj().T)
        return 0.5 * (out + out.conj().T)

    def sample(self, rng) -> np.ndarray:
        parts = []
        if self.n_weights:
            parts.append(np.sqrt(rng.dirichlet(np.ones(self.n_weights))))
        for k in self.sizes:
            if k == 1:
                continue
            Z = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            Q, R = np.linalg.qr(Z)
            Q = Q * (np.diag(R) / np.abs(np.diag(R)))
            A = Q * np.sqrt(rng.dirichlet(np.ones(k)))
            parts.extend([A.real.ravel(), A.imag.ravel()])
        return np.concatenate(parts) if parts else np.zeros(0)


def sampling_oracle(kind, psi, K, budget: int = 20000, seed: int = 0, *,
                    regularize: bool = False) -> ProjectionResult:
    """Best feasible state found for ``D(., psi)`` within ``budget`` objective evaluations.

    ``grad_residual`` carries the final pattern-search mesh size; ``converged``
    means the mesh collapsed below ``1e-10`` before the budget ran out.
    """
    kind = DivergenceKind.parse(kind)
    psi_state = as_state(psi)
    layout = _Layout(K)
    rng = np.random.default_rng(seed)

    if kind is DivergenceKind.D0 and regularize:
        from .theory import regularized_d0P

        def objective(x):
            return regularized_d0P(layout.state(x), psi_state, K.projector)
    else:
        def objective(x):
            return divergence(kind, layout.state(x), psi_state)

    evals = 0
    best_x, best_f = None, math.inf
    n_draws = max(1, budget // 4)
    for _ in range(n_draws):
        x = layout.sample(rng)
        f = objective(x)
        evals += 1
        if best_x is None or f < best_f:
            best_x, best_f = x, f
        if layout.n_params == 0:
            break

    mesh = 0.25
    n = layout.n_params
    while n and evals < budget and mesh > MESH_TOL:
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        improved = False
        for j in range(n):
            for sign in (1.0, -1.0):
                if evals >= budget:
                    break
                cand = best_x + sign * mesh * Q[:, j]
                f = objective(cand)
                evals += 1
                if f < best_f:
                    best_x, best_f, improved = cand, f, True
                    break
        if not improved:
            mesh *= 0.5
    if n == 0:
        mesh = 0.0

    phi = validate_state(layout.state(best_x), normalized=True)
    _, feas = in_constraint(phi, K)
    return ProjectionResult(phi, float(best_f), float(mesh), float(feas), evals,
                            bool(mesh <= MESH_TOL))
