"""Random states, unitaries and resolutions for experiments and tests."""

from __future__ import annotations

import numpy as np

from .specmat import dagger
from .states import (
    DensityOperator,
    OrthogonalResolution,
    resolution_from_groups,
    validate_state,
)


def seed_for(master: int, *keys: int) -> int:
    """Derive a child seed from a master seed and a tuple of integer keys."""
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFF, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def haar_unitary(d: int, rng) -> np.ndarray:
    Z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_state(d: int, rng, rank: int | None = None) -> DensityOperator:
    """Hilbert-Schmidt (Ginibre) random density matrix of the given rank."""
    k = d if rank is None else rank
    G = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    A = G @ dagger(G)
    return validate_state(A / np.trace(A).real, normalized=True)


def random_full_rank_state(d: int, rng, floor: float = 0.0) -> DensityOperator:
    """Ginibre state mixed with ``floor * I / d`` to keep eigenvalues away from zero."""
    rho = random_state(d, rng).matrix
    return validate_state((1.0 - floor) * rho + floor * np.eye(d) / d, normalized=True)


def random_pure(d: int, rng) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_partition(d: int, rng, n_groups: int | None = None) -> list:
    if n_groups is None:
        n_groups = int(rng.integers(2, d + 1)) if d > 1 else 1
    perm = rng.permutation(d)
    cuts = np.sort(rng.choice(np.arange(1, d), size=n_groups - 1, replace=False)) if n_groups > 1 else []
    return [sorted(int(k) for k in g) for g in np.split(perm, cuts)]


def random_resolution(d: int, rng, n_groups: int | None = None) -> OrthogonalResolution:
    return resolution_from_groups(haar_unitary(d, rng), random_partition(d, rng, n_groups))


def random_weights(n: int, rng, floor: float = 0.0) -> tuple:
    """Flat-simplex draw, squeezed so that every weight is at least ``floor``."""
    w = rng.dirichlet(np.ones(n))
    w = floor + (1.0 - n * floor) * w
    w = w / w.sum()
    return tuple(float(x) for x in w)


def random_block_state(R: OrthogonalResolution, rng, weights=None) -> DensityOperator:
    """Random full-rank state commuting with every member of ``R``."""
    if weights is None:
        weights = random_weights(len(R), rng)
    out = np.zeros((R.dim, R.dim), dtype=complex)
    for P, w in zip(R, weights):
        V = P.basis()
        k = V.shape[1]
        G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        B = G @ dagger(G)
        out += w * V @ (B / np.trace(B).real) @ dagger(V)
    return validate_state(out, normalized=True)
