"""Entropic projection by first-order minimisation over block-diagonal states.

Every constraint set handled here is a product of scaled state spaces on the
blocks ``ran(P_i)``: a feasible state is ``phi = sum_i w_i V_i sigma_i V_i^dagger``
with ``V_i`` an isometry onto the block and ``sigma_i`` a density matrix on it.
Each ``sigma_i`` is parametrised as ``exp(H_i) / tr exp(H_i)`` and free block
weights as a softmax, so positivity and the trace pins hold exactly at every
iterate and no projection step is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .. import specmat as sm
from ..diverge import DivergenceKind, divergence
from ..errors import DimensionMismatch, Infeasible, MaxIterExceeded, SingularInput, ZeroProbability
from ..states import (
    CommutantQL,
    DensityOperator,
    FaceQsL,
    SupportBlock,
    TracePinnedQqJ,
    as_state,
    in_constraint,
    matrix_of,
    subspace_intersection,
    validate_state,
)

TOL_PROB = 1e-12
_MAX_MOVE = 1.0


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 20000
    step_init: float = 1.0
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    grad_tol: float = 1e-10
    feas_tol: float = 1e-9
    seed: int = 0
    restarts: int = 1
    random_init: bool = False

    def __post_init__(self):
        if min(self.step_init, self.grad_tol, self.feas_tol, self.armijo_c) <= 0:
            raise ValueError("solver tolerances and steps must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if self.restarts < 1 or self.max_iter < 1:
            raise ValueError("restarts and max_iter must be at least 1")


@dataclass(frozen=True)
class ProjectionResult:
    minimizer: DensityOperator
    objective: float
    grad_residual: float
    feas_residual: float
    iterations: int
    converged: bool
    history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        from ..jsonio import encode_matrix, encode_real
        return {
            "minimizer": {"matrix": encode_matrix(self.minimizer.matrix), "normalized": True},
            "objective": encode_real(self.objective),
            "grad_residual": encode_real(self.grad_residual),
            "feas_residual": encode_real(self.feas_residual),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


# --- feasible-set geometry ------------------------------------------------------

@dataclass
class Geometry:
    """Block isometries and the weight rule of a constraint set.

    ``weights is None`` means the block traces are free (they only sum to one).
    """

    dim: int
    bases: list
    weights: np.ndarray | None

    @property
    def covering(self) -> np.ndarray:
        return np.hstack(self.bases)

    def assemble(self, blocks) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for V, B in zip(self.bases, blocks):
            out += V @ B @ sm.dagger(V)
        return out


def geometry_of(K) -> Geometry:
    if isinstance(K, CommutantQL):
        return Geometry(K.dim, [P.basis() for P in K.resolution], None)
    if isinstance(K, TracePinnedQqJ):
        bases, weights = [], []
        for P, lam in zip(K.resolution, K.weights):
            if lam > 0.0:
                bases.append(P.basis())
                weights.append(lam)
        return Geometry(K.dim, bases, np.array(weights))
    if isinstance(K, (FaceQsL, SupportBlock)):
        if K.projector.rank == 0:
            raise Infeasible("the zero projector admits no states")
        return Geometry(K.dim, [K.projector.basis()], np.array([1.0]))
    raise TypeError(f"unknown constraint set {K!r}")


def _restrict(geom: Geometry, keep) -> Geometry:
    """Replace each block basis by ``keep(V)``; drop blocks that become empty."""
    bases, weights = [], []
    for i, V in enumerate(geom.bases):
        Vr = keep(V)
        if Vr.shape[1] > 0:
            bases.append(Vr)
            if geom.weights is not None:
                weights.append(geom.weights[i])
        elif geom.weights is not None and geom.weights[i] > 0.0:
            raise ZeroProbability(f"block {i} carries weight {geom.weights[i]} "
                                  "but no admissible support")
    if not bases:
        raise Infeasible("no block is compatible with the support of psi")
    return Geometry(geom.dim, bases, None if geom.weights is None else np.array(weights))


def _block_support(psi: np.ndarray):
    def keep(V):
        dec = sm.psd_eigh(sm.dagger(V) @ psi @ V)
        top = max(float(np.max(np.abs(psi))), 1.0)
        return V @ dec.eigenvectors[:, dec.eigenvalues > sm.RANK_TOL * top]
    return keep


# --- objectives -----------------------------------------------------------------
#
# An objective maps the block matrices phi_i (block coordinates) to a smooth
# value and its Euclidean gradients G_i, so that the directional derivative
# along block-diagonal perturbations dphi_i is sum_i Re tr(G_i dphi_i). The
# value omits the parameter-free part ``const``: line searches then compare
# small numbers near the optimum instead of differences lost in roundoff.

class _D0:
    """``D0(phi, psi) = tr phi - tr psi + tr psi (log psi - log phi)``."""

    def __init__(self, psi, geom):
        self.psi_blocks = [sm.dagger(V) @ psi @ V for V in geom.bases]
        self.const = (float(np.trace(psi @ sm.fn_on_support(psi, sm.LOG)).real)
                      - float(np.trace(psi).real))

    def __call__(self, blocks, log_blocks):
        value = 0.0
        grads = []
        for B, L, S in zip(blocks, log_blocks, self.psi_blocks):
            value += float(np.trace(B).real) - float(np.trace(S @ L).real)
            grads.append(np.eye(B.shape[0]) - sm.frechet_log(B, S))
        return value, grads


class _D1:
    """``D1(phi, psi) = tr psi - tr phi + tr phi (log phi - log psi)``."""

    def __init__(self, psi, geom):
        log_psi = sm.fn_on_support(psi, sm.LOG)
        self.log_psi_blocks = [sm.dagger(V) @ log_psi @ V for V in geom.bases]
        self.const = float(np.trace(psi).real)

    def __call__(self, blocks, log_blocks):
        value = 0.0
        grads = []
        for B, L, M in zip(blocks, log_blocks, self.log_psi_blocks):
            value += float(np.trace(B @ (L - M)).real) - float(np.trace(B).real)
            grads.append(L - M)
        return value, grads


class _HSStates:
    """Squared Hilbert-Schmidt distance between density matrices."""

    def __init__(self, psi, geom):
        self.psi_blocks = [sm.dagger(V) @ psi @ V for V in geom.bases]
        self.const = sm.hs_norm(psi) ** 2 - sum(sm.hs_norm(S) ** 2 for S in self.psi_blocks)

    def __call__(self, blocks, log_blocks):
        value = 0.0
        grads = []
        for B, S in zip(blocks, self.psi_blocks):
            value += sm.hs_norm(B - S) ** 2
            grads.append(2.0 * (B - S))
        return value, grads


class _HalfSqrt:
    """``2 (tr phi + tr psi) - 4 tr(sqrt(phi) sqrt(psi))``."""

    def __init__(self, psi, geom):
        root = sm.fn_on_support(psi, sm.SQRT)
        self.root_blocks = [sm.dagger(V) @ root @ V for V in geom.bases]
        self.const = 2.0 * float(np.trace(psi).real)

    def __call__(self, blocks, log_blocks):
        value = 0.0
        grads = []
        for B, S in zip(blocks, self.root_blocks):
            rB = sm.fn_on_support(B, sm.SQRT)
            value += 2.0 * float(np.trace(B).real) - 4.0 * float(np.trace(rB @ S).real)
            grads.append(2.0 * np.eye(B.shape[0]) - 4.0 * sm.frechet_sqrt(B, S))
        return value, grads


class _BuresSq:
    """``tr phi + tr psi - 2 tr sqrt(sqrt(psi) phi sqrt(psi))`` on the covered subspace."""

    def __init__(self, psi, geom):
        W = geom.covering
        self.root = sm.fn_on_support(sm.dagger(W) @ psi @ W, sm.SQRT)
        self.sizes = [V.shape[1] for V in geom.bases]
        self.const = float(np.trace(psi).real)

    def __call__(self, blocks, log_blocks):
        n = sum(self.sizes)
        phi_w = np.zeros((n, n), dtype=complex)
        offs = np.cumsum([0] + self.sizes)
        for k, B in enumerate(blocks):
            phi_w[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] = B
        M = self.root @ phi_w @ self.root
        M = 0.5 * (M + sm.dagger(M))
        dec = sm.eigh(M)
        lam = np.clip(dec.eigenvalues, 0.0, None)
        fid_root = float(np.sum(np.sqrt(lam)))
        inv_half = sm.fn_on_support(M, sm.power(-0.5))
        G = np.eye(n) - self.root @ inv_half @ self.root
        value = float(np.trace(phi_w).real) - 2.0 * fid_root
        grads = [G[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] for k in range(len(blocks))]
        return value, grads


def _reported(kind: DivergenceKind, smooth_value: float) -> float:
    if kind in (DivergenceKind.L2_HS_STATES, DivergenceKind.BURES):
        return math.sqrt(max(smooth_value, 0.0))
    if kind is DivergenceKind.L2_HS_SQRT:
        return math.sqrt(max(smooth_value / 2.0, 0.0))
    return smooth_value


# --- parametrisation --------------------------------------------------------------

class _Point:
    """Blocks, logs and per-block eigendata at a parameter value."""

    def __init__(self, logits, hs, geom):
        self.logits = logits
        self.hs = hs
        if geom.weights is None:
            z = logits - np.max(logits)
            e = np.exp(z)
            self.w = e / e.sum()
            self.log_w = z - math.log(e.sum())
        else:
            self.w = geom.weights
            self.log_w = np.log(geom.weights)
        self.eig = []
        self.sigma = []
        self.blocks = []
        self.logs = []
        for H, w, lw in zip(hs, self.w, self.log_w):
            dec = sm.eigh(H)
            h = dec.eigenvalues
            U = dec.eigenvectors
            shifted = h - h[-1]
            e = np.exp(shifted)
            Z = e.sum()
            s = e / Z
            self.eig.append((shifted, U, Z))
            sigma = (U * s) @ sm.dagger(U)
            self.sigma.append(sigma)
            self.blocks.append(w * sigma)
            self.logs.append((U * (lw + shifted - math.log(Z))) @ sm.dagger(U))


def _divided_exp(h: np.ndarray) -> np.ndarray:
    """First divided differences of ``exp`` on ``h <= 0`` without overflow."""
    hi, hj = h[:, None], h[None, :]
    x = hi - hj
    near = np.abs(x) < 1.0
    safe = np.where(x == 0.0, 1.0, x)
    close = np.exp(np.minimum(hi, hj)) * np.where(x == 0.0, 1.0, np.expm1(np.abs(safe)) / np.abs(safe))
    far = (np.exp(hi) - np.exp(hj)) / safe
    return np.where(near, close, far)


class _Slope(NamedTuple):
    """Descent data at a point.

    ``dir_*`` is the mirror-descent direction: the trace-free block gradient
    ``G_i - <G_i, sigma_i> I`` itself (and ``g_i - mean`` for free weights),
    which moves every log-eigenvalue at the same rate however small the
    eigenvalue. ``slope`` is the directional derivative along it and
    ``residual`` its largest block norm, the stationarity measure.
    """

    dir_a: np.ndarray
    dir_h: list
    slope: float
    residual: float


def _slope(point: _Point, grads, free_weights: bool) -> _Slope:
    g_scalar = np.array([float(np.trace(G @ S).real) for G, S in zip(grads, point.sigma)])
    residual = 0.0
    slope = 0.0
    dir_h = []
    for G, g, w, (h, U, Z) in zip(grads, g_scalar, point.w, point.eig):
        Gt = G - g * np.eye(G.shape[0])
        Gt = 0.5 * (Gt + sm.dagger(Gt))
        residual = max(residual, sm.hs_norm(Gt))
        # chain rule through exp(H)/Z: d f / d H = w U (Gamma o U^dagger Gt U) U^dagger
        M = sm.dagger(U) @ Gt @ U
        slope += w * float(np.sum(_divided_exp(h) / Z * np.abs(M) ** 2))
        dir_h.append(Gt)
    if free_weights:
        dir_a = g_scalar - float(np.dot(point.w, g_scalar))
        slope += float(np.dot(point.w, dir_a ** 2))
        residual = max(residual, float(np.max(np.abs(dir_a))))
    else:
        dir_a = np.zeros_like(point.logits)
    return _Slope(dir_a, dir_h, slope, residual)


def _inner(a1, h1, a2, h2) -> float:
    return float(np.dot(a1, a2)) + sum(float(np.vdot(x, y).real) for x, y in zip(h1, h2))


def _random_hermitian(k: int, rng) -> np.ndarray:
    G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return 0.5 * (G + sm.dagger(G))


def _initial(geom: Geometry, rng):
    m = len(geom.bases)
    if rng is None:
        return np.zeros(m), [np.zeros((V.shape[1], V.shape[1]), dtype=complex) for V in geom.bases]
    logits = rng.normal(size=m) if geom.weights is None else np.zeros(m)
    return logits, [_random_hermitian(V.shape[1], rng) for V in geom.bases]


def _descend(objective, geom: Geometry, start, cfg: SolverConfig):
    """Mirror descent with Barzilai-Borwein steps and Armijo backtracking."""
    free = geom.weights is None
    logits, hs = start
    point = _Point(logits, hs, geom)
    f, grads = objective(point.blocks, point.logs)
    sl = _slope(point, grads, free)
    history = [f + objective.const]
    step = cfg.step_init
    prev = None
    it = 0
    while it < cfg.max_iter and sl.residual > cfg.grad_tol:
        it += 1
        if prev is not None:
            s_a, s_h, y_a, y_h = prev
            sy = _inner(s_a, s_h, y_a, y_h)
            if sy > 0:
                step = _inner(s_a, s_h, s_a, s_h) / sy
            step = min(max(step, 1e-12), 1e12)
        move = max([float(np.max(np.abs(sl.dir_a))) if sl.dir_a.size else 0.0]
                   + [sm.operator_norm(D) for D in sl.dir_h])
        if step * move > _MAX_MOVE:
            # large jumps in log-eigenvalues saturate exp and strand the iterate on the boundary
            step = _MAX_MOVE / move
        slack = 64.0 * np.finfo(float).eps * max(1.0, abs(f))
        accepted = False
        while step > 1e-30:
            cand = _Point(point.logits - step * sl.dir_a,
                          [H - step * D for H, D in zip(point.hs, sl.dir_h)], geom)
            try:
                f_new, grads_new = objective(cand.blocks, cand.logs)
            except SingularInput:
                # an eigenvalue underflowed to the boundary; treat as a rejected step
                f_new = math.inf
            if np.isfinite(f_new):
                sl_new = _slope(cand, grads_new, free)
                if f_new <= f - cfg.armijo_c * step * sl.slope:
                    accepted = True
                elif f_new <= f + slack and sl_new.residual < sl.residual:
                    # objective differences are below roundoff; fall back on the residual
                    accepted = True
                if accepted:
                    break
            step *= cfg.armijo_shrink
        if not accepted:
            break
        prev = (cand.logits - point.logits, [a - b for a, b in zip(cand.hs, point.hs)],
                sl_new.dir_a - sl.dir_a, [a - b for a, b in zip(sl_new.dir_h, sl.dir_h)])
        point, f, sl = cand, f_new, sl_new
        history.append(f + objective.const)
    return point, f, sl.residual, it, history


_OBJECTIVES = {
    DivergenceKind.D0: _D0,
    DivergenceKind.D1_UMEGAKI: _D1,
    DivergenceKind.WGKL: _D1,
    DivergenceKind.L2_HS_STATES: _HSStates,
    DivergenceKind.D_HALF: _HalfSqrt,
    DivergenceKind.L2_HS_SQRT: _HalfSqrt,
    DivergenceKind.BURES: _BuresSq,
}


def prepare(kind, psi, K, regularize: bool = False):
    """Resolve the feasible geometry and smooth objective for a projection problem."""
    kind = DivergenceKind.parse(kind)
    if kind is DivergenceKind.L1_JMGK:
        raise ValueError("L1_JMGK is non-smooth; use sampling_oracle")
    psi = matrix_of(psi)
    if psi.shape != (K.dim, K.dim):
        raise DimensionMismatch(f"psi of shape {psi.shape} vs constraint dim {K.dim}")
    geom = geometry_of(K)
    if kind is DivergenceKind.D0:
        if regularize:
            W = geom.covering
            psi = W @ sm.dagger(W) @ psi @ W @ sm.dagger(W)
        else:
            W = geom.covering
            outside = float(np.trace(psi).real - np.trace(sm.dagger(W) @ psi @ W).real)
            if outside > TOL_PROB:
                raise Infeasible("D0 is +inf on the whole constraint set; "
                                 "psi has weight outside the feasible blocks")
        if float(np.trace(psi).real) <= TOL_PROB:
            raise ZeroProbability("psi has no weight on the feasible blocks")
        geom = _restrict(geom, _block_support(psi))
    elif kind in (DivergenceKind.D1_UMEGAKI, DivergenceKind.WGKL):
        S = sm.support_projector(psi)
        geom = _restrict(geom, lambda V: subspace_intersection(V, S))
    return kind, psi, geom, _OBJECTIVES[kind](psi, geom)


def entropic_project(kind, psi, K, cfg: SolverConfig | None = None, *,
                     regularize: bool = False, strict: bool = False) -> ProjectionResult:
    """Minimise ``D(phi, psi)`` over ``phi`` in ``K``.

    ``regularize=True`` (``D0`` on a face or support block only) compresses
    ``psi`` to the block first, giving the regularised ``D0^P``. When the
    iteration budget runs out the best iterate is returned with
    ``converged=False``, or :class:`MaxIterExceeded` is raised if ``strict``.
    """
    cfg = cfg or SolverConfig()
    kind, psi_eff, geom, objective = prepare(kind, psi, K, regularize)
    rng = np.random.default_rng(cfg.seed)
    best = None
    for r in range(cfg.restarts):
        start = _initial(geom, rng if (r > 0 or cfg.random_init) else None)
        point, f, res, it, history = _descend(objective, geom, start, cfg)
        if best is None or f < best[1] - 1e-15 or (f <= best[1] + 1e-15 and res < best[2]):
            best = (point, f, res, it, history)
    point, f, res, it, history = best

    phi = geom.assemble(point.blocks)
    phi = 0.5 * (phi + sm.dagger(phi))
    phi = validate_state(phi, normalized=True)
    _, feas = in_constraint(phi, K)
    if kind is DivergenceKind.D0 and regularize:
        from .theory import regularized_d0P
        objective_value = regularized_d0P(phi, psi, K.projector)
    elif kind in (DivergenceKind.D0, DivergenceKind.D1_UMEGAKI, DivergenceKind.WGKL):
        objective_value = divergence(kind, phi, as_state(psi))
    else:
        objective_value = _reported(kind, f + objective.const)
    converged = res <= cfg.grad_tol and feas <= cfg.feas_tol
    result = ProjectionResult(phi, float(objective_value), float(res), float(feas), it,
                              bool(converged), tuple(history))
    if strict and not converged:
        raise MaxIterExceeded(f"no convergence after {it} iterations (residual {res:.3e})")
    return result


def with_seed(cfg: SolverConfig, seed: int) -> SolverConfig:
    return replace(cfg, seed=int(seed))
