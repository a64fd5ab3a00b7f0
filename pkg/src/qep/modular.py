"""Finite-dimensional relative modular calculus.

Matrices are vectorised by stacking columns, so ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import specmat as sm
from .errors import NonCommutingSupports, SupportViolation
from .states import absolutely_continuous, matrix_of


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


@dataclass(frozen=True, eq=False)
class Superoperator:
    dim: int
    matrix: np.ndarray

    def __call__(self, X) -> np.ndarray:
        return unvec(self.matrix @ vec(X), self.dim)

    def spectrum(self) -> np.ndarray:
        return sm.eigh(self.matrix).eigenvalues


def relative_modular(phi, omega) -> Superoperator:
    """``Delta_{phi,omega}: X -> rho_phi X rho_omega^{-1}``, inverse taken on supp(omega)."""
    F = matrix_of(phi)
    W = matrix_of(omega)
    W_inv = sm.fn_on_support(W, sm.power(-1.0))
    return Superoperator(F.shape[0], np.kron(W_inv.T, F))


def araki_d1(omega, phi) -> float:
    """``-<xi(omega), log(Delta_{phi,omega}) xi(omega)>`` with ``xi(omega) = omega^{1/2}``.

    The logarithm is taken of the d^2 x d^2 superoperator on its support, so
    this path shares nothing with the trace formula in :mod:`qep.diverge`
    beyond the support test.
    """
    W = matrix_of(omega)
    F = matrix_of(phi)
    if not absolutely_continuous(W, F):
        return math.inf
    delta = relative_modular(F, W)
    log_delta = sm.fn_on_support(delta.matrix, sm.LOG)
    xi = vec(sm.fn_on_support(W, sm.SQRT))
    value = -np.vdot(xi, log_delta @ xi).real
    return float(value + np.trace(F).real - np.trace(W).real)


def _supports_commute(phi: np.ndarray, omega: np.ndarray, tol: float = 1e-9) -> bool:
    S = sm.support_projector(phi)
    T = sm.support_projector(omega)
    return float(np.max(np.abs(S @ T - T @ S))) <= tol


def connes_cocycle(phi, omega, t: float) -> np.ndarray:
    """``(D phi : D omega)_t = rho_phi^{it} rho_omega^{-it}``, imaginary powers on supports."""
    F = matrix_of(phi)
    W = matrix_of(omega)
    if not _supports_commute(F, W):
        raise NonCommutingSupports("cocycle requires commuting supports")
    return sm.fn_on_support(F, sm.ipower(t)) @ sm.fn_on_support(W, sm.ipower(-t))


def modular_flow(omega, t: float, x) -> np.ndarray:
    """``sigma^omega_t(x) = rho_omega^{it} x rho_omega^{-it}``."""
    W = matrix_of(omega)
    return sm.fn_on_support(W, sm.ipower(t)) @ np.asarray(x) @ sm.fn_on_support(W, sm.ipower(-t))


@dataclass(frozen=True)
class PetzEstimate:
    value: float
    error: float
    t_grid: tuple
    samples: tuple
    imag_residual: float
    order: float


DEFAULT_T_GRID = (1e-2, 1e-3, 1e-4, 1e-5)


def _petz_sample(W: np.ndarray, F: np.ndarray, t: float) -> complex:
    u = connes_cocycle(F, W, t)
    return 1j * np.trace(W @ (u - np.eye(W.shape[0]))) / t


def petz_limit_d1(omega, phi, t_grid: Sequence[float] = DEFAULT_T_GRID) -> PetzEstimate:
    """Estimate ``D1(omega, phi)`` as ``i lim_{t->0+} omega((D phi: D omega)_t - 1) / t``.

    The real part of each sample is even in ``t``, so Richardson extrapolation
    in ``t**2`` is applied over the last three grid points (two levels). The
    error bar is the magnitude of the final correction.
    """
    W = matrix_of(omega)
    F = matrix_of(phi)
    if not absolutely_continuous(W, F):
        raise SupportViolation("omega is not absolutely continuous with respect to phi")
    ts = np.asarray(sorted((float(t) for t in t_grid), reverse=True))
    if ts.size < 3 or np.any(ts <= 0):
        raise ValueError("t_grid needs at least three positive values")
    samples = np.array([_petz_sample(W, F, t) for t in ts])
    re = samples.real

    t3 = ts[-3:]
    r3 = re[-3:]
    level1 = []
    for k in range(2):
        q = (t3[k] / t3[k + 1]) ** 2
        level1.append((q * r3[k + 1] - r3[k]) / (q - 1.0))
    q = (t3[0] / t3[1]) ** 4
    value = (q * level1[1] - level1[0]) / (q - 1.0)
    error = abs(value - level1[1])

    # observed order from the two coarsest samples
    e0 = abs(re[0] - value)
    e1 = abs(re[1] - value)
    if e0 <= 1e-14 or e1 <= 1e-14:
        order = math.inf
    else:
        order = math.log(e0 / e1) / math.log(ts[0] / ts[1])
    return PetzEstimate(
        value=float(value),
        error=float(error),
        t_grid=tuple(float(t) for t in ts),
        samples=tuple(float(x) for x in re),
        imag_residual=float(abs(samples.imag[-1])),
        order=float(order),
    )
