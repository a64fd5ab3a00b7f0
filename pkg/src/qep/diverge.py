"""Distances and divergences between quantum states, and transition probabilities.

Support violations are values, not errors: the asymmetric divergences return
``math.inf`` whenever the required absolute continuity fails.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from . import specmat as sm
from .errors import LengthMismatch
from .states import absolutely_continuous, matrix_of


class DivergenceKind(enum.Enum):
    D0 = "d0"
    D1_UMEGAKI = "d1-umegaki"
    D_HALF = "d-half"
    BURES = "bures"
    L1_JMGK = "l1-jmgk"
    L2_HS_STATES = "l2-states"
    L2_HS_SQRT = "l2-sqrt"
    WGKL = "wgkl"

    @classmethod
    def parse(cls, token) -> "DivergenceKind":
        if isinstance(token, cls):
            return token
        token = str(token).strip().lower().replace("_", "-")
        for kind in cls:
            if token in (kind.value, kind.name.lower().replace("_", "-")):
                return kind
        raise ValueError(f"unknown divergence kind {token!r}")


def _tr(A) -> float:
    return float(np.trace(A).real)


def _sqrtm(A) -> np.ndarray:
    return sm.fn_on_support(A, sm.SQRT)


def d1_umegaki(omega, phi) -> float:
    """Umegaki relative entropy, extended to unnormalized positive operators.

    ``tr(phi) - tr(omega) + tr(omega (log omega - log phi))`` when
    ``omega << phi``, ``inf`` otherwise; logarithms act on supports.
    """
    W = matrix_of(omega)
    F = matrix_of(phi)
    if not absolutely_continuous(W, F):
        return math.inf
    log_w = sm.fn_on_support(W, sm.LOG)
    log_f = sm.fn_on_support(F, sm.LOG)
    return _tr(F) - _tr(W) + float(np.trace(W @ (log_w - log_f)).real)


def d0(omega, phi) -> float:
    """``D0(omega, phi) = D1(phi, omega)``; finite iff ``phi << omega``."""
    return d1_umegaki(phi, omega)


def d_half(omega, phi) -> float:
    W = matrix_of(omega)
    F = matrix_of(phi)
    overlap = float(np.trace(_sqrtm(F) @ _sqrtm(W)).real)
    return 2.0 * (_tr(F) + _tr(W)) - 4.0 * overlap


def tp_raggio(phi, psi) -> float:
    return float(np.trace(_sqrtm(matrix_of(phi)) @ _sqrtm(matrix_of(psi))).real)


def tp_cu(phi, psi) -> float:
    """Cantoni-Uhlmann transition probability ``(tr sqrt(sqrt(phi) psi sqrt(phi)))**2``."""
    r = _sqrtm(matrix_of(phi))
    M = r @ matrix_of(psi) @ r
    w = np.clip(sm.eigh(0.5 * (M + sm.dagger(M))).eigenvalues, 0.0, None)
    return float(np.sum(np.sqrt(w))) ** 2


def bures(phi, psi) -> float:
    F = matrix_of(phi)
    S = matrix_of(psi)
    return math.sqrt(max(0.0, _tr(F) + _tr(S) - 2.0 * math.sqrt(tp_cu(F, S))))


def l1_jmgk(phi, psi) -> float:
    return 0.5 * sm.trace_norm(matrix_of(phi) - matrix_of(psi))


def l2_states(phi, psi) -> float:
    return sm.hs_norm(matrix_of(phi) - matrix_of(psi))


def l2_sqrt(phi, psi) -> float:
    return sm.hs_norm(_sqrtm(matrix_of(phi)) - _sqrtm(matrix_of(psi)))


def wgkl(p, q) -> float:
    """Kullback-Leibler divergence of finite nonnegative vectors, ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise LengthMismatch(f"{p.size} vs {q.size} entries")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be nonnegative")
    live = p > 0
    if np.any(q[live] == 0):
        return math.inf
    return float(np.sum(p[live] * np.log(p[live] / q[live])))


def _wgkl_states(omega, phi) -> float:
    return wgkl(np.diag(matrix_of(omega)).real, np.diag(matrix_of(phi)).real)


_RULES = {
    DivergenceKind.D0: d0,
    DivergenceKind.D1_UMEGAKI: d1_umegaki,
    DivergenceKind.D_HALF: d_half,
    DivergenceKind.BURES: bures,
    DivergenceKind.L1_JMGK: l1_jmgk,
    DivergenceKind.L2_HS_STATES: l2_states,
    DivergenceKind.L2_HS_SQRT: l2_sqrt,
    DivergenceKind.WGKL: _wgkl_states,
}


def divergence(kind, a, b) -> float:
    """Evaluate ``kind`` at ``(a, b)``.

    For ``WGKL`` the arguments may be probability vectors or (diagonal) states.
    """
    kind = DivergenceKind.parse(kind)
    if kind is DivergenceKind.WGKL and np.ndim(matrix_of(a)) == 1:
        return wgkl(a, b)
    return _RULES[kind](a, b)
