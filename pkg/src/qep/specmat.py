"""Spectral calculus for Hermitian matrices.

All matrix functions in the package route through :func:`eigh`, one
eigendecomposition per call. Functions of positive semidefinite matrices are
applied on the support only: eigenvalues at or below ``rank_tol * lambda_max``
are treated as an exact kernel and mapped to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import NonHermitian, NotPSD, SingularInput

RANK_TOL = 1e-10
TOL_HERM = 1e-9
TOL_PSD = 1e-9


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def _scale(A: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0


def hermiticity_defect(A: np.ndarray) -> float:
    """Largest entry of ``|A - A^dagger|``."""
    A = np.asarray(A)
    return float(np.max(np.abs(A - dagger(A)))) if A.size else 0.0


def check_hermitian(A, tol_herm: float = TOL_HERM) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonHermitian(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonHermitian("matrix has non-finite entries")
    defect = hermiticity_defect(A)
    if defect > tol_herm * _scale(A):
        raise NonHermitian(f"max |A - A^dagger| = {defect:.3e} exceeds {tol_herm:.1e}")
    return 0.5 * (A + dagger(A))


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ dagger(U)


def _fix_phases(U: np.ndarray) -> np.ndarray:
    # make the first non-negligible component of every column real positive
    U = U.copy()
    for k in range(U.shape[1]):
        col = U[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-8))
        a = col[idx]
        if a != 0:
            U[:, k] = col * (abs(a) / a)
    return U


def eigh(H, tol_herm: float = TOL_HERM) -> SpectralDecomposition:
    """Eigendecomposition with ascending eigenvalues and fixed eigenvector phases.

    Raises :class:`NonHermitian` when ``max|H - H^dagger|`` exceeds
    ``tol_herm`` (relative to the largest entry when that exceeds one).
    """
    H = check_hermitian(H, tol_herm)
    w, U = np.linalg.eigh(H)
    return SpectralDecomposition(w, _fix_phases(U))


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar function lifted to matrices through the spectrum.

    ``name`` is one of ``log``, ``sqrt``, ``exp``, ``power`` or ``ipower``;
    the last two carry an exponent ``t`` (``ipower`` means ``x**(1j*t)``).
    """

    name: str
    t: float = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.name == "log":
            return np.log(x)
        if self.name == "sqrt":
            return np.sqrt(x)
        if self.name == "exp":
            return np.exp(x)
        if self.name == "power":
            return np.power(x, self.t)
        if self.name == "ipower":
            return np.exp(1j * self.t * np.log(x))
        raise ValueError(f"unknown scalar function {self.name!r}")


LOG = ScalarFunction("log")
SQRT = ScalarFunction("sqrt")
EXP = ScalarFunction("exp")


def power(t: float) -> ScalarFunction:
    return ScalarFunction("power", float(t))


def ipower(t: float) -> ScalarFunction:
    return ScalarFunction("ipower", float(t))


def _as_function(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, str):
        return ScalarFunction(f)
    return f


def psd_eigh(A, tol_psd: float = TOL_PSD) -> SpectralDecomposition:
    dec = eigh(A)
    lo = dec.eigenvalues[0] if dec.eigenvalues.size else 0.0
    if lo < -tol_psd * _scale(np.asarray(A)):
        raise NotPSD(f"minimum eigenvalue {lo:.3e} is negative")
    return dec


def support_mask(eigenvalues: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    if eigenvalues.size == 0:
        return np.zeros(0, dtype=bool)
    top = float(np.max(eigenvalues))
    if top <= 0.0:
        return np.zeros(eigenvalues.shape, dtype=bool)
    return eigenvalues > rank_tol * top


def fn_on_support(A, f, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Apply ``f`` to the eigenvalues of PSD ``A`` on its support, zero on the kernel."""
    f = _as_function(f)
    dec = psd_eigh(A)
    mask = support_mask(dec.eigenvalues, rank_tol)
    vals = np.zeros(dec.eigenvalues.shape, dtype=complex)
    vals[mask] = f(dec.eigenvalues[mask])
    U = dec.eigenvectors
    return (U * vals) @ dagger(U)


def matrix_function(H, f) -> np.ndarray:
    """Apply ``f`` to every eigenvalue of a Hermitian matrix (no support convention)."""
    f = _as_function(f)
    dec = eigh(H)
    U = dec.eigenvectors
    return (U * f(dec.eigenvalues)) @ dagger(U)


def support_projector(A, rank_tol: float = RANK_TOL) -> np.ndarray:
    dec = psd_eigh(A)
    U = dec.eigenvectors[:, support_mask(dec.eigenvalues, rank_tol)]
    return U @ dagger(U)


def rank(A, rank_tol: float = RANK_TOL) -> int:
    return int(np.count_nonzero(support_mask(psd_eigh(A).eigenvalues, rank_tol)))


# --- Frechet derivatives (Daleckii-Krein) -----------------------------------

def _divided_log(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (log a - log b) / (a - b), stable for a ~ b
    x = (a - b) / b
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0 - x / 2.0 + x * x / 3.0, np.log1p(safe) / safe)
    return ratio / b


def _divided_exp(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (exp a - exp b) / (a - b) = exp(b) * expm1(a - b) / (a - b)
    x = a - b
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0 + x / 2.0 + x * x / 6.0, np.expm1(safe) / safe)
    return np.exp(b) * ratio


def _divided_sqrt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 1.0 / (np.sqrt(a) + np.sqrt(b))


def _frechet(dec: SpectralDecomposition, V: np.ndarray, kernel) -> np.ndarray:
    lam = dec.eigenvalues
    U = dec.eigenvectors
    gamma = kernel(lam[:, None], lam[None, :])
    return U @ (gamma * (dagger(U) @ V @ U)) @ dagger(U)


def _pd_eigh(A, rank_tol: float) -> SpectralDecomposition:
    dec = eigh(A)
    lam = dec.eigenvalues
    if lam.size and (lam[-1] <= 0 or lam[0] <= rank_tol * lam[-1]):
        raise SingularInput("matrix is not strictly positive definite")
    return dec


def frechet_log(A, V, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Directional derivative of the matrix logarithm at PD ``A`` along Hermitian ``V``.

    In the eigenbasis of ``A`` the derivative multiplies ``V`` entrywise by the
    first divided differences of ``log`` across eigenvalue pairs.
    """
    dec = _pd_eigh(A, rank_tol)
    V = check_hermitian(V)
    return _frechet(dec, V, _divided_log)


def frechet_sqrt(A, V, rank_tol: float = RANK_TOL) -> np.ndarray:
    dec = _pd_eigh(A, rank_tol)
    return _frechet(dec, np.asarray(V, dtype=complex), _divided_sqrt)


def frechet_exp(H, V) -> np.ndarray:
    dec = eigh(H)
    return _frechet(dec, np.asarray(V, dtype=complex), _divided_exp)


# --- norms --------------------------------------------------------------------

def trace(A) -> complex:
    return complex(np.trace(np.asarray(A)))


def trace_norm(A) -> float:
    A = np.asarray(A, dtype=complex)
    if hermiticity_defect(A) <= TOL_HERM * _scale(A):
        return float(np.sum(np.abs(eigh(A).eigenvalues)))
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def hs_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A), "fro"))


def operator_norm(A) -> float:
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product ``tr(A^dagger B)``."""
    return complex(np.vdot(np.asarray(A), np.asarray(B)))


class Norms(NamedTuple):
    trace_norm: float
    hs_norm: float
    operator_norm: float
    trace: complex


def norms(A) -> Norms:
    A = np.asarray(A, dtype=complex)
    return Norms(trace_norm(A), hs_norm(A), operator_norm(A), trace(A))
