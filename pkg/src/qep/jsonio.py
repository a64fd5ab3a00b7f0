"""JSON encodings for matrices, states, resolutions and extended reals.

Matrices are ``{"dim": d, "re": [[...]], "im": [[...]]}``. Resolutions are
either ``{"projectors": [<matrix>, ...]}`` or ``{"basis": <matrix>,
"groups": [[1], [2, 3]]}`` with one-based indices. ``+inf`` travels as the
string ``"inf"``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import QEPError
from .states import (
    CommutantQL,
    DensityOperator,
    FaceQsL,
    OrthogonalResolution,
    Projector,
    SupportBlock,
    TracePinnedQqJ,
    resolution_from_groups,
    validate_state,
)


class SchemaError(QEPError):
    pass


def encode_real(x: float):
    x = float(x)
    if math.isinf(x) and x > 0:
        return "inf"
    if math.isinf(x):
        return "-inf"
    if math.isnan(x):
        return "nan"
    return x


def decode_real(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf"):
            return math.inf
        if v.strip().lower() == "-inf":
            return -math.inf
        raise SchemaError(f"unexpected numeric token {v!r}")
    return float(v)


def encode_matrix(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {
        "dim": int(A.shape[0]),
        "re": [[float(x) for x in row] for row in A.real],
        "im": [[float(x) for x in row] for row in A.imag],
    }


def decode_matrix(doc) -> np.ndarray:
    if not isinstance(doc, dict) or "re" not in doc:
        raise SchemaError("matrix must be an object with 're' (and optional 'im')")
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.ndim != 2 or re.shape[0] != re.shape[1] or im.shape != re.shape:
        raise SchemaError(f"matrix parts must be square and equal-shaped, got {re.shape}/{im.shape}")
    if "dim" in doc and int(doc["dim"]) != re.shape[0]:
        raise SchemaError(f"dim {doc['dim']} disagrees with {re.shape[0]} rows")
    return re + 1j * im


def encode_vector(v) -> dict:
    v = np.asarray(v, dtype=complex).ravel()
    return {"re": [float(x) for x in v.real], "im": [float(x) for x in v.imag]}


def decode_vector(doc) -> np.ndarray:
    if isinstance(doc, list):
        return np.asarray(doc, dtype=complex)
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.ndim != 1 or im.shape != re.shape:
        raise SchemaError("vector parts must be 1-d and equal-length")
    return re + 1j * im


def encode_state(rho: DensityOperator, normalized: bool | None = None) -> dict:
    if normalized is None:
        normalized = abs(rho.trace - 1.0) <= 1e-9
    return {"matrix": encode_matrix(rho.matrix), "normalized": bool(normalized)}


def decode_state(doc) -> DensityOperator:
    if isinstance(doc, dict) and "matrix" in doc:
        return validate_state(decode_matrix(doc["matrix"]), bool(doc.get("normalized", True)))
    return validate_state(decode_matrix(doc), True)


def decode_resolution(doc) -> OrthogonalResolution:
    if not isinstance(doc, dict):
        raise SchemaError("resolution must be an object")
    if "projectors" in doc:
        return OrthogonalResolution(tuple(Projector(decode_matrix(m)) for m in doc["projectors"]))
    if "basis" in doc and "groups" in doc:
        groups = [[int(k) - 1 for k in g] for g in doc["groups"]]
        return resolution_from_groups(decode_matrix(doc["basis"]), groups)
    raise SchemaError("resolution needs 'projectors' or 'basis' + 'groups'")


def encode_resolution(R: OrthogonalResolution) -> dict:
    return {"projectors": [encode_matrix(P.matrix) for P in R]}


CONSTRAINT_TYPES = ("ql", "qqj", "qsl", "support")


def decode_constraint(doc, kind: str | None = None, weights=None):
    """Constraint set from ``{"type": ..., "resolution" | "projector": ..., "weights": [...]}``.

    ``kind`` and ``weights`` override the corresponding fields of ``doc``.
    """
    if not isinstance(doc, dict):
        raise SchemaError("constraint must be an object")
    kind = (kind or doc.get("type") or "").lower()
    if kind not in CONSTRAINT_TYPES:
        raise SchemaError(f"constraint type must be one of {CONSTRAINT_TYPES}, got {kind!r}")
    if kind in ("qsl", "support"):
        if "projector" not in doc:
            raise SchemaError(f"constraint '{kind}' needs a 'projector'")
        P = Projector(decode_matrix(doc["projector"]))
        return FaceQsL(P) if kind == "qsl" else SupportBlock(P)
    if "resolution" not in doc:
        raise SchemaError(f"constraint '{kind}' needs a 'resolution'")
    R = decode_resolution(doc["resolution"])
    if kind == "ql":
        return CommutantQL(R)
    w = weights if weights is not None else doc.get("weights")
    if w is None:
        raise SchemaError("constraint 'qqj' needs 'weights'")
    return TracePinnedQqJ(R, tuple(float(x) for x in w))
