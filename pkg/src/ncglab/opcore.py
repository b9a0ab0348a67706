"""Dense complex matrix calculus shared by every other module.

Operators are plain ``numpy`` arrays of dtype ``complex128``; ``as_operator``
is the single entry point that normalizes and checks shape.  Everything here
is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# singular values above this count toward the rank of a projection
PROJECTION_RANK_CUT = 0.5


@dataclass(frozen=True)
class Tolerance:
    exact_eq: float = 1e-10
    bound_slack: float = 1e-8

    def __post_init__(self):
        if not (self.exact_eq > 0 and self.bound_slack > 0):
            raise ValueError("tolerances must be strictly positive")


@dataclass(frozen=True)
class ProjectionDiagnostic:
    idempotency_defect: float
    symmetry_defect: float
    rank: int
    passed: bool


def as_operator(m) -> np.ndarray:
    """Return ``m`` as a square complex128 array (no copy if already one)."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {arr.shape}")
    return arr


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def commutator(a, b) -> np.ndarray:
    """``ab - ba``."""
    a, b = as_operator(a), as_operator(b)
    _check_same_dim(a, b)
    return a @ b - b @ a


def singular_values(m) -> np.ndarray:
    """All ``dim`` singular values, in nonincreasing order."""
    m = as_operator(m)
    return np.linalg.svd(m, compute_uv=False)


def _norm2(m: np.ndarray) -> float:
    # zero rows and columns do not change the spectral norm; dropping them
    # keeps corner blocks of banded operators cheap
    rows = np.flatnonzero(np.any(m != 0, axis=1))
    if rows.size == 0:
        return 0.0
    cols = np.flatnonzero(np.any(m != 0, axis=0))
    core = m[np.ix_(rows, cols)]
    if core.size == 1:
        return float(abs(core[0, 0]))
    return float(np.linalg.svd(core, compute_uv=False)[0])


def op_norm(m) -> float:
    """Operator (spectral) norm, the largest singular value."""
    return _norm2(as_operator(m))


def block_norm(m) -> float:
    """Spectral norm of a possibly rectangular or empty block."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return _norm2(m)


def coordinate_commutator_norm(a, rank: int) -> float:
    """``||[P, a]||`` for the coordinate projection ``P`` onto the first ``rank`` vectors.

    ``[P, a]`` has only the two off-diagonal corners ``P a (1-P)`` and
    ``-(1-P) a P``, so its norm is the larger of their norms.
    """
    a = as_operator(a)
    n = a.shape[0]
    if not 0 <= rank <= n:
        raise ValueError(f"rank {rank} outside 0..{n}")
    return max(block_norm(a[:rank, rank:]), block_norm(a[rank:, :rank]))


def coordinate_projection(rank: int, dim: int) -> np.ndarray:
    if not 0 <= rank <= dim:
        raise ValueError(f"rank {rank} outside 0..{dim}")
    p = np.zeros((dim, dim), dtype=np.complex128)
    p[np.arange(rank), np.arange(rank)] = 1.0
    return p


def is_self_adjoint(m) -> bool:
    m = as_operator(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    return float(np.max(np.abs(m - m.conj().T))) <= 1e-12 * scale


def validate_projection(p, tol: Tolerance = Tolerance()) -> ProjectionDiagnostic:
    """Check idempotency and self-adjointness of ``p`` and report its numerical rank."""
    p = as_operator(p)
    idem = float(np.max(np.abs(p @ p - p)))
    sym = float(np.max(np.abs(p - p.conj().T)))
    rank = int(np.count_nonzero(singular_values(p) > PROJECTION_RANK_CUT))
    return ProjectionDiagnostic(
        idempotency_defect=idem,
        symmetry_defect=sym,
        rank=rank,
        passed=idem <= tol.exact_eq and sym <= tol.exact_eq,
    )
