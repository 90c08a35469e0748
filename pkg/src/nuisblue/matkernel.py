"""Dense matrix primitives with explicit numerical contracts.

Everything downstream (projectors, differencing operators, whiteners) is
expressed through the handful of functions here so that tolerances live in
one place.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DegenerateShape, NotSPD, RankDeficient

DEFAULT_RANK_TOL = 1e-10
EIG_FLOOR = 1e-12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class RankReport:
    rank: int
    tolerance_used: float


def as_matrix(A, name="A"):
    """Return ``A`` as a finite 2-D float array (vectors become columns)."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def rank_of(A, tol=DEFAULT_RANK_TOL):
    """Numerical rank: singular values above ``tol * max(shape) * s_max``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.size == 0:
        return RankReport(0, 0.0)
    s = np.linalg.svd(A, compute_uv=False)
    threshold = tol * max(A.shape) * (s[0] if s.size else 0.0)
    if s[0] == 0.0:
        return RankReport(0, threshold)
    return RankReport(int(np.sum(s > threshold)), float(threshold))


def _check_full_column_rank(A, tol):
    report = rank_of(A, tol)
    if report.rank < A.shape[1]:
        raise RankDeficient(
            f"matrix of shape {A.shape} has numerical rank {report.rank} < {A.shape[1]}"
        )


def pinv(A, tol=DEFAULT_RANK_TOL):
    """Left pseudo-inverse of a full-column-rank matrix, computed from a thin QR.

    For ``A = QR`` the pseudo-inverse ``(A^T A)^{-1} A^T`` equals ``R^{-1} Q^T``.
    """
    A = as_matrix(A)
    _check_full_column_rank(A, tol)
    Q, R = np.linalg.qr(A, mode="reduced")
    return solve_triangular(R, Q.T, lower=False)


def null_space_basis(G, tol=DEFAULT_RANK_TOL):
    """Orthonormal basis ``U_n`` (N x (N-M)) of the left null space of ``G``.

    The basis is only unique up to an orthogonal rotation; compare
    ``U_n @ U_n.T`` rather than ``U_n`` itself.
    """
    G = as_matrix(G, "G")
    N, M = G.shape
    if M == 0:
        return np.eye(N)
    if N <= M:
        raise DegenerateShape(f"need N > M for a non-trivial null space, got {G.shape}")
    _check_full_column_rank(G, tol)
    Q, _ = np.linalg.qr(G, mode="complete")
    return Q[:, M:]


def inv_sqrt_sym(S, floor=EIG_FLOOR):
    """Symmetric inverse square root of a symmetric positive definite matrix."""
    S = as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise NotSPD(f"matrix must be square, got {S.shape}")
    scale = max(np.max(np.abs(S)), 1.0)
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise NotSPD("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    if w[-1] <= 0 or w[0] <= floor * w[-1]:
        raise NotSPD(f"eigenvalue {w[0]:.3e} below floor (largest {w[-1]:.3e})")
    return (V / np.sqrt(w)) @ V.T


def lstsq_qr(A, b):
    """Least-squares solution of ``A x ~ b`` via thin QR; raises on rank loss."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=float)
    Q, R = np.linalg.qr(A, mode="reduced")
    # |R_ii| screens rank without a second factorization
    diag = np.abs(np.diag(R))
    if diag.size < A.shape[1] or diag.min() <= DEFAULT_RANK_TOL * max(A.shape) * diag.max():
        raise RankDeficient(f"matrix of shape {A.shape} is numerically rank deficient")
    return solve_triangular(R, Q.T @ b, lower=False)


def polar_rows(A, tol=EIG_FLOOR):
    """``(A A^T)^{-1/2} A`` for a full-row-rank ``A``.

    Evaluated as ``U V^T`` from the thin SVD ``A = U S V^T``, which avoids
    squaring the condition number the way forming ``A A^T`` does.
    """
    A = as_matrix(A)
    if A.shape[0] > A.shape[1]:
        raise RankDeficient(f"{A.shape} cannot have full row rank")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[-1] <= tol * s[0]:
        raise RankDeficient(
            f"singular value {s[-1]:.3e} below {tol:.0e} x largest ({s[0]:.3e})"
        )
    return U @ Vt
