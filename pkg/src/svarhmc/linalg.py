"""Dense linear-algebra kernel: Cholesky, triangular solves, LQ, log-dets.

Thin wrappers around LAPACK (via numpy/scipy) that pin down the conventions
the rest of the engine relies on: lower factors with strictly positive
diagonals, typed errors instead of silent regularization, and an LQ
decomposition built from QR of the transpose with column sign-fixing.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_triangular

from .errors import NotPositiveDefinite, NumericallySingular, SingularTriangular

SYMMETRY_TOL = 1e-12


def cholesky(a: NDArray) -> NDArray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises NotPositiveDefinite when a pivot fails; a failed factorization
    inside the sampler means a degenerate covariance draw and must become a
    rejection, never a fudged factor.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric within tolerance")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def solve_lower(l_mat: NDArray, b: NDArray) -> NDArray:
    """Solve L X = B by forward substitution for lower-triangular L."""
    l_mat = np.asarray(l_mat, dtype=float)
    if np.any(np.diag(l_mat) == 0.0):
        raise SingularTriangular("zero diagonal entry in triangular solve")
    return solve_triangular(l_mat, b, lower=True)


def solve_upper(u_mat: NDArray, b: NDArray) -> NDArray:
    """Solve U X = B by back substitution for upper-triangular U."""
    u_mat = np.asarray(u_mat, dtype=float)
    if np.any(np.diag(u_mat) == 0.0):
        raise SingularTriangular("zero diagonal entry in triangular solve")
    return solve_triangular(u_mat, b, lower=False)


def solve_right_upper(c: NDArray, l_mat: NDArray) -> NDArray:
    """Solve X Lᵀ = C for X, with L lower triangular.

    This is the first half of the two-step quadratic-form evaluation: the
    system transposes to L Xᵀ = Cᵀ, a plain forward substitution.
    """
    c = np.asarray(c, dtype=float)
    return solve_lower(l_mat, c.T).T


def lq_decompose(b: NDArray) -> tuple[NDArray, NDArray]:
    """LQ decomposition B = L Q with diag(L) > 0 and Q orthogonal.

    Computed as QR of Bᵀ followed by transposition; the sign of each row of
    Q (column of R) is flipped so the diagonal of L comes out positive,
    which makes the decomposition unique.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if b.shape != (n, n):
        raise ValueError(f"expected square matrix, got shape {b.shape}")
    q_t, r = np.linalg.qr(b.T)
    diag = np.diag(r).copy()
    scale = max(np.max(np.abs(b)), 1.0)
    if np.any(np.abs(diag) <= 1e-12 * scale):
        raise NumericallySingular("matrix is singular within guard")
    signs = np.where(diag > 0.0, 1.0, -1.0)
    l_mat = (r * signs[:, None]).T
    q = q_t.T * signs[:, None]
    return l_mat, q


def log_det_from_cholesky(l_mat: NDArray) -> float:
    """Log-determinant of A given its Cholesky factor: 2·Σ log Lᵢᵢ."""
    return 2.0 * float(np.sum(np.log(np.diag(l_mat))))


def is_orthogonal(q: NDArray, tol: float = 1e-10) -> bool:
    """Check Q Qᵀ = I elementwise within tol."""
    q = np.asarray(q, dtype=float)
    return bool(np.max(np.abs(q @ q.T - np.eye(q.shape[0]))) <= tol)
