"""
Dense linear algebra used by every estimator: Gram matrices and
Cholesky-based solves for symmetric positive-definite systems.

Matrices and vectors are plain float64 numpy arrays. The helpers below
validate shape and finiteness and hand back read-only arrays so values can
be shared between workers without copying.
"""
import numpy as np
from scipy import linalg as sla

from utils.errors import DimensionMismatch, DomainError, NotPositiveDefinite

# Cholesky pivots at or below this fraction of the largest diagonal entry
# are treated as singular.
PIVOT_RTOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate a 2-D finite array and return a read-only float64 copy."""
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    arr.flags.writeable = False
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate a 1-D finite array and return a read-only float64 copy."""
    arr = np.array(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    arr.flags.writeable = False
    return arr


def gram(X: np.ndarray) -> np.ndarray:
    """
    Return X'X (unscaled). Only the upper triangle is computed; the lower
    triangle is mirrored from it so the result is exactly symmetric.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < p:
        raise DimensionMismatch(f"gram needs rows >= cols, got {n}x{p}")
    G = X.T @ X
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def cholesky(A: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises NotPositiveDefinite when the factorization fails or any pivot
    (squared diagonal of the factor) is <= PIVOT_RTOL * max diagonal of A.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    try:
        L = sla.cholesky(A, lower=True, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from exc
    pivots = np.diag(L) ** 2
    cutoff = PIVOT_RTOL * float(np.max(np.diag(A)))
    if cutoff <= 0.0 or np.any(pivots <= cutoff):
        raise NotPositiveDefinite(
            f"smallest pivot {pivots.min():.3e} is below {cutoff:.3e}"
        )
    return L


def spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != np.shape(A)[0]:
        raise DimensionMismatch(
            f"right-hand side has {b.shape[0]} rows, matrix has {np.shape(A)[0]}"
        )
    L = cholesky(A)
    return sla.cho_solve((L, True), b, check_finite=False)


def spd_inverse(A: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix, symmetrized."""
    L = cholesky(A)
    inv = sla.cho_solve((L, True), np.eye(L.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T)


def trace_inverse(A: np.ndarray) -> float:
    """tr(A^-1) for symmetric positive-definite A."""
    L = cholesky(A)
    # tr(A^-1) = ||L^-1||_F^2
    L_inv = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True, check_finite=False)
    return float(np.sum(L_inv * L_inv))
