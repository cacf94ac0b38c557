"""Small dense linear algebra: symmetric eigenvalues, norms, Hurwitz test, Lyapunov solve.

Everything here is sized for the state dimensions that show up in the
bilinear examples (n <= ~10), so clarity wins over asymptotic cost.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError, InputError, NumericalError, PreconditionError

SYMMETRY_TOL = 1e-10
HURWITZ_TOL = 1e-9


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array, raising on bad input."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def _square(M, name: str) -> np.ndarray:
    arr = as_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def jacobi_eigenvalues(S: np.ndarray, tol: float = 1e-15, max_sweeps: int = 64) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(S, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
    else:
        raise NumericalError("Jacobi sweeps did not converge")
    return np.sort(a.diagonal())


def eig_sym(M) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    The input is symmetrized by averaging with its transpose before the
    decomposition, so asymmetry at rounding level is harmless.
    """
    arr = _square(M, "symmetric matrix")
    asym = np.max(np.abs(arr - arr.T))
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(arr))):
        raise InputError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    eigs = jacobi_eigenvalues(0.5 * (arr + arr.T))
    return float(eigs[0]), float(eigs[-1])


def spectral_norm(M) -> float:
    """Largest singular value, computed as sqrt(lambda_max(M^T M))."""
    arr = as_matrix(M)
    if not np.any(arr):
        return 0.0
    gram = arr.T @ arr if arr.shape[0] >= arr.shape[1] else arr @ arr.T
    _, lmax = eig_sym(gram)
    return float(np.sqrt(max(lmax, 0.0)))


def eigenvalues(A) -> np.ndarray:
    """All (complex) eigenvalues of a square matrix."""
    arr = _square(A, "A")
    # LAPACK geev: Hessenberg reduction followed by shifted QR.
    return np.linalg.eigvals(arr)


def is_hurwitz(A, tol: float = HURWITZ_TOL) -> bool:
    """True iff every eigenvalue of ``A`` has real part below ``-tol``."""
    if tol <= 0:
        raise InputError("tol must be positive")
    return bool(np.all(eigenvalues(A).real < -tol))


def solve_lyapunov(A) -> np.ndarray:
    """Solve ``A^T P + P A = -I`` for symmetric positive definite ``P``.

    The equation is vectorized into an ``n^2 x n^2`` dense linear system,
    which is cheap at the sizes this package targets.
    """
    arr = _square(A, "A")
    if not is_hurwitz(arr):
        raise PreconditionError("A is not Hurwitz; A^T P + P A = -I has no positive definite solution")
    n = arr.shape[0]
    eye = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    K = np.kron(eye, arr.T) + np.kron(arr.T, eye)
    try:
        vec_p = np.linalg.solve(K, -eye.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Lyapunov system is singular: {exc}") from exc
    P = vec_p.reshape(n, n, order="F")
    P = 0.5 * (P + P.T)
    if not np.all(np.isfinite(P)):
        raise NumericalError("Lyapunov solve produced non-finite entries")
    return P


def lyapunov_residual(A, P) -> float:
    """Spectral norm of ``A^T P + P A + I``."""
    A = as_matrix(A)
    P = as_matrix(P)
    return spectral_norm(A.T @ P + P @ A + np.eye(A.shape[0]))
