"""Predicates and helpers for complex Hermitian matrices.

Covariances are carried around as plain ``numpy`` arrays; the functions here
check or enforce the structure the rest of the package relies on.
"""
import numpy as np

from .errors import NumericError

HERMITIAN_RTOL = 1e-12


def hermitian_part(M):
    """Return ``(M + M^H) / 2``."""
    M = np.asarray(M)
    return 0.5 * (M + M.conj().T)


def is_hermitian(M, rtol=HERMITIAN_RTOL):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    return np.linalg.norm(M - M.conj().T) <= rtol * scale


def as_hermitian(M, rtol=HERMITIAN_RTOL):
    """Validate that ``M`` is Hermitian and return its exact Hermitian part.

    Raises
    ------
    ValueError
        If ``M`` is not square or deviates from conjugate symmetry by more
        than ``rtol`` in relative Frobenius norm.
    """
    M = np.asarray(M, dtype=complex)
    if not is_hermitian(M, rtol):
        raise ValueError("matrix is not Hermitian")
    return hermitian_part(M)


def min_eigenvalue(M):
    try:
        return float(np.linalg.eigvalsh(hermitian_part(M))[0])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc


def is_psd(M, rtol=1e-10):
    """PSD test relative to the trace: ``lambda_min >= -rtol * |trace|``."""
    M = np.asarray(M)
    return min_eigenvalue(M) >= -rtol * abs(np.trace(M).real)


def is_toeplitz(M, atol=1e-12):
    """True when every diagonal of ``M`` is constant to within ``atol``."""
    M = np.asarray(M)
    n = M.shape[0]
    for k in range(-n + 1, n):
        d = np.diagonal(M, k)
        if d.size and np.max(np.abs(d - d[0])) > atol:
            return False
    return True


def check_finite(M, what="matrix"):
    if not np.all(np.isfinite(M)):
        raise NumericError(f"{what} contains NaN or Inf")
    return M
