"""Spectral matrix functions for symmetric matrices.

Everything routes through one full symmetric eigendecomposition; the
positive/negative parts, absolute value, and square root are assembled from
the eigenpairs.  Inputs are validated for symmetry, outputs are explicitly
symmetrized so that downstream factorizations never see stray asymmetry.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ConfigError, NumericalError

SYMMETRY_RTOL = 1e-12


def _check_symmetric(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {M.shape}")
    scale = np.linalg.norm(M, "fro")
    skew = np.linalg.norm(M - M.T, "fro")
    if skew > SYMMETRY_RTOL * max(scale, 1e-300):
        raise ConfigError(f"matrix is not symmetric: |M - M^T| = {skew:.3e}")
    return 0.5 * (M + M.T)


def sym_eig(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix."""
    M = _check_symmetric(M)
    w, Q = np.linalg.eigh(M)
    return w[::-1].copy(), Q[:, ::-1].copy()


def _reassemble(Q: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = (Q * w) @ Q.T
    return 0.5 * (out + out.T)


def matrix_abs(M) -> np.ndarray:
    """Spectral absolute value |M| = Q |Lambda| Q^T."""
    w, Q = sym_eig(M)
    return _reassemble(Q, np.abs(w))


def positive_decomposition(M) -> tuple[np.ndarray, np.ndarray]:
    """Split M into its positive and negative parts.

    Returns (M_plus, M_minus), both positive semidefinite, with
    M_plus - M_minus = M, M_plus + M_minus = |M| and M_plus M_minus = 0.
    """
    w, Q = sym_eig(M)
    plus = _reassemble(Q, np.maximum(w, 0.0))
    minus = _reassemble(Q, np.maximum(-w, 0.0))
    return plus, minus


def matrix_sqrt(M) -> np.ndarray:
    """Square root of a positive semidefinite matrix.

    Eigenvalues in [-1e-12 * ||M||, 0) are clamped to zero; anything more
    negative is rejected.
    """
    w, Q = sym_eig(M)
    scale = max(np.abs(w).max(initial=0.0), 0.0)
    floor = -1e-12 * scale
    if w.min(initial=0.0) < floor:
        raise NumericalError(
            f"matrix is not positive semidefinite: min eigenvalue {w.min():.3e}")
    return _reassemble(Q, np.sqrt(np.maximum(w, 0.0)))


def cholesky(M) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix."""
    M = _check_symmetric(M)
    try:
        return scipy.linalg.cholesky(M, lower=True)
    except scipy.linalg.LinAlgError as exc:
        # scipy reports the failing leading minor; surface it as a pivot index.
        pivot = "".join(ch for ch in str(exc).split("-th")[0] if ch.isdigit())
        raise NumericalError(
            f"Cholesky failed at pivot {pivot or '?'}: matrix is not positive definite"
        ) from exc
