"""Dense linear-algebra kernels for assembly and spectral analysis.

Thin wrappers over LAPACK (numpy/scipy).  The test suite pins these against
independent oracles: exact rational elimination for solves and closed-form
circulant spectra for the eigenvalue routes.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

PIVOT_FLOOR = 1e-30


class SingularMatrixError(ValueError):
    """Matrix is singular to working precision."""


class NotSymmetricPositiveDefiniteError(ValueError):
    """Matrix failed an SPD check."""


def lu_factor(a: np.ndarray):
    """LU factorization with partial pivoting; rejects pivots below 1e-30."""
    a = np.asarray(a, dtype=float)
    factor = scipy.linalg.lu_factor(a)
    pivots = np.abs(np.diag(factor[0]))
    if pivots.size and pivots.min() < PIVOT_FLOOR:
        raise SingularMatrixError(
            f"pivot {pivots.min():.3e} below {PIVOT_FLOOR:.0e}"
        )
    return factor


def lu_solve_factored(factor, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.lu_solve(factor, np.asarray(b, dtype=float))


def lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b by LU with partial pivoting."""
    return lu_solve_factored(lu_factor(a), b)


def spd_condition_number(a: np.ndarray) -> float:
    """lambda_max / lambda_min of a symmetric positive definite matrix."""
    a = np.asarray(a, dtype=float)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise NotSymmetricPositiveDefiniteError("matrix is not symmetric")
    eig = np.linalg.eigvalsh(a)
    if eig[0] <= 0.0:
        raise NotSymmetricPositiveDefiniteError(
            f"smallest eigenvalue {eig[0]:.3e} is not positive"
        )
    return float(eig[-1] / eig[0])


def eigenvalues(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real square matrix (Hessenberg + shifted QR via LAPACK)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if n > 2000:
        raise ValueError(f"dense eigensolver limited to n <= 2000, got {n}")
    return np.linalg.eigvals(a)


def generalized_eigenvalues(
    s: np.ndarray, m: np.ndarray, drop_infinite: bool = False
) -> np.ndarray:
    """Eigenvalues of the pencil (S, M), i.e. of M^-1 S, via the QZ algorithm.

    Avoids forming M^-1 explicitly, which matters when M is badly
    conditioned (tiny cut cells without stabilization).  With
    drop_infinite, eigenvalues whose pencil denominator vanishes (M
    numerically singular along that direction) are removed.
    """
    num, den = scipy.linalg.eig(
        np.asarray(s, dtype=float),
        np.asarray(m, dtype=float),
        right=False,
        homogeneous_eigvals=True,
    )
    if drop_infinite:
        finite = np.abs(den) > 0
        num, den = num[finite], den[finite]
    return np.asarray(num / den)
