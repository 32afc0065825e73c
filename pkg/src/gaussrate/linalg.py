"""Dense symmetric positive-definite kernels.

Thin wrappers around LAPACK (via scipy) with an explicit pivot threshold,
plus the normalized inverse-covariance ("partial correlation") matrix.
"""

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite


def as_symmetric(a, rtol=1e-12):
    """Return ``a`` as a float array, exactly symmetrized.

    Raises ValueError if ``a`` is not square or is asymmetric beyond ``rtol``.
    """
    a = np.array(a, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def cholesky(a):
    """Lower Cholesky factor L with L @ L.T == a.

    A pivot L[i, i]**2 at or below ``dim * eps * max|a|`` is treated as
    singular and raises NotPositiveDefinite.
    """
    a = as_symmetric(a)
    n = a.shape[0]
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        L = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    threshold = n * np.finfo(float).eps * float(np.max(np.abs(a)))
    pivots = np.diag(L) ** 2
    if not np.all(pivots > threshold):
        i = int(np.argmin(pivots))
        raise NotPositiveDefinite(f"pivot {i} = {pivots[i]:.3e} below threshold {threshold:.3e}")
    return L


def solve_spd(a, b):
    """Solve a @ x = b for symmetric positive-definite ``a``."""
    L = cholesky(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != L.shape[0]:
        raise ValueError(f"right-hand side has length {b.shape[0]}, expected {L.shape[0]}")
    return scipy.linalg.cho_solve((L, True), b, check_finite=False)


def inverse_spd(a):
    L = cholesky(a)
    inv = scipy.linalg.cho_solve((L, True), np.eye(L.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T)


def partial_corr(sigma):
    """Normalized precision matrix K = D inv(sigma) D, D = diag(inv(sigma))**-1/2.

    Off-diagonal entries are minus the partial correlations. The diagonal is
    exactly one and entries are clipped to [-1, 1] to absorb roundoff.
    """
    prec = inverse_spd(sigma)
    s = 1.0 / np.sqrt(np.diag(prec))
    k = prec * np.outer(s, s)
    k = np.clip(0.5 * (k + k.T), -1.0, 1.0)
    np.fill_diagonal(k, 1.0)
    return k
