"""Dense symmetric solves with a single jitter retry.

All regularized Gram systems in this package are symmetric positive definite
up to roundoff, so Cholesky is the default path. When a factorization fails,
the diagonal receives one jitter bump of JITTER_SCALE * trace(A)/n and the
factorization is retried once; a second failure raises NumericError.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericError

JITTER_SCALE = 1e-10


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix contains non-finite entries")
    return a


def spd_factor(a) -> tuple[np.ndarray, bool]:
    """Cholesky-factor a symmetric positive definite matrix.

    Returns the (c, lower) pair from scipy's cho_factor, applying the jitter
    retry on the first failure. Raises NumericError if the retry also fails.
    """
    a = _as_matrix(a)
    try:
        return scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        pass
    n = a.shape[0]
    jitter = JITTER_SCALE * np.trace(a) / n
    bumped = a + jitter * np.eye(n)
    try:
        return scipy.linalg.cho_factor(bumped, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NumericError(
            f"Cholesky failed even after jitter {jitter:.3e} on a {n}x{n} system"
        ) from err


def spd_solve_factored(factor, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise NumericError("right-hand side contains non-finite entries")
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise NumericError("solve produced non-finite values")
    return x


RESIDUAL_RTOL = 1e-8


def solve_spd(a, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A with the jitter retry.

    Enforces a relative residual ||Ax - b|| <= 1e-8 ||b||, applying one step
    of iterative refinement before giving up.
    """
    a = _as_matrix(a)
    factor = spd_factor(a)
    x = spd_solve_factored(factor, b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(x)
    resid = np.linalg.norm(a @ x - np.asarray(b, dtype=float))
    if resid <= RESIDUAL_RTOL * bnorm:
        return x
    x = x + spd_solve_factored(factor, np.asarray(b, dtype=float) - a @ x)
    resid = np.linalg.norm(a @ x - np.asarray(b, dtype=float))
    if resid > RESIDUAL_RTOL * bnorm:
        raise NumericError(
            f"solve residual {resid:.3e} exceeds {RESIDUAL_RTOL:.0e} * ||b||"
        )
    return x


def solve_square(a, b) -> np.ndarray:
    """Solve a general (possibly nonsymmetric) square system via LU."""
    a = _as_matrix(a)
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise NumericError("right-hand side contains non-finite entries")
    try:
        # scipy's structure-detection paths can emit divide warnings on
        # singular input instead of raising; the finite check below catches it
        with np.errstate(divide="ignore", invalid="ignore"):
            x = scipy.linalg.solve(a, b, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NumericError("LU solve failed: singular system") from err
    if not np.all(np.isfinite(x)):
        raise NumericError("solve produced non-finite values")
    return x


def condition_estimate(a, factor=None) -> float:
    """Cheap 1-norm condition estimate of an SPD matrix via LAPACK pocon.

    O(n^2) given a Cholesky factor; used for solver diagnostics only.
    """
    a = _as_matrix(a)
    if factor is None:
        factor = spd_factor(a)
    anorm = np.linalg.norm(a, 1)
    c, _ = factor
    rcond, info = scipy.linalg.lapack.dpocon(c, anorm, uplo="L")
    if info != 0 or not np.isfinite(rcond) or rcond <= 0:
        return float("inf")
    return float(1.0 / rcond)
