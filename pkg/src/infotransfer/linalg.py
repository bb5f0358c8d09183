"""Dense symmetric-positive-definite helpers used by the Gaussian Lautum closed form.

All routines work on plain numpy arrays. Sample covariance matrices at small
batch sizes are frequently rank-deficient, so the factorization entry points
escalate a diagonal jitter before giving up.
"""

from __future__ import annotations

import numpy as np

JITTER_START = 1e-8
JITTER_MAX = 1e-4
SYM_RTOL = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix stays non-PD after jitter escalation."""

    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


def check_symmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > SYM_RTOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def _chol_with_jitter(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor of `a + jitter*I`, escalating jitter x10 up to JITTER_MAX."""
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(a + jitter * np.eye(a.shape[0])), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX:
                raise SingularMatrixError(
                    f"matrix not positive definite up to jitter {JITTER_MAX:g}",
                    jitter=JITTER_MAX,
                ) from None


def spd_factor_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b for symmetric positive (semi-)definite `a`.

    Uses a triangular factorization; never forms an explicit inverse.
    """
    a = check_symmetric(a)
    b = np.asarray(b, dtype=float)
    chol, _ = _chol_with_jitter(a)
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, y)


def log_det_spd(a: np.ndarray) -> float:
    """log det of an SPD matrix via the Cholesky diagonal."""
    a = check_symmetric(a)
    chol, _ = _chol_with_jitter(a)
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def trace(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    return float(np.trace(a))
