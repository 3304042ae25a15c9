"""Small shared linear-algebra helpers."""

import numpy as np
import scipy.linalg

from .exceptions import NumericalFailureError

# Relative jitter levels tried before giving up on a positive-definite solve.
_JITTER_LEVELS = (0.0, 1e-12, 1e-9)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return the symmetric part (a + a.T) / 2."""
    return 0.5 * (a + a.T)


def solve_spd(s: np.ndarray, b: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve s @ x = b for symmetric positive-definite s.

    Escalating diagonal jitter (1e-12 then 1e-9 times trace) is added if the
    Cholesky factorization fails; after that a NumericalFailureError carrying
    the smallest eigenvalue of s is raised.
    """
    scale = float(np.trace(s)) / max(s.shape[0], 1)
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    for level in _JITTER_LEVELS:
        try:
            mat = s if level == 0.0 else s + (level * scale) * np.eye(s.shape[0])
            c, low = scipy.linalg.cho_factor(mat, check_finite=False)
            return scipy.linalg.cho_solve((c, low), b, check_finite=False)
        except scipy.linalg.LinAlgError:
            continue
    raise NumericalFailureError(
        f"{what} is not positive definite",
        smallest_eigenvalue=float(np.linalg.eigvalsh(symmetrize(s)).min()),
    )


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """A square-root factor L with L @ L.T = m for symmetric PSD m.

    Tries Cholesky first; falls back to an eigendecomposition with negative
    eigenvalues clipped to zero, so exactly singular matrices (e.g. process
    noise with frozen components) are accepted.
    """
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(symmetrize(m))
        w = np.clip(w, 0.0, None)
        return v * np.sqrt(w)
