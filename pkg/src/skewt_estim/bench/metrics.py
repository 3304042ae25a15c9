"""Position accuracy and consistency metrics."""

import numpy as np

__all__ = ["rmse", "nees"]


def rmse(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Root-mean-square position error over a trajectory.

    Both arguments are (K, 3) position arrays (extra columns are ignored);
    the RMSE is the root of the mean squared error norm over time.
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))[:, :3]
    tru = np.atleast_2d(np.asarray(truth, dtype=float))[:, :3]
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {tru.shape}")
    return float(np.sqrt(np.mean(np.sum((est - tru) ** 2, axis=1))))


def nees(estimates: np.ndarray, covs: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-step normalized estimation error squared of the position block.

    e_k^T P_k^{-1} e_k with e_k the position error and P_k the 3x3
    position covariance; a consistent estimator averages 3.
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))[:, :3]
    tru = np.atleast_2d(np.asarray(truth, dtype=float))[:, :3]
    covs = np.asarray(covs, dtype=float)
    if covs.ndim != 3 or covs.shape[0] != est.shape[0]:
        raise ValueError("covs must be (K, n, n) aligned with estimates")
    out = np.empty(est.shape[0])
    for k in range(est.shape[0]):
        e = est[k] - tru[k]
        out[k] = float(e @ np.linalg.solve(covs[k, :3, :3], e))
    return out
