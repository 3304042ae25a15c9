"""Comparison estimators: gated Kalman filter/smoother and a bootstrap PF.

The Kalman baselines run against moment-matched normal noise (see
skewt.moment_match) with per-component validation gating: a measurement
component whose normalized innovation squared exceeds a chi-square(1)
quantile is discarded.  The bootstrap particle filter weights particles
with the exact skew-t component densities and serves as the reference
posterior in the benchmark experiments.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import chi2

from ._linalg import psd_sqrt, symmetrize
from .exceptions import DegeneracyError
from .filtering import GaussianBelief, StateSpaceModel
from .skewt import SkewTComponent, log_pdf, moments

__all__ = [
    "GatingConfig",
    "ParticleCloud",
    "kf_gated_update",
    "kf_gated_run",
    "rtss_gated_run",
    "pf_run",
]


@dataclass(frozen=True)
class GatingConfig:
    """Validation gate on the per-component normalized innovation squared."""

    gate_probability: float = 0.99
    threshold: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.gate_probability < 1.0:
            raise ValueError("gate_probability must lie in (0, 1)")
        object.__setattr__(
            self, "threshold", float(chi2.ppf(self.gate_probability, df=1))
        )


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted particle representation of a state posterior."""

    states: np.ndarray  # (n_p, n_x)
    weights: np.ndarray  # (n_p,), nonnegative, sums to one

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if weights.shape != (states.shape[0],):
            raise ValueError("weights must have one entry per particle")
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.states

    def cov(self) -> np.ndarray:
        centered = self.states - self.mean()
        return symmetrize((self.weights[:, None] * centered).T @ centered)

    def ess(self) -> float:
        return float(1.0 / np.sum(self.weights**2))


def kf_gated_update(
    c_mat: np.ndarray,
    r_matched: np.ndarray,
    prior: GaussianBelief,
    y: np.ndarray,
    g: GatingConfig = GatingConfig(),
) -> GaussianBelief:
    """Sequential per-component Kalman update with validation gating.

    Components are processed in index order against the current belief;
    a component is discarded when its normalized innovation squared
    exceeds the gate threshold.  `r_matched` holds the matched normal
    variances (diagonal); the caller removes any noise mean offset from y
    beforehand.
    """
    c_mat = np.atleast_2d(np.asarray(c_mat, dtype=float))
    r_matched = np.atleast_1d(np.asarray(r_matched, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = prior.mean.copy()
    p = prior.cov.copy()
    for i in range(y.size):
        ci = c_mat[i]
        pc = p @ ci
        s = float(ci @ pc + r_matched[i])
        innov = float(y[i] - ci @ x)
        if innov * innov / s > g.threshold:
            continue
        gain = pc / s
        x = x + gain * innov
        p = p - s * np.outer(gain, gain)
    return GaussianBelief(x, symmetrize(p))


def kf_gated_run(
    model: StateSpaceModel,
    ys,
    g: GatingConfig = GatingConfig(),
    measurement_matrices=None,
):
    """Gated Kalman forward pass over a measurement sequence.

    The model is interpreted as Gaussian: R holds the matched normal
    variances and Delta is ignored.  Returns (filtered beliefs, predicted
    beliefs) with predicted[k] the one-step prior of step k.
    """
    ys = [np.atleast_1d(np.asarray(y, dtype=float)) for y in ys]
    if measurement_matrices is None:
        measurement_matrices = [model.C] * len(ys)
    filtered = []
    predicted = []
    belief = model.prior_belief()
    for k, y in enumerate(ys):
        predicted.append(belief)
        belief = kf_gated_update(measurement_matrices[k], model.R, belief, y, g)
        filtered.append(belief)
        mean = model.A @ belief.mean
        cov = symmetrize(model.A @ belief.cov @ model.A.T + model.Q)
        belief = GaussianBelief(mean, cov)
    return filtered, predicted


def rtss_gated_run(
    model: StateSpaceModel,
    ys,
    g: GatingConfig = GatingConfig(),
    measurement_matrices=None,
) -> list:
    """Gated Kalman forward pass plus classical fixed-interval smoothing."""
    filtered, _ = kf_gated_run(model, ys, g, measurement_matrices)
    n_steps = len(filtered)
    if n_steps == 0:
        return []
    smoothed = [None] * n_steps
    smoothed[-1] = filtered[-1]
    for k in range(n_steps - 2, -1, -1):
        m_pred = model.A @ filtered[k].mean
        p_pred = symmetrize(model.A @ filtered[k].cov @ model.A.T + model.Q)
        gain = np.linalg.solve(p_pred, model.A @ filtered[k].cov).T
        mean = filtered[k].mean + gain @ (smoothed[k + 1].mean - m_pred)
        cov = symmetrize(
            filtered[k].cov + gain @ (smoothed[k + 1].cov - p_pred) @ gain.T
        )
        smoothed[k] = GaussianBelief(mean, cov)
    return smoothed


@lru_cache(maxsize=64)
def _density_table(spread_sq, shape, dof):
    """Cached dense log-density grid of one skew-t component.

    The grid spec depends only on the component parameters (never on the
    data), so cached lookups are reproducible regardless of call history.
    """
    comp = SkewTComponent(spread_sq=spread_sq, shape=shape, dof=dof)
    if dof > 2.0:
        mean, var = moments(comp)
        half = 60.0 * np.sqrt(var)
    else:
        mean = shape
        half = 1000.0 * (abs(shape) + np.sqrt(spread_sq))
    grid = np.linspace(mean - half, mean + half, 16385)
    return grid, log_pdf(comp, grid)


def _component_log_likelihoods(model, residuals):
    """Per-component skew-t log densities of a residual matrix (n_p, n_y).

    Large particle sets interpolate a cached dense grid of the exact
    density (interpolation error far below the particle Monte Carlo
    noise); residuals outside the grid are evaluated exactly.
    """
    n_p, n_y = residuals.shape
    comps = model.noise_model().components
    out = np.zeros_like(residuals)
    for i, comp in enumerate(comps):
        r = residuals[:, i]
        if n_p <= 512:
            out[:, i] = log_pdf(comp, r)
            continue
        grid, table = _density_table(comp.spread_sq, comp.shape, comp.dof)
        vals = np.interp(r, grid, table)
        outside = (r < grid[0]) | (r > grid[-1])
        if np.any(outside):
            vals[outside] = log_pdf(comp, r[outside])
        out[:, i] = vals
    return out


def _systematic_resample(weights, rng):
    n = weights.size
    positions = (np.arange(n) + rng.random()) / n
    return np.searchsorted(np.cumsum(weights), positions)


def pf_run(
    model: StateSpaceModel,
    ys,
    n_particles: int,
    seed: int,
    measurement_fn=None,
) -> list:
    """Bootstrap particle filter with systematic resampling.

    Particles start from the model prior and propagate through the linear
    dynamics; weights accumulate the product of the skew-t component
    densities of the measurement residuals.  Resampling triggers when the
    effective sample size drops below n_particles / 2.  An optional
    `measurement_fn(states) -> (n_p, n_y)` replaces the linear map C x,
    letting the same filter run on nonlinear measurement models.
    Deterministic for a given seed; returns one GaussianBelief per step.
    """
    n_particles = int(n_particles)
    if n_particles < 100:
        raise ValueError(f"n_particles must be >= 100, got {n_particles}")
    ys = [np.atleast_1d(np.asarray(y, dtype=float)) for y in ys]
    rng = np.random.default_rng(seed)

    prior_factor = psd_sqrt(model.prior_cov)
    q_factor = psd_sqrt(model.Q)
    states = model.prior_mean + rng.standard_normal(
        (n_particles, model.n_x)
    ) @ prior_factor.T
    log_w = np.zeros(n_particles)

    out = []
    for k, y in enumerate(ys):
        if k > 0:
            states = states @ model.A.T + rng.standard_normal(
                (n_particles, model.n_x)
            ) @ q_factor.T
        predicted = (
            measurement_fn(states) if measurement_fn is not None else states @ model.C.T
        )
        log_w = log_w + _component_log_likelihoods(model, y - predicted).sum(axis=1)
        shift = log_w.max()
        if not np.isfinite(shift):
            raise DegeneracyError("all particle weights vanished", step=k)
        w = np.exp(log_w - shift)
        w_sum = w.sum()
        if w_sum <= 0.0 or not np.isfinite(w_sum):
            raise DegeneracyError("all particle weights vanished", step=k)
        w /= w_sum
        mean = w @ states
        centered = states - mean
        cov = symmetrize((w[:, None] * centered).T @ centered)
        out.append(GaussianBelief(mean, cov))
        if 1.0 / np.sum(w**2) < 0.5 * n_particles:
            idx = _systematic_resample(w, rng)
            states = states[idx]
            log_w = np.zeros(n_particles)
        else:
            log_w = np.log(w)
    return out
