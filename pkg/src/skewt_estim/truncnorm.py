"""Moments of multivariate normals truncated to the positive orthant.

The truncation is applied one coordinate constraint {z_k >= 0} at a time:
the once-truncated distribution has closed-form mean and covariance (a
rank-one update of the input moments), and is re-approximated by a normal
with those moments before the next constraint is applied.  The result
depends on the order in which constraints are processed; the greedy order
that removes the most probability mass at each step (equivalently, picks
the smallest standardized mean mu_i / sqrt(Sigma_ii)) is the per-step
optimum in Kullback-Leibler divergence.

A seeded sampling oracle (rejection with a Gibbs fallback) provides
independent reference moments for testing and benchmarking.
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

from ._linalg import symmetrize
from .exceptions import DegenerateDirectionError, OracleInfeasibleError

__all__ = [
    "MomentPair",
    "HazardResult",
    "TruncationOrderPolicy",
    "Optimal",
    "RandomOrder",
    "FixedOrder",
    "OPTIMAL",
    "hazard",
    "truncate_once",
    "select_next",
    "rec_trunc",
    "tmnd_oracle",
]

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

# Below this value the normal CDF is treated as underflowed and the
# asymptotic limits of the update coefficients are used instead.
UNDERFLOW_XI = -37.0


@dataclass(frozen=True)
class MomentPair:
    """Mean vector and covariance matrix of a (possibly truncated) normal."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"inconsistent shapes: mean {mean.shape}, cov {cov.shape}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class HazardResult:
    """Coefficients of a single positive-orthant truncation update.

    ``epsilon`` is phi(xi)/Phi(xi) (or its asymptotic surrogate -xi when
    Phi(xi) underflows), ``mean_coeff`` scales the mean shift along the
    truncated column and ``cov_coeff`` scales the rank-one covariance
    downdate.  ``cov_coeff`` always lies in [0, 1].
    """

    epsilon: float
    mean_coeff: float
    cov_coeff: float
    underflowed: bool


class TruncationOrderPolicy:
    """Base class for constraint-ordering policies of rec_trunc."""


@dataclass(frozen=True)
class Optimal(TruncationOrderPolicy):
    """Greedy mass-removing order: at each step truncate the coordinate
    with the smallest standardized mean."""


@dataclass(frozen=True)
class RandomOrder(TruncationOrderPolicy):
    """Deliberately non-optimal order used as a comparison baseline: at
    each step one of the remaining constraints *other than* the greedy
    choice is picked uniformly at random (the greedy one is taken only
    when it is the sole constraint left)."""

    seed: int


@dataclass(frozen=True)
class FixedOrder(TruncationOrderPolicy):
    """Apply the constraints in a caller-supplied order.

    The order must be a permutation of the truncated index set.
    """

    order: tuple

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))


OPTIMAL = Optimal()


def hazard(xi: float) -> HazardResult:
    """Truncation-update coefficients for standardized boundary distance xi.

    For representable Phi(xi) this returns epsilon = phi(xi)/Phi(xi),
    mean_coeff = epsilon and cov_coeff = xi*epsilon + epsilon**2.  For
    xi < -37 (where Phi underflows in double precision) the limits
    epsilon + xi -> 0 and xi*epsilon + epsilon**2 -> 1 are substituted.
    """
    xi = float(xi)
    if not np.isfinite(xi):
        raise ValueError(f"xi must be finite, got {xi!r}")
    if xi < UNDERFLOW_XI:
        return HazardResult(
            epsilon=-xi, mean_coeff=-xi, cov_coeff=1.0, underflowed=True
        )
    eps = float(np.exp(-0.5 * xi * xi - _LOG_SQRT_2PI - log_ndtr(xi)))
    cov_coeff = xi * eps + eps * eps
    cov_coeff = min(max(cov_coeff, 0.0), 1.0)
    return HazardResult(
        epsilon=eps, mean_coeff=eps, cov_coeff=cov_coeff, underflowed=False
    )


def truncate_once(m: MomentPair, k: int) -> MomentPair:
    """Moments of N(mean, cov) truncated by the single constraint z_k >= 0.

    The output covariance is re-symmetrized to contain floating-point
    drift.  Raises DegenerateDirectionError when cov[k, k] is not usably
    positive (<= 1e-14 * trace).
    """
    var_k = m.cov[k, k]
    tol = 1e-14 * float(np.trace(m.cov))
    if var_k <= tol:
        raise DegenerateDirectionError(
            f"direction {k} has variance {var_k:.3e} <= tolerance {tol:.3e}"
        )
    sd = np.sqrt(var_k)
    coeffs = hazard(m.mean[k] / sd)
    col = m.cov[:, k]
    mean = m.mean + (coeffs.mean_coeff / sd) * col
    cov = m.cov - (coeffs.cov_coeff / var_k) * np.outer(col, col)
    return MomentPair(mean, symmetrize(cov))


def select_next(m: MomentPair, remaining: Iterable[int]) -> int:
    """Index in `remaining` with the smallest mu_i / sqrt(Sigma_ii).

    This is the constraint that truncates the most probability mass, the
    per-step optimal choice.  Ties break to the lowest index.
    """
    idx = sorted(int(i) for i in remaining)
    if not idx:
        raise ValueError("remaining index set is empty")
    var = m.cov[idx, idx]
    if np.any(var <= 0.0):
        raise DegenerateDirectionError(
            "nonpositive variance among remaining truncation directions"
        )
    ratios = m.mean[idx] / np.sqrt(var)
    return idx[int(np.argmin(ratios))]


def rec_trunc(
    m: MomentPair,
    truncated: Iterable[int],
    policy: TruncationOrderPolicy = OPTIMAL,
) -> MomentPair:
    """Recursive truncation of N(mean, cov) to {z_i >= 0 for i in truncated}.

    Applies truncate_once for every index in `truncated`, choosing the next
    constraint according to `policy`.  With the default Optimal policy the
    computation is deterministic and bit-reproducible.
    """
    todo = sorted({int(i) for i in truncated})
    if todo and (todo[0] < 0 or todo[-1] >= m.dim):
        raise ValueError(f"truncated indices {todo} out of range for dim {m.dim}")
    if not todo:
        return m

    if isinstance(policy, FixedOrder):
        if sorted(policy.order) != todo or len(policy.order) != len(todo):
            raise ValueError(
                f"fixed order {policy.order} is not a permutation of {todo}"
            )
        out = m
        for k in policy.order:
            out = truncate_once(out, k)
        return out

    rng = None
    if isinstance(policy, RandomOrder):
        rng = np.random.default_rng(policy.seed)

    out = m
    remaining = set(todo)
    while remaining:
        best = select_next(out, remaining)
        if rng is None:
            k = best
        elif len(remaining) == 1:
            k = next(iter(remaining))
        else:
            others = sorted(remaining - {best})
            k = others[int(rng.integers(len(others)))]
        out = truncate_once(out, k)
        remaining.discard(k)
    return out


def _sample_truncnorm_positive(rng, mean, sd):
    """Vectorized draws from N(mean, sd^2) conditioned on being >= 0.

    Uses the tail-mass inverse-CDF transform, which stays accurate for
    boundaries dozens of standard deviations into the tail; a shifted
    exponential rejection step covers the regime where even the tail mass
    underflows.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    alpha = -mean / sd  # standardized lower bound
    tail = ndtr(-alpha)
    t = tail * (1.0 - rng.random(np.broadcast(mean, sd).shape))
    with np.errstate(divide="ignore"):
        z = -ndtri(t)
    bad = ~np.isfinite(z)
    if np.any(bad):
        z = np.asarray(z, dtype=float)
        a = np.broadcast_to(alpha, z.shape)[bad]
        draws = np.empty(a.shape)
        todo = np.ones(a.shape, dtype=bool)
        for _ in range(1000):
            prop = a[todo] + rng.exponential(1.0 / a[todo])
            acc = rng.random(prop.shape) <= np.exp(-0.5 * (prop - a[todo]) ** 2)
            idx = np.flatnonzero(todo)
            draws[idx[acc]] = prop[acc]
            todo[idx[acc]] = False
            if not todo.any():
                break
        else:
            raise OracleInfeasibleError("tail sampler failed to terminate")
        z[bad] = draws
    return np.maximum(mean + sd * z, 0.0)


def _gibbs_oracle(m, todo, n_samples, rng, n_chains=100, burn_in=200, thin=10):
    """Coordinate-wise Gibbs sampling of the truncated normal.

    Runs `n_chains` independent chains in parallel (vectorized across
    chains), discarding `burn_in` sweeps and keeping every `thin`-th sweep
    afterwards until n_samples draws are collected in total.
    """
    dim = m.dim
    mean = m.mean
    cov = m.cov
    truncated = np.zeros(dim, dtype=bool)
    truncated[todo] = True

    # Conditional N(z_i | z_-i) parameters from the joint covariance.
    weights = np.empty((dim, dim - 1))
    cond_sd = np.empty(dim)
    for i in range(dim):
        rest = [j for j in range(dim) if j != i]
        try:
            w = np.linalg.solve(cov[np.ix_(rest, rest)], cov[rest, i])
        except np.linalg.LinAlgError as err:
            raise OracleInfeasibleError(
                f"degenerate covariance in Gibbs conditional {i}"
            ) from err
        cond_var = cov[i, i] - float(w @ cov[rest, i])
        if not np.isfinite(cond_var) or cond_var <= 0.0:
            raise OracleInfeasibleError(
                f"nonpositive conditional variance for coordinate {i}"
            )
        weights[i] = w
        cond_sd[i] = np.sqrt(cond_var)

    z = np.tile(mean, (n_chains, 1))
    z[:, truncated] = np.abs(z[:, truncated]) + 0.1 * np.sqrt(
        np.diag(cov)[truncated]
    )

    per_chain = -(-n_samples // n_chains)  # ceil
    kept = np.empty((per_chain * n_chains, dim))
    n_kept = 0
    sweeps = burn_in + thin * per_chain
    rest_idx = [[j for j in range(dim) if j != i] for i in range(dim)]
    for sweep in range(sweeps):
        for i in range(dim):
            cm = mean[i] + (z[:, rest_idx[i]] - mean[rest_idx[i]]) @ weights[i]
            if truncated[i]:
                z[:, i] = _sample_truncnorm_positive(rng, cm, cond_sd[i])
            else:
                z[:, i] = cm + cond_sd[i] * rng.standard_normal(n_chains)
        if sweep >= burn_in and (sweep - burn_in) % thin == thin - 1:
            kept[n_kept : n_kept + n_chains] = z
            n_kept += n_chains
    samples = kept[:n_kept][:n_samples]
    if samples.shape[0] < n_samples:
        raise OracleInfeasibleError("Gibbs sampler produced too few samples")
    return samples


def tmnd_oracle(
    m: MomentPair,
    truncated: Iterable[int],
    n_samples: int,
    seed: int,
) -> MomentPair:
    """Sampling-based reference moments of the truncated normal.

    Draws from N(mean, cov) by rejection, keeping proposals whose truncated
    coordinates are all nonnegative, until `n_samples` draws are accepted.
    If the empirical acceptance rate falls below 1e-3 after 1e5 proposals
    the method switches to coordinate-wise Gibbs sampling.  Deterministic
    for a given seed.
    """
    n_samples = int(n_samples)
    if n_samples < 1000:
        raise ValueError(f"n_samples must be >= 1000, got {n_samples}")
    todo = sorted({int(i) for i in truncated})
    if todo and (todo[0] < 0 or todo[-1] >= m.dim):
        raise ValueError(f"truncated indices {todo} out of range for dim {m.dim}")
    rng = np.random.default_rng(seed)

    w, v = np.linalg.eigh(symmetrize(m.cov))
    factor = v * np.sqrt(np.clip(w, 0.0, None))

    def draw(n):
        return m.mean + rng.standard_normal((n, m.dim)) @ factor.T

    if not todo:
        samples = draw(n_samples)
        return _empirical_moments(samples)

    accepted = []
    n_acc = 0
    n_prop = 0
    batch = 100_000
    while n_acc < n_samples:
        proposals = draw(batch)
        keep = proposals[np.all(proposals[:, todo] >= 0.0, axis=1)]
        n_prop += batch
        n_acc += keep.shape[0]
        if keep.shape[0]:
            accepted.append(keep)
        rate = n_acc / n_prop
        if n_prop >= 100_000 and rate < 1e-3:
            samples = _gibbs_oracle(m, todo, n_samples, rng)
            return _empirical_moments(samples)
        if n_acc < n_samples:
            remaining = n_samples - n_acc
            batch = int(min(4_000_000, max(100_000, 1.1 * remaining / rate)))
    samples = np.concatenate(accepted, axis=0)[:n_samples]
    return _empirical_moments(samples)


def _empirical_moments(samples: np.ndarray) -> MomentPair:
    mean = samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(samples, rowvar=False))
    return MomentPair(mean, symmetrize(cov))
