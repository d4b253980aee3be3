"""Closed-form trust-region policies, the penalized surrogate and the tilt policy.

Maximizing the linear estimated return R_hat^T d over a ball gives

* unweighted ball ||d||^2 <= eps:
      d1 = sqrt(eps / R_hat^T R_hat) * R_hat
* covariance-weighted ball d^T Sigma d <= eps_t:
      d2 = sqrt(eps_t / R_hat^T Sigma^-1 R_hat) * Sigma^-1 R_hat

Both optima lie on the boundary. The Lagrange multiplier of the weighted
problem, beta = 0.5 * sqrt(R_hat^T Sigma^-1 R_hat / eps_t), links the ball
to the penalized form R_hat^T d - beta * ||d||_Sigma. Closed forms are raw
vectors. They may leave the simplex, and projection is a separate opt-in
step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateError,
    DiagonalCovariance,
    DimensionError,
    DomainError,
    RawPolicy,
    RewardVector,
    SimplexPolicy,
    _as_vector,
    lambda_min,
    weighted_norm,
)

# Default three-arm calibration: bracket half-widths read as one standard
# deviation, brackets [0.5, 3.5], [1.6, 2.4], [1.2, 1.8].
BANDIT3_R_HAT = (3.2, 2.2, 1.35)
BANDIT3_R_STAR = (1.0, 1.8, 1.65)
BANDIT3_SIGMA = (1.5, 0.4, 0.3)


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    policy: RawPolicy
    beta: float
    step_scale: float
    constraint_value: float

    @property
    def weights(self) -> np.ndarray:
        return self.policy.weights


def _check_inputs(pi0, r_hat) -> tuple[np.ndarray, np.ndarray]:
    p = _as_vector(pi0)
    r = _as_vector(r_hat)
    if p.size != r.size:
        raise DimensionError(f"length mismatch: {p.size} vs {r.size}")
    if not np.any(r != 0.0):
        raise DegenerateError("estimated reward is the zero vector; direction undefined")
    return p, r


def solve_vanilla(pi0, r_hat, epsilon: float) -> ClosedFormSolution:
    """Maximizer of R_hat^T pi subject to ||pi - pi0||^2 <= epsilon."""
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    p, r = _check_inputs(pi0, r_hat)
    rr = float(r @ r)
    scale = np.sqrt(epsilon / rr)
    d = scale * r
    beta = 0.5 * np.sqrt(rr / epsilon)
    return ClosedFormSolution(RawPolicy(p + d), float(beta), float(scale), float(d @ d))


def solve_variance_aware(pi0, r_hat, sigma, epsilon_tilde: float) -> ClosedFormSolution:
    """Maximizer of R_hat^T pi subject to (pi - pi0)^T Sigma (pi - pi0) <= epsilon_tilde."""
    if not epsilon_tilde > 0:
        raise DomainError("epsilon_tilde must be > 0")
    p, r = _check_inputs(pi0, r_hat)
    s = _as_vector(sigma)
    if s.size != r.size:
        raise DimensionError(f"length mismatch: {s.size} vs {r.size}")
    if np.any(s <= 0):
        raise DomainError("variances must be strictly positive")
    direction = r / s
    q = float(r @ direction)
    scale = np.sqrt(epsilon_tilde / q)
    d = scale * direction
    beta = 0.5 * np.sqrt(q / epsilon_tilde)
    return ClosedFormSolution(RawPolicy(p + d), float(beta), float(scale), float(np.sum(s * d * d)))


def scale_epsilon(sigma, epsilon: float) -> float:
    """eps_t = lambda_min(Sigma) * eps."""
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    return lambda_min(sigma) * float(epsilon)


def surrogate_objective(d, r_hat, sigma, beta: float) -> float:
    """R_hat^T d - beta * ||d||_Sigma."""
    if beta < 0:
        raise DomainError("beta must be >= 0")
    dv = _as_vector(d)
    r = _as_vector(r_hat)
    if dv.size != r.size:
        raise DimensionError(f"length mismatch: {dv.size} vs {r.size}")
    return float(r @ dv) - float(beta) * weighted_norm(dv, sigma)


def _log_softmax_rows(z: np.ndarray) -> np.ndarray:
    m = np.max(z, axis=-1, keepdims=True)
    return z - m - np.log(np.sum(np.exp(z - m), axis=-1, keepdims=True))


def exp_tilt_policy(pi0, r_hat, sigma2, beta: float, block: int | None = None) -> SimplexPolicy:
    """pi(y|x) proportional to pi0(y|x) * exp(R_hat(x,y) / (beta * sigma2(x,y))).

    ``block`` is the number of responses per prompt; by default it is taken
    from ``pi0`` when that is a SimplexPolicy, otherwise one prompt is assumed.
    Arrays of shape (|X|, |Y|) are also accepted. Computed in log space.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise DomainError("beta must be > 0")
    if block is None:
        if isinstance(pi0, SimplexPolicy):
            block = pi0.block
        elif np.ndim(pi0) == 2:
            block = np.shape(pi0)[1]
    p = _as_vector(pi0)
    r = _as_vector(r_hat)
    s = _as_vector(sigma2)
    if not (p.size == r.size == s.size):
        raise DimensionError("pi0, r_hat and sigma2 lengths differ")
    if np.any(s <= 0):
        raise DomainError("variances must be strictly positive")
    block = p.size if block is None else int(block)
    if p.size % block:
        raise DimensionError("length is not a multiple of the block size")
    if np.any(p < 0):
        raise DomainError("reference policy has negative entries")
    with np.errstate(divide="ignore"):
        logits = np.log(p) + r / (beta * s)
    out = np.exp(_log_softmax_rows(logits.reshape(-1, block)))
    # One more renormalization pins row sums to 1 to within rounding.
    out = out / out.sum(axis=1, keepdims=True)
    return SimplexPolicy(out.reshape(-1), block)


def project_to_simplex(raw, block: int | None = None) -> SimplexPolicy:
    """Clamp negatives to zero and renormalize each block of ``block`` entries."""
    w = _as_vector(raw)
    if not np.all(np.isfinite(w)):
        raise DomainError("raw policy must be finite")
    block = w.size if block is None else int(block)
    if w.size % block:
        raise DimensionError("length is not a multiple of the block size")
    rows = np.clip(w.reshape(-1, block), 0.0, None)
    sums = rows.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise DegenerateError("a block is all zero after clamping")
    out = np.where(rows > 0, rows / sums, 0.0)
    # Leave already-valid blocks untouched so the map has them as fixed points.
    valid = np.all((w.reshape(-1, block) >= 0) & (w.reshape(-1, block) <= 1), axis=1) & (
        np.abs(w.reshape(-1, block).sum(axis=1) - 1.0) <= 1e-12
    )
    out[valid] = w.reshape(-1, block)[valid]
    return SimplexPolicy(np.minimum(out, 1.0).reshape(-1), block)


def as_reward_vector(values) -> RewardVector:
    return values if isinstance(values, RewardVector) else RewardVector(values)


def as_covariance(values) -> DiagonalCovariance:
    return values if isinstance(values, DiagonalCovariance) else DiagonalCovariance(values)
