"""Underperformance risk of the closed-form policies.

With R_hat ~ N(r*, Sigma) the returns of the two closed-form updates beat
the reference exactly when R_hat^T r* > 0 (vanilla) or R_hat^T Sigma^-1 r* > 0
(variance aware). Both are Gaussian scalars, so

    P(vanilla underperforms) = Phi(-||r*||^2 / sqrt(r*^T Sigma r*))
    P(VA underperforms)      = Phi(-sqrt(r*^T Sigma^-1 r*))

and Cauchy-Schwarz, ||r*||^2 <= ||r*||_Sigma * ||r*||_Sigma^-1, orders them.
The Monte Carlo estimator below solves both closed forms per draw and counts
the events directly, without using this shortcut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import DegenerateError, DimensionError, DomainError, _as_vector
from .core import inverse_weighted_norm, lambda_min, weighted_norm
from .parallel import pmap
from .rng import MC_BLOCK, STREAM_COVERAGE, STREAM_MC, block_counts, make_rng
from .stats import normal_cdf


@dataclass(frozen=True)
class RiskReport:
    analytic_vanilla: float | None
    analytic_variance_aware: float | None
    mc_vanilla: float
    mc_variance_aware: float
    mc_trials: int
    mc_std_error_vanilla: float
    mc_std_error_va: float
    excluded_trials: int = 0
    projected: bool = False

    def __post_init__(self):
        for p in (self.analytic_vanilla, self.analytic_variance_aware,
                  self.mc_vanilla, self.mc_variance_aware):
            if p is not None and not 0.0 <= p <= 1.0:
                raise DomainError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class CoverageReport:
    delta: float
    threshold: float
    empirical_coverage: float
    trials: int
    n: int = 0

    @property
    def passed(self) -> bool:
        return self.empirical_coverage >= 1.0 - self.delta

    @property
    def std_error(self) -> float:
        p = self.empirical_coverage
        return math.sqrt(p * (1.0 - p) / self.trials)


def _nonzero(r_star) -> tuple[np.ndarray, float]:
    """Return (r / max|r|, max|r|) so tiny or huge rewards do not under/overflow."""
    r = _as_vector(r_star)
    scale = float(np.max(np.abs(r)))
    if scale == 0.0:
        raise DegenerateError("true reward is the zero vector")
    return r / scale, scale


def analytic_risk_vanilla(r_star, sigma) -> float:
    u, scale = _nonzero(r_star)
    return normal_cdf(-scale * float(u @ u) / weighted_norm(u, sigma))


def analytic_risk_variance_aware(r_star, sigma) -> float:
    u, scale = _nonzero(r_star)
    return normal_cdf(-scale * inverse_weighted_norm(u, sigma))


def return_of(policy, r_star) -> float:
    p = _as_vector(policy)
    r = _as_vector(r_star)
    if p.size != r.size:
        raise DimensionError(f"length mismatch: {p.size} vs {r.size}")
    return float(p @ r)


def binomial_std_error(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


def _project_rows(w: np.ndarray, block: int) -> np.ndarray:
    """Row-wise clamp-and-renormalize for a (trials, n) array of raw policies."""
    t, n = w.shape
    rows = np.clip(w.reshape(t, n // block, block), 0.0, None)
    sums = rows.sum(axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = rows / sums
    return out.reshape(t, n)


def closed_form_batch(r_hat: np.ndarray, pi0: np.ndarray, s: np.ndarray,
                      epsilon: float, epsilon_tilde: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both closed forms for a (trials, n) stack of estimates.

    Returns (pi1, pi2, degenerate) where ``degenerate`` flags zero rows.
    """
    rr = np.einsum("ij,ij->i", r_hat, r_hat)
    direction = r_hat / s
    q = np.einsum("ij,ij->i", r_hat, direction)
    bad = rr == 0.0
    rr = np.where(bad, 1.0, rr)
    q = np.where(bad, 1.0, q)
    pi1 = pi0 + np.sqrt(epsilon / rr)[:, None] * r_hat
    pi2 = pi0 + np.sqrt(epsilon_tilde / q)[:, None] * direction
    return pi1, pi2, bad


def _mc_block(args, r, s, pi0, epsilon, epsilon_tilde, project, block, seed):
    idx, size = args
    rng = make_rng(seed, STREAM_MC, idx)
    r_hat = r + np.sqrt(s) * rng.standard_normal((size, r.size))
    pi1, pi2, bad = closed_form_batch(r_hat, pi0, s, epsilon, epsilon_tilde)
    if project:
        pi1 = _project_rows(pi1, block)
        pi2 = _project_rows(pi2, block)
        bad = bad | ~np.all(np.isfinite(pi1), axis=1) | ~np.all(np.isfinite(pi2), axis=1)
    base = float(pi0 @ r)
    ret1 = pi1 @ r
    ret2 = pi2 @ r
    keep = ~bad
    return (int(np.sum((ret1 <= base) & keep)), int(np.sum((ret2 <= base) & keep)),
            int(np.sum(bad)), ret1[keep], ret2[keep])


def monte_carlo_risk(
    r_star,
    sigma,
    pi0,
    epsilon: float,
    trials: int,
    seed: int,
    *,
    project: bool = False,
    block: int | None = None,
    epsilon_tilde: float | None = None,
    workers: int | None = None,
    return_samples: bool = False,
):
    """Monte Carlo frequency of pi^T r* <= pi0^T r* for both closed forms.

    Draws are made in fixed blocks of ``MC_BLOCK`` trials, block ``i`` using
    stream (seed, MC, i), so the report does not depend on ``workers``.
    ``epsilon_tilde`` defaults to lambda_min(Sigma) * epsilon. With
    ``project`` the policies are clamped to the simplex before scoring and
    the analytic fields are reported as None. With ``return_samples`` the
    per-trial returns of both policies are returned as a second value.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    r = _as_vector(r_star)
    _nonzero(r)
    s = _as_vector(sigma)
    p0 = _as_vector(pi0)
    if not (r.size == s.size == p0.size):
        raise DimensionError("r_star, sigma and pi0 lengths differ")
    if np.any(s <= 0):
        raise DomainError("variances must be strictly positive")
    eps_t = lambda_min(s) * epsilon if epsilon_tilde is None else float(epsilon_tilde)
    block = r.size if block is None else int(block)
    fn = partial(_mc_block, r=r, s=s, pi0=p0, epsilon=float(epsilon), epsilon_tilde=eps_t,
                 project=bool(project), block=block, seed=int(seed))
    parts = pmap(fn, block_counts(int(trials), MC_BLOCK), workers)
    c1 = sum(p[0] for p in parts)
    c2 = sum(p[1] for p in parts)
    excluded = sum(p[2] for p in parts)
    used = int(trials) - excluded
    if used < 1:
        raise DegenerateError("every trial was degenerate")
    f1, f2 = c1 / used, c2 / used
    if project:
        a1 = a2 = None
    else:
        a1 = analytic_risk_vanilla(r, s)
        a2 = analytic_risk_variance_aware(r, s)
    report = RiskReport(a1, a2, f1, f2, used, binomial_std_error(f1, used),
                        binomial_std_error(f2, used), excluded, bool(project))
    if return_samples:
        ret1 = np.concatenate([p[3] for p in parts])
        ret2 = np.concatenate([p[4] for p in parts])
        return report, (ret1, ret2)
    return report


def delta_from_beta(beta: float, n: int) -> float:
    """Confidence level delta = exp(-n / beta^2) matching a multiplier beta."""
    if not beta > 0:
        raise DomainError("beta must be > 0")
    return math.exp(-n / beta**2)


def coverage_threshold(n: int, delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    return math.sqrt(n * math.log(1.0 / delta))


def theorem1_coverage(
    r_star,
    sigma,
    delta: float | None = None,
    trials: int = 10_000,
    seed: int = 0,
    *,
    beta: float | None = None,
) -> CoverageReport:
    """Frequency of ||R_hat - r*||_{Sigma^-1} <= sqrt(n ln(1/delta)).

    Pass either ``delta`` or ``beta``; the latter is converted through
    delta = exp(-n / beta^2).
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    r = _as_vector(r_star)
    s = _as_vector(sigma)
    if r.size != s.size:
        raise DimensionError("r_star and sigma lengths differ")
    if np.any(s <= 0):
        raise DomainError("variances must be strictly positive")
    n = r.size
    if (delta is None) == (beta is None):
        raise DomainError("give exactly one of delta or beta")
    if delta is None:
        delta = delta_from_beta(beta, n)
    thr = coverage_threshold(n, float(delta))
    hits = 0
    for idx, size in block_counts(int(trials), MC_BLOCK):
        rng = make_rng(seed, STREAM_COVERAGE, idx)
        r_hat = r + np.sqrt(s) * rng.standard_normal((size, n))
        dist = np.sqrt(np.sum((r_hat - r) ** 2 / s, axis=1))
        hits += int(np.sum(dist <= thr))
    return CoverageReport(float(delta), thr, hits / int(trials), int(trials), n)


@dataclass(frozen=True, eq=False)
class RiskScenario:
    r_star: np.ndarray
    sigma2: np.ndarray


def scenario_suite(count: int = 20, seed: int = 2024) -> list[RiskScenario]:
    """Fixed instances whose risks are moderate (roughly 0.02 to 0.4).

    Instance i has n = 2 + (i mod 8) arms, variances U(0.5, 4) and a
    Gaussian r* rescaled to norm U(0.5, 1.5), so both failure events are
    frequent enough for a 3-SE check at 10^5 trials to be informative.
    """
    out = []
    for i in range(count):
        g = make_rng(seed, STREAM_MC, 10**6 + i)
        n = 2 + i % 8
        s = g.uniform(0.5, 4.0, n)
        r = g.standard_normal(n)
        r = r / np.linalg.norm(r) * g.uniform(0.5, 1.5)
        out.append(RiskScenario(r, s))
    return out
