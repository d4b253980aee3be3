"""Reward oracles.

Three ways of observing a reward:

* Gaussian: R_hat = r* + N(0, Sigma) with diagonal Sigma.
* Ensemble: k Gaussian member draws for one pair, summarized by their mean
  and unbiased sample variance.
* Interval: a bracket [a, b] with 1 <= a < b <= R. A sample is Uniform(a, b),
  the uncertainty is (b - a)^2 / 12 and the true reward is the midpoint.

Every sampler takes an integer seed (plus optional stream key) rather than a
shared generator, which keeps results independent of call order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiagonalCovariance, DimensionError, DomainError, RewardVector
from .rng import STREAM_ENSEMBLE, STREAM_REWARD, make_rng

DEFAULT_ENSEMBLE_SIZE = 10


@dataclass(frozen=True, eq=False)
class GaussianRewardModel:
    true_reward: RewardVector
    covariance: DiagonalCovariance

    def __post_init__(self):
        if not isinstance(self.true_reward, RewardVector):
            object.__setattr__(self, "true_reward", RewardVector(self.true_reward))
        if not isinstance(self.covariance, DiagonalCovariance):
            object.__setattr__(self, "covariance", DiagonalCovariance(self.covariance))
        if self.true_reward.n != self.covariance.n:
            raise DimensionError("true reward and covariance lengths differ")

    @property
    def n(self) -> int:
        return self.true_reward.n


@dataclass(frozen=True)
class IntervalObservation:
    lower: float
    upper: float
    range_max: float = 100.0

    def __post_init__(self):
        a, b, r = float(self.lower), float(self.upper), float(self.range_max)
        if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(r)):
            raise DomainError("interval bounds must be finite")
        if not (1.0 <= a < b <= r):
            raise DomainError(f"need 1 <= a < b <= R, got a={a}, b={b}, R={r}")

    @property
    def a(self) -> float:
        return float(self.lower)

    @property
    def b(self) -> float:
        return float(self.upper)


@dataclass(frozen=True, eq=False)
class EnsembleEstimate:
    samples: np.ndarray
    mean: float
    sample_variance: float

    @classmethod
    def from_samples(cls, samples) -> "EnsembleEstimate":
        s = np.array(samples, dtype=np.float64).reshape(-1)
        if s.size < 2:
            raise DomainError("an ensemble needs at least 2 members")
        if not np.all(np.isfinite(s)):
            raise DomainError("ensemble samples must be finite")
        s.setflags(write=False)
        return cls(s, float(np.mean(s)), float(np.var(s, ddof=1)))

    @property
    def k(self) -> int:
        return int(self.samples.size)


def sample_noisy_reward(model: GaussianRewardModel, seed: int, *key: int) -> RewardVector:
    """Draw R_hat ~ N(r*, Sigma)."""
    rng = make_rng(seed, STREAM_REWARD, *key)
    z = rng.standard_normal(model.n)
    return RewardVector(model.true_reward.values + model.covariance.std * z)


def sample_interval_reward(obs: IntervalObservation, seed: int, *key: int) -> float:
    """One Uniform(a, b) draw."""
    u = make_rng(seed, STREAM_REWARD, *key).random()
    return float(obs.a + (obs.b - obs.a) * u)


def interval_variance(obs: IntervalObservation) -> float:
    return (obs.b - obs.a) ** 2 / 12.0


def interval_true_reward(obs: IntervalObservation) -> float:
    return 0.5 * (obs.a + obs.b)


def ensemble_estimate(
    model: GaussianRewardModel,
    index: int,
    k: int = DEFAULT_ENSEMBLE_SIZE,
    seed: int = 0,
    *key: int,
) -> EnsembleEstimate:
    """k independent member rewards for pair ``index``, with mean and variance."""
    if k < 2:
        raise DomainError("ensemble size k must be >= 2")
    index = int(index)
    if not 0 <= index < model.n:
        raise DimensionError(f"pair index {index} out of range")
    rng = make_rng(seed, STREAM_ENSEMBLE, index, *key)
    z = rng.standard_normal(k)
    draws = model.true_reward.values[index] + model.covariance.std[index] * z
    return EnsembleEstimate.from_samples(draws)
