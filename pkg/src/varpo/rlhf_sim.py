"""Tabular simulation of vanilla and variance-aware policy-gradient fine-tuning.

A policy is a table of logits, one softmax per prompt. For a method with
per-pair KL weight w(x, y) the expected objective is

    J(theta) = sum_x rho(x) sum_y pi(y|x) [ r_hat(x, y) - w(x, y) log(pi(y|x) / pi0(y|x)) ]

Vanilla uses w = kl_coef everywhere. Variance aware uses
w = kl_coef * sigma2(x, y) / variance_scale, so the KL pull is strongest
where the reward model is least sure. Setting ``variance_scale`` to the
smallest variance mirrors eps_t = lambda_min * eps for the trust-region
forms and leaves best-measured pairs with the vanilla coefficient.

The exact gradient of J with respect to the logits of prompt x is

    dJ/dtheta[x, k] = rho(x) pi_k (f_k - sum_y pi_y f_y),
    f = r_hat - w log(pi / pi0) - w.

Its stationary points satisfy log(pi/pi0) = (r_hat - lam)/w - 1 per prompt.
That is not the tilt policy pi0 exp(r_hat / (beta sigma2)) unless w is
constant within the prompt, in which case the two coincide.

Reward noise is drawn through ``reward_interface`` with the policy's own
seed and the pair index as stream key. A training run therefore sees one
fixed realization of the noisy reward model, much as fine-tuning sees one
trained reward model. ``reward_noise="fresh"`` redraws per query instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .core import DimensionError, DomainError, NumericalError, SimplexPolicy
from .parallel import pmap
from .reward import (
    DEFAULT_ENSEMBLE_SIZE,
    EnsembleEstimate,
    IntervalObservation,
    interval_true_reward,
    interval_variance,
)
from .rng import STREAM_ENSEMBLE, STREAM_EVAL, STREAM_REWARD, STREAM_TRAIN, make_rng

log = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8
LOGIT_LIMIT = 1e4
DEFAULT_EVAL_PROMPTS = 512
METHODS = ("vanilla", "variance_aware")
GRADIENT_MODES = ("exact", "stochastic")


class TrainingDivergence(NumericalError):
    """Logits left the finite range during training."""

    def __init__(self, message: str, policy_index: int | None = None):
        super().__init__(message)
        self.policy_index = policy_index


@dataclass(frozen=True, eq=False)
class TabularEnvironment:
    """Prompts, responses, prompt distribution and a per-pair reward oracle.

    Interval mode stores brackets ``a``/``b`` with ``range_max``; ensemble mode
    stores ``r_star``/``sigma2`` and the ensemble size ``k``. All tables have
    shape (n_prompts, n_responses).
    """

    mode: str
    prompt_distribution: np.ndarray
    reference: np.ndarray
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    range_max: float = 100.0
    r_star: np.ndarray | None = None
    sigma2: np.ndarray | None = None
    k: int = DEFAULT_ENSEMBLE_SIZE

    def __post_init__(self):
        rho = np.array(self.prompt_distribution, dtype=np.float64).reshape(-1)
        SimplexPolicy(rho)
        ref = np.array(self.reference, dtype=np.float64)
        if ref.ndim != 2 or ref.shape[0] != rho.size:
            raise DimensionError("reference must be (n_prompts, n_responses)")
        SimplexPolicy(ref.reshape(-1), ref.shape[1])
        if np.any(ref <= 0):
            raise DomainError("reference policy must have full support")
        object.__setattr__(self, "prompt_distribution", rho)
        object.__setattr__(self, "reference", ref)
        shape = ref.shape
        if self.mode == "interval":
            a = np.array(self.a, dtype=np.float64)
            b = np.array(self.b, dtype=np.float64)
            if a.shape != shape or b.shape != shape:
                raise DimensionError("interval tables must match the reference shape")
            if not (np.all(1.0 <= a) and np.all(a < b) and np.all(b <= self.range_max)):
                raise DomainError("need 1 <= a < b <= R for every pair")
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        elif self.mode == "ensemble":
            r = np.array(self.r_star, dtype=np.float64)
            s = np.array(self.sigma2, dtype=np.float64)
            if r.shape != shape or s.shape != shape:
                raise DimensionError("ensemble tables must match the reference shape")
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(s)) and np.all(s > 0)):
                raise DomainError("r_star must be finite and sigma2 > 0")
            if self.k < 2:
                raise DomainError("ensemble size must be >= 2")
            object.__setattr__(self, "r_star", r)
            object.__setattr__(self, "sigma2", s)
        else:
            raise DomainError(f"unknown oracle mode {self.mode!r}")

    @property
    def n_prompts(self) -> int:
        return self.reference.shape[0]

    @property
    def n_responses(self) -> int:
        return self.reference.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.reference.shape

    def pair_index(self, x: int, y: int) -> int:
        if not (0 <= x < self.n_prompts and 0 <= y < self.n_responses):
            raise IndexError(f"pair ({x}, {y}) out of range")
        return x * self.n_responses + y

    def true_reward_table(self) -> np.ndarray:
        if self.mode == "interval":
            return 0.5 * (self.a + self.b)
        return self.r_star.copy()

    def nominal_variance_table(self) -> np.ndarray:
        """Oracle variance: (b - a)^2 / 12 or the stored sigma2."""
        if self.mode == "interval":
            return (self.b - self.a) ** 2 / 12.0
        return self.sigma2.copy()

    def reference_return(self) -> float:
        return float(self.prompt_distribution @ np.sum(self.reference * self.true_reward_table(), axis=1))


def interval_environment(a, b, range_max: float = 100.0, prompt_distribution=None,
                         reference=None) -> TabularEnvironment:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    nx, ny = a.shape
    rho = np.full(nx, 1.0 / nx) if prompt_distribution is None else prompt_distribution
    ref = np.full((nx, ny), 1.0 / ny) if reference is None else reference
    return TabularEnvironment("interval", rho, ref, a=a, b=np.atleast_2d(b), range_max=range_max)


def ensemble_environment(r_star, sigma2, k: int = DEFAULT_ENSEMBLE_SIZE,
                         prompt_distribution=None, reference=None) -> TabularEnvironment:
    r = np.atleast_2d(np.asarray(r_star, dtype=np.float64))
    nx, ny = r.shape
    rho = np.full(nx, 1.0 / nx) if prompt_distribution is None else prompt_distribution
    ref = np.full((nx, ny), 1.0 / ny) if reference is None else reference
    return TabularEnvironment("ensemble", rho, ref, r_star=r, sigma2=np.atleast_2d(sigma2), k=k)


def default_environment(
    range_max: float = 100.0,
    n_prompts: int = 8,
    n_responses: int = 6,
    seed: int = 123,
    spread: float = 0.007,
    min_width: float = 5.0,
    width_lo: float = 0.02,
    width_hi: float = 0.8,
) -> TabularEnvironment:
    """Synthetic interval environment used by the population study.

    Responses come in antithetic pairs. Each pair has equal bracket width
    and midpoints placed symmetrically about the middle of [1, R], offset
    by at most spread*(R-1)/2. Widths are min_width + (R-1)*U(width_lo,
    width_hi), clipped to [1, R]. Many responses are therefore nearly tied
    in true reward but differ a lot in how precisely they are measured.
    This is the regime where the KL weighting matters.
    """
    if n_responses % 2:
        raise DomainError("n_responses must be even for antithetic pairs")
    if range_max <= 1:
        raise DomainError("range_max must exceed 1")
    g = make_rng(seed, 0)
    h = n_responses // 2
    d = spread * g.uniform(0.0, 0.5, (n_prompts, h))
    centre = 0.5 + np.concatenate([d, -d], axis=1)
    w = g.uniform(width_lo, width_hi, (n_prompts, h))
    w = np.concatenate([w, w], axis=1)
    half = 0.5 * (min_width + (range_max - 1.0) * w)
    mid = 1.0 + (range_max - 1.0) * centre
    a = np.clip(mid - half, 1.0, None)
    b = np.clip(mid + half, None, range_max)
    return interval_environment(a, b, range_max)


# Reward oracle interface ----------------------------------------------------

def reward_interface(env: TabularEnvironment, x: int, y: int, seed: int = 0, *key: int):
    """Observation for pair (x, y): an IntervalObservation or an EnsembleEstimate."""
    pair = env.pair_index(x, y)
    if env.mode == "interval":
        return IntervalObservation(env.a[x, y], env.b[x, y], env.range_max)
    z = make_rng(seed, STREAM_ENSEMBLE, pair, *key).standard_normal(env.k)
    return EnsembleEstimate.from_samples(env.r_star[x, y] + math.sqrt(env.sigma2[x, y]) * z)


def sample_reward(observation, seed: int | None = None, *key: int) -> float:
    """Interval: a Uniform(a, b) draw keyed by ``seed``. Ensemble: the member mean."""
    if isinstance(observation, EnsembleEstimate):
        return observation.mean
    if isinstance(observation, IntervalObservation):
        if seed is None:
            raise DomainError("sampling an interval observation needs a seed")
        u = make_rng(seed, STREAM_REWARD, *key).random()
        return float(observation.a + (observation.b - observation.a) * u)
    raise DomainError(f"unsupported observation {type(observation).__name__}")


def get_variance(observation) -> float:
    """Interval: (b - a)^2 / 12. Ensemble: unbiased sample variance (may be 0)."""
    if isinstance(observation, EnsembleEstimate):
        return observation.sample_variance
    if isinstance(observation, IntervalObservation):
        return interval_variance(observation)
    raise DomainError(f"unsupported observation {type(observation).__name__}")


def get_true_reward(env: TabularEnvironment, x: int, y: int) -> float:
    env.pair_index(x, y)
    if env.mode == "interval":
        return interval_true_reward(IntervalObservation(env.a[x, y], env.b[x, y], env.range_max))
    return float(env.r_star[x, y])


def reward_tables(env: TabularEnvironment, seed: int, *key: int) -> tuple[np.ndarray, np.ndarray]:
    """Noisy reward and variance for every pair, as seen by one training run."""
    r_hat = np.empty(env.shape)
    var = np.empty(env.shape)
    for x in range(env.n_prompts):
        for y in range(env.n_responses):
            obs = reward_interface(env, x, y, seed, *key)
            r_hat[x, y] = sample_reward(obs, seed, env.pair_index(x, y), *key)
            var[x, y] = get_variance(obs)
    return r_hat, var


def floor_variance(var: np.ndarray) -> np.ndarray:
    if np.any(var < VARIANCE_FLOOR):
        log.warning("%d reward variances below %.0e were floored",
                    int(np.sum(var < VARIANCE_FLOOR)), VARIANCE_FLOOR)
        var = np.maximum(var, VARIANCE_FLOOR)
    return var


# Policy and training ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TabularSoftmaxPolicy:
    logits: np.ndarray

    def __post_init__(self):
        z = np.array(self.logits, dtype=np.float64)
        if z.ndim != 2:
            raise DimensionError("logits must be a 2-D table")
        if not np.all(np.isfinite(z)):
            raise DomainError("logits must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "logits", z)

    @classmethod
    def from_probabilities(cls, probs) -> "TabularSoftmaxPolicy":
        return cls(np.log(np.asarray(probs, dtype=np.float64)))

    def probabilities(self) -> np.ndarray:
        return softmax(self.logits)

    def as_simplex(self) -> SimplexPolicy:
        p = self.probabilities()
        return SimplexPolicy(p.reshape(-1), p.shape[1])


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``kl_coef`` is the vanilla KL weight and the scale of the variance-aware
    weight kl_coef * sigma2 / variance_scale. With ``precondition`` each
    logit step is divided by rho(x) * w(x, y). That moves only the speed of
    convergence, not the stationary points, and makes step sizes comparable
    across pairs whose weights differ by orders of magnitude.
    """

    method: str = "variance_aware"
    iterations: int = 2000
    batch_size: int = 64
    learning_rate: float = 0.5
    gradient_mode: str = "exact"
    seed: int = 0
    kl_coef: float = 1.0
    variance_scale: float = 1.0
    precondition: bool = True
    reward_noise: str = "persistent"

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise DomainError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.reward_noise not in ("persistent", "fresh"):
            raise DomainError("reward_noise must be 'persistent' or 'fresh'")
        if self.iterations < 1 or self.batch_size < 1:
            raise DomainError("iterations and batch_size must be >= 1")
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise DomainError("learning_rate must be >= 0")
        if not (self.kl_coef > 0 and self.variance_scale > 0):
            raise DomainError("kl_coef and variance_scale must be > 0")


@dataclass(frozen=True, eq=False)
class PolicyPopulation:
    method: str
    policies: list
    eval_returns: np.ndarray
    seeds: list = field(default_factory=list)
    exact_returns: np.ndarray | None = None

    def __post_init__(self):
        if len(self.policies) != len(self.eval_returns):
            raise DimensionError("one evaluation return per policy is required")

    def records(self) -> list[dict]:
        return [
            {
                "method": self.method,
                "policy_index": i,
                "seed": int(self.seeds[i]) if self.seeds else None,
                "eval_return": float(self.eval_returns[i]),
                "final_logits": np.asarray(p.logits).tolist(),
            }
            for i, p in enumerate(self.policies)
        ]


def softmax(z: np.ndarray) -> np.ndarray:
    m = np.max(z, axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def kl_weights(var: np.ndarray, config: TrainConfig) -> np.ndarray:
    if config.method == "vanilla":
        return np.full(np.shape(var), config.kl_coef)
    return config.kl_coef * floor_variance(np.asarray(var, dtype=np.float64)) / config.variance_scale


def expected_objective(logits, r_hat, w, pi0, rho) -> float:
    """J(theta) for one policy (arrays of shape (|X|, |Y|))."""
    z = np.asarray(logits, dtype=np.float64)
    logp = z - np.max(z, axis=-1, keepdims=True)
    logp = logp - np.log(np.sum(np.exp(logp), axis=-1, keepdims=True))
    p = np.exp(logp)
    inner = np.sum(p * (r_hat - w * (logp - np.log(pi0))), axis=-1)
    return float(rho @ inner)


def exact_gradient(logits, r_hat, w, pi0, rho) -> np.ndarray:
    """Closed-form gradient of J. Broadcasts over leading batch axes."""
    z = np.asarray(logits, dtype=np.float64)
    logp = z - np.max(z, axis=-1, keepdims=True)
    logp = logp - np.log(np.sum(np.exp(logp), axis=-1, keepdims=True))
    p = np.exp(logp)
    f = r_hat - w * (logp - np.log(pi0)) - w
    centred = f - np.sum(p * f, axis=-1, keepdims=True)
    return rho[..., :, None] * p * centred


def stochastic_gradient(logits, r_hat, w, pi0, rho, batch_size: int, rng) -> np.ndarray:
    """Score-function estimate of the gradient of J from ``batch_size`` samples.

    x ~ rho, y ~ pi(.|x); each sample adds
    (r - w log(pi/pi0) - w) * (e_y - pi(.|x)) to row x, and the sum is
    divided by the batch size.
    """
    z = np.asarray(logits, dtype=np.float64)
    p = softmax(z)
    nx, ny = p.shape
    xs = _categorical(rng, np.broadcast_to(rho, (batch_size, nx)))
    ys = _categorical(rng, p[xs])
    logratio = np.log(p[xs, ys]) - np.log(pi0[xs, ys])
    coef = r_hat[xs, ys] - w[xs, ys] * logratio - w[xs, ys]
    grad = np.zeros_like(p)
    np.add.at(grad, (xs, ys), coef)
    np.add.at(grad, xs, -coef[:, None] * p[xs])
    return grad / batch_size


def _categorical(rng, probs: np.ndarray) -> np.ndarray:
    """One inverse-CDF draw per row of ``probs``."""
    u = rng.random(probs.shape[0])
    cdf = np.cumsum(probs, axis=1)
    idx = np.sum(u[:, None] >= cdf[:, :-1], axis=1) if probs.shape[1] > 1 else np.zeros(probs.shape[0], int)
    return idx.astype(np.int64)


def _training_tables(env: TabularEnvironment, config: TrainConfig, seed: int):
    if config.reward_noise == "persistent":
        r_hat, var = reward_tables(env, seed)
    else:
        r_hat, var = env.true_reward_table(), env.nominal_variance_table()
    return r_hat, kl_weights(var, config)


def _check_logits(z: np.ndarray, index=None) -> None:
    if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > LOGIT_LIMIT:
        raise TrainingDivergence(f"logit magnitude exceeded {LOGIT_LIMIT:g}", index)


def _train_exact_batch(env, config, r_hat, w, init, indices=None) -> np.ndarray:
    """Exact-gradient ascent for a stack of policies (leading axis = policy)."""
    z = np.array(init, dtype=np.float64)
    pi0, rho = env.reference, env.prompt_distribution
    step = config.learning_rate
    if config.precondition:
        step = config.learning_rate / (rho[None, :, None] * w)
    if config.learning_rate == 0:
        return z
    for _ in range(config.iterations):
        z = z + step * exact_gradient(z, r_hat, w, pi0, rho)
        # Remove the per-prompt shift that the softmax ignores.
        z = z - np.max(z, axis=-1, keepdims=True)
    if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > LOGIT_LIMIT:
        bad = np.where(~np.all(np.isfinite(z) & (np.abs(z) <= LOGIT_LIMIT), axis=(1, 2)))[0]
        idx = None if indices is None else int(indices[bad[0]])
        raise TrainingDivergence(f"logit magnitude exceeded {LOGIT_LIMIT:g}", idx)
    return z


def _train_stochastic(env, config, r_hat, w, init, seed, fresh_seed=None) -> np.ndarray:
    z = np.array(init, dtype=np.float64)
    if config.learning_rate == 0:
        return z
    pi0, rho = env.reference, env.prompt_distribution
    step = config.learning_rate
    if config.precondition:
        step = config.learning_rate / (rho[:, None] * w)
    rng = make_rng(seed, STREAM_TRAIN)
    for _ in range(config.iterations):
        g = stochastic_gradient(z, r_hat, w, pi0, rho, config.batch_size, rng)
        z = z + step * g
        z = z - np.max(z, axis=-1, keepdims=True)
        _check_logits(z)
    return z


def _fresh_stochastic(env, config, w_nominal, init, seed) -> np.ndarray:
    """Stochastic training where each sampled pair gets a new reward draw."""
    z = np.array(init, dtype=np.float64)
    if config.learning_rate == 0:
        return z
    pi0, rho = env.reference, env.prompt_distribution
    step = config.learning_rate
    if config.precondition:
        step = config.learning_rate / (rho[:, None] * w_nominal)
    rng = make_rng(seed, STREAM_TRAIN)
    for it in range(config.iterations):
        p = softmax(z)
        xs = _categorical(rng, np.broadcast_to(rho, (config.batch_size, env.n_prompts)))
        ys = _categorical(rng, p[xs])
        r = np.empty(config.batch_size)
        wv = np.empty(config.batch_size)
        for i, (x, y) in enumerate(zip(xs, ys)):
            obs = reward_interface(env, int(x), int(y), seed, it, i)
            r[i] = sample_reward(obs, seed, env.pair_index(int(x), int(y)), it, i)
            wv[i] = kl_weights(np.array([get_variance(obs)]), config)[0]
        coef = r - wv * (np.log(p[xs, ys]) - np.log(pi0[xs, ys])) - wv
        g = np.zeros_like(p)
        np.add.at(g, (xs, ys), coef)
        np.add.at(g, xs, -coef[:, None] * p[xs])
        z = z + step * g / config.batch_size
        z = z - np.max(z, axis=-1, keepdims=True)
        _check_logits(z)
    return z


def train_policy(env: TabularEnvironment, config: TrainConfig,
                 init: TabularSoftmaxPolicy | None = None) -> TabularSoftmaxPolicy:
    """Gradient ascent on J starting from the reference policy (or ``init``)."""
    z0 = np.log(env.reference) if init is None else np.asarray(init.logits)
    seed = config.seed
    if config.gradient_mode == "stochastic" and config.reward_noise == "fresh":
        w = kl_weights(env.nominal_variance_table(), config)
        return TabularSoftmaxPolicy(_fresh_stochastic(env, config, w, z0, seed))
    r_hat, w = _training_tables(env, config, seed)
    if config.gradient_mode == "exact":
        z = _train_exact_batch(env, config, r_hat[None], w[None], z0[None])[0]
    else:
        z = _train_stochastic(env, config, r_hat, w, z0, seed)
    return TabularSoftmaxPolicy(z)


def evaluate_policy(env: TabularEnvironment, policy, num_prompts: int = DEFAULT_EVAL_PROMPTS,
                    seed: int = 0) -> float:
    """Mean true reward over ``num_prompts`` prompts x ~ rho and responses y ~ pi(.|x)."""
    if num_prompts < 1:
        raise DomainError("num_prompts must be >= 1")
    p = policy.probabilities() if isinstance(policy, TabularSoftmaxPolicy) else np.asarray(policy)
    rng = make_rng(seed, STREAM_EVAL)
    xs = _categorical(rng, np.broadcast_to(env.prompt_distribution, (num_prompts, env.n_prompts)))
    ys = _categorical(rng, p[xs])
    return float(np.mean(env.true_reward_table()[xs, ys]))


def exact_return(env: TabularEnvironment, policy) -> float:
    p = policy.probabilities() if isinstance(policy, TabularSoftmaxPolicy) else np.asarray(policy)
    return float(env.prompt_distribution @ np.sum(p * env.true_reward_table(), axis=1))


def policy_seed(master_seed: int, method: str, index: int) -> int:
    """Seed of one population member, derived from (master seed, method, index)."""
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=(STREAM_TRAIN, METHODS.index(method), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _train_member(index_seed, env, config, num_prompts):
    index, seed = index_seed
    cfg = replace(config, seed=seed)
    try:
        pol = train_policy(env, cfg)
    except TrainingDivergence as exc:
        raise TrainingDivergence(str(exc), index) from exc
    return pol


def run_population(env: TabularEnvironment, config: TrainConfig, count: int = 80,
                   num_prompts: int = DEFAULT_EVAL_PROMPTS, workers: int | None = None) -> PolicyPopulation:
    """Train and evaluate ``count`` independent policies.

    ``config.seed`` is the master seed. Member i uses seed
    policy_seed(master, method, i) for its reward realization, its training
    stream and (under a separate stream tag) its evaluation draws.
    """
    if count < 2:
        raise DomainError("a population needs at least 2 policies")
    seeds = [policy_seed(config.seed, config.method, i) for i in range(count)]
    if config.gradient_mode == "exact" and config.reward_noise == "persistent":
        tables = [reward_tables(env, s) for s in seeds]
        r_hat = np.stack([t[0] for t in tables])
        w = np.stack([kl_weights(t[1], config) for t in tables])
        init = np.broadcast_to(np.log(env.reference), r_hat.shape)
        z = _train_exact_batch(env, config, r_hat, w, init, indices=np.arange(count))
        policies = [TabularSoftmaxPolicy(zi) for zi in z]
    else:
        fn = partial(_train_member, env=env, config=config, num_prompts=num_prompts)
        policies = pmap(fn, list(enumerate(seeds)), workers)
    returns = np.array([evaluate_policy(env, p, num_prompts, s) for p, s in zip(policies, seeds)])
    exact = np.array([exact_return(env, p) for p in policies])
    return PolicyPopulation(config.method, policies, returns, seeds, exact)


def population_config(env: TabularEnvironment, method: str, seed: int = 0,
                      tilt_scale: float = 2.0, **overrides) -> TrainConfig:
    """Training config whose KL weights are scaled to the environment's noise.

    kl_coef = sqrt(mean sigma2) / tilt_scale, so a reward gap of one typical
    noise standard deviation moves the vanilla log-odds by ``tilt_scale``.
    variance_scale = min sigma2, so the variance-aware weight equals kl_coef
    on the best-measured pair and grows with sigma2 elsewhere.
    """
    var = env.nominal_variance_table()
    base = dict(method=method, seed=seed, kl_coef=float(np.sqrt(np.mean(var)) / tilt_scale),
                variance_scale=float(np.min(var)))
    base.update(overrides)
    return TrainConfig(**base)


def kl_to_reference(env: TabularEnvironment, policy) -> float:
    """rho-weighted KL(pi || pi0)."""
    p = policy.probabilities() if isinstance(policy, TabularSoftmaxPolicy) else np.asarray(policy)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(env.reference)), 0.0)
    return float(env.prompt_distribution @ terms.sum(axis=1))
