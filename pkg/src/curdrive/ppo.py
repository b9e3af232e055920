"""Tanh-squashed Gaussian policy, GAE and the clipped-surrogate PPO update."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn import AdamState, Mlp, adam_step

LOG_2PI = math.log(2.0 * math.pi)
# per-dimension entropy of a Gaussian minus its log_std
GAUSS_ENTROPY_CONST = 0.5 * math.log(2.0 * math.pi * math.e)
SQUASH_EPS = 1e-6


@dataclass(frozen=True)
class PpoHyper:
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 3
    minibatch_size: int = 32
    value_coef: float = 1.0
    entropy_coef: float = 0.01
    learning_rate: float = 1e-4
    horizon: int = 128
    init_std: float = 0.4
    hidden_sizes: tuple = (64, 64)
    normalize_advantages: bool = True
    log_std_min: float = -5.0
    log_std_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not (0 < self.clip_epsilon < 1):
            raise ValueError("clip_epsilon must be in (0, 1)")
        for name in ("gamma", "gae_lambda", "epochs", "minibatch_size", "horizon", "init_std"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate < 0 or self.value_coef < 0 or self.entropy_coef < 0:
            raise ValueError("learning_rate and loss scales must be non-negative")


def squash_correction(u):
    """log|d tanh(u)/du| summed over the action dimensions (with a small floor)."""
    return np.log(1.0 - np.tanh(u) ** 2 + SQUASH_EPS).sum(axis=-1)


def gaussian_log_prob(u, mean, log_std):
    """Log-density of the squashed action given its pre-squash value ``u``."""
    z = (u - mean) * np.exp(-log_std)
    gauss = (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(axis=-1)
    return gauss - squash_correction(u)


class GaussianPolicy:
    def __init__(self, obs_dim: int, action_dim: int = 2, hidden=(64, 64), init_std: float = 0.4,
                 rng: np.random.Generator | None = None, mean_net: Mlp | None = None, log_std=None):
        if mean_net is None:
            mean_net = Mlp((obs_dim, *hidden, action_dim), rng=rng, output_scale=0.01)
        self.mean_net = mean_net
        if log_std is None:
            log_std = np.full(action_dim, math.log(init_std))
        self.log_std = np.array(log_std, dtype=float)

    @property
    def obs_dim(self) -> int:
        return self.mean_net.sizes[0]

    @property
    def action_dim(self) -> int:
        return self.mean_net.sizes[-1]

    @property
    def params(self) -> list[np.ndarray]:
        return self.mean_net.params + [self.log_std]

    def sample(self, obs, rng: np.random.Generator):
        """Return ``(action, pre_squash, log_prob)`` for a single observation."""
        mean = self.mean_net(obs)
        u = mean + np.exp(self.log_std) * rng.standard_normal(mean.shape)
        return np.tanh(u), u, float(gaussian_log_prob(u, mean, self.log_std))

    def log_prob(self, obs, pre_squash):
        return gaussian_log_prob(np.asarray(pre_squash, dtype=float), self.mean_net(obs), self.log_std)

    def deterministic_action(self, obs):
        return np.tanh(self.mean_net(obs))

    def entropy(self) -> float:
        """Entropy of the pre-squash Gaussian; independent of the observation."""
        return float(np.sum(self.log_std + GAUSS_ENTROPY_CONST))


def log_prob_forward(policy: GaussianPolicy, obs, pre_squash):
    """Batch log-probabilities plus the cache needed by :func:`log_prob_backward`."""
    mean, mcache = policy.mean_net.forward(obs)
    z = (pre_squash - mean) * np.exp(-policy.log_std)
    return gaussian_log_prob(pre_squash, mean, policy.log_std), (mcache, z)


def log_prob_backward(policy: GaussianPolicy, cache, d_logp):
    """Gradients of ``sum(d_logp * log_prob)`` aligned with ``policy.params``."""
    mcache, z = cache
    d_logp = np.asarray(d_logp, dtype=float)[:, None]
    d_mean = d_logp * z * np.exp(-policy.log_std)
    d_log_std = (d_logp * (z * z - 1.0)).sum(axis=0)
    mean_grads, _ = policy.mean_net.backward(mcache, d_mean)
    return mean_grads + [d_log_std]


class ValueFunction:
    def __init__(self, obs_dim: int, hidden=(64, 64), rng: np.random.Generator | None = None,
                 value_net: Mlp | None = None):
        self.value_net = value_net or Mlp((obs_dim, *hidden, 1), rng=rng, output_scale=1.0)

    @property
    def params(self) -> list[np.ndarray]:
        return self.value_net.params

    def __call__(self, obs):
        out = self.value_net(obs)
        return out[..., 0] if out.ndim > 1 else float(out[0])


class RolloutBuffer:
    """Fixed-capacity transition store; may span several episodes."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int = 2):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, action_dim))  # pre-squash
        self.log_probs = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.values = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.bootstrap_value = 0.0
        self.size = 0

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def add(self, obs, pre_squash, log_prob, reward, value, done):
        if self.full:
            raise RuntimeError("buffer is full")
        i = self.size
        self.obs[i] = obs
        self.actions[i] = pre_squash
        self.log_probs[i] = log_prob
        self.rewards[i] = reward
        self.values[i] = value
        self.dones[i] = float(done)
        self.size += 1

    def clear(self):
        self.size = 0
        self.bootstrap_value = 0.0


def gae(rewards, values, dones, bootstrap_value, gamma: float, lam: float):
    """Generalized advantage estimates and value targets, computed backwards."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    if not (len(rewards) == len(values) == len(dones)):
        raise ValueError("rewards, values and dones must have equal length")
    n = len(rewards)
    adv = np.zeros(n)
    next_value = float(bootstrap_value)
    running = 0.0
    for t in range(n - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


def normalize(adv, eps: float = 1e-8):
    return (adv - adv.mean()) / (adv.std() + eps)


def ppo_loss(policy: GaussianPolicy, value_fn: ValueFunction, batch: dict, hyper: PpoHyper):
    """Clipped-surrogate loss (to minimise) and its gradients.

    ``batch`` holds ``obs``, ``actions`` (pre-squash), ``log_probs_old``,
    ``advantages`` and ``returns``. Returns ``(terms, policy_grads,
    value_grads)`` where the gradient lists align with ``policy.params`` and
    ``value_fn.params``.
    """
    obs = np.asarray(batch["obs"], dtype=float)
    n = len(obs)
    if n == 0:
        raise ValueError("empty minibatch")
    u = np.asarray(batch["actions"], dtype=float)
    adv = np.asarray(batch["advantages"], dtype=float)
    eps = hyper.clip_epsilon

    logp, cache = log_prob_forward(policy, obs, u)
    ratio = np.exp(logp - np.asarray(batch["log_probs_old"], dtype=float))
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps)
    unclipped_obj = ratio * adv
    clipped_obj = clipped * adv
    policy_term = -float(np.mean(np.minimum(unclipped_obj, clipped_obj)))
    # d(min)/d(ratio) is A where the unclipped branch is active, else 0
    d_ratio = np.where(unclipped_obj <= clipped_obj, adv, 0.0)
    policy_grads = log_prob_backward(policy, cache, -(d_ratio * ratio) / n)
    entropy_term = policy.entropy()
    policy_grads[-1] -= hyper.entropy_coef  # d(entropy)/d(log_std_i) = 1

    values, vcache = value_fn.value_net.forward(obs)
    diff = values[:, 0] - np.asarray(batch["returns"], dtype=float)
    value_term = float(np.mean(diff * diff))
    value_grads, _ = value_fn.value_net.backward(vcache, (hyper.value_coef * 2.0 / n) * diff[:, None])

    total = policy_term + hyper.value_coef * value_term - hyper.entropy_coef * entropy_term
    terms = {
        "total": total,
        "policy_term": policy_term,
        "value_term": value_term,
        "entropy_term": entropy_term,
        "mean_ratio": float(np.mean(ratio)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > eps)),
    }
    return terms, policy_grads, value_grads


def make_adam_states(policy: GaussianPolicy, value_fn: ValueFunction):
    return AdamState.like(policy.params), AdamState.like(value_fn.params)


def ppo_update(policy: GaussianPolicy, value_fn: ValueFunction, buffer: RolloutBuffer, hyper: PpoHyper,
               adam_states, rng: np.random.Generator) -> dict:
    """K epochs of shuffled minibatch Adam steps on a full buffer; parameters change in place."""
    if not buffer.full:
        raise ValueError(f"buffer holds {buffer.size}/{buffer.capacity} transitions; update needs a full buffer")
    adv, returns = gae(buffer.rewards, buffer.values, buffer.dones, buffer.bootstrap_value,
                       hyper.gamma, hyper.gae_lambda)
    if hyper.normalize_advantages:
        adv = normalize(adv)
    policy_state, value_state = adam_states
    n = buffer.size
    mb = min(hyper.minibatch_size, n)
    log = {k: [] for k in ("total", "policy_term", "value_term", "entropy_term", "mean_ratio", "clip_fraction")}
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, mb):
            idx = order[start:start + mb]
            batch = {
                "obs": buffer.obs[idx],
                "actions": buffer.actions[idx],
                "log_probs_old": buffer.log_probs[idx],
                "advantages": adv[idx],
                "returns": returns[idx],
            }
            terms, pgrads, vgrads = ppo_loss(policy, value_fn, batch, hyper)
            for k in log:
                log[k].append(terms[k])
            adam_step(policy.params, pgrads, policy_state, hyper.learning_rate)
            adam_step(value_fn.params, vgrads, value_state, hyper.learning_rate)
            np.clip(policy.log_std, hyper.log_std_min, hyper.log_std_max, out=policy.log_std)
    return {k: float(np.mean(v)) for k, v in log.items()}
