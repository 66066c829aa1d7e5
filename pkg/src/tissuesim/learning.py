"""Entropy-regularized policy-gradient learning with a centralized critic.

Policies maximize the advantage-weighted log-likelihood plus an entropy
bonus; the critic is a single-hidden-layer value network over the joint
observation of all agents, trained by gradient descent on squared
return-to-go error. All gradients are computed analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy import ActionBounds, PolicyParams, entropy, log_prob_grads

ADVANTAGE_EPS = 1e-8


@dataclass(frozen=True)
class EntropyConfig:
    """Weight of the entropy bonus in the policy objective."""

    mu: float = 0.01

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0):
            raise ValueError(f"mu must be in [0, 1], got {self.mu}")


@dataclass
class Batch:
    """One rollout: per-agent tuples plus the joint observations per step.

    actions hold the raw (pre-clamp) values the policies are
    differentiated through.
    """

    observations: np.ndarray  # (N, T, obs_dim)
    actions: np.ndarray  # (N, T, act_dim)
    rewards: np.ndarray  # (N, T)
    next_observations: np.ndarray  # (N, T, obs_dim)
    joint_observations: np.ndarray  # (T, N * obs_dim)

    @property
    def num_agents(self) -> int:
        return self.observations.shape[0]

    @property
    def horizon(self) -> int:
        return self.observations.shape[1]

    @property
    def size(self) -> int:
        return self.num_agents * self.horizon


@dataclass
class Critic:
    """Centralized value function over the joint observation of all agents.

    One tanh hidden layer feeds a value head per agent: the trunk is shared
    (so values account for the coupling between agents) while each head can
    carry its agent's own return baseline, which a single shared scalar
    cannot. output_scale sets the value units the network trains in: the
    net predicts V / output_scale and squared errors are taken on scaled
    residuals, keeping gradients O(1) when returns span thousands.
    """

    w1: np.ndarray  # (hidden, in_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, n_heads)
    b2: np.ndarray  # (n_heads,)
    lr: float = 1e-2
    discount: float = 0.99
    input_scale: np.ndarray | float = 5.0
    output_scale: float = 1.0

    def __post_init__(self):
        self.w2 = np.atleast_2d(np.asarray(self.w2, dtype=float))
        if self.w2.shape[0] != self.w1.shape[0]:
            self.w2 = self.w2.T  # accept (n_heads, hidden) layouts
        self.b2 = np.atleast_1d(np.asarray(self.b2, dtype=float))
        if not (0.0 <= self.discount < 1.0):
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if self.lr <= 0 or np.any(np.asarray(self.input_scale) <= 0) or self.output_scale <= 0:
            raise ValueError("lr, input_scale, and output_scale must be positive")

    @property
    def num_heads(self) -> int:
        return self.w2.shape[1]


def init_critic(
    input_dim: int,
    rng: np.random.Generator,
    hidden: int = 64,
    lr: float = 1e-2,
    discount: float = 0.99,
    input_scale=5.0,
    output_scale: float = 1.0,
    num_heads: int = 1,
) -> Critic:
    return Critic(
        w1=rng.standard_normal((hidden, input_dim)) / np.sqrt(input_dim),
        b1=np.zeros(hidden),
        w2=rng.standard_normal((hidden, num_heads)) / np.sqrt(hidden),
        b2=np.zeros(num_heads),
        lr=lr,
        discount=discount,
        input_scale=input_scale,
        output_scale=output_scale,
    )


def critic_value(critic: Critic, joint_obs: np.ndarray) -> np.ndarray:
    """Per-head value estimates. (T, in) input gives a (T, n_heads) matrix;
    a single observation gives an (n_heads,) vector (scalar for one head)."""
    x = np.atleast_2d(joint_obs) / critic.input_scale
    h = np.tanh(x @ critic.w1.T + critic.b1)
    v = critic.output_scale * (h @ critic.w2 + critic.b2)
    if np.ndim(joint_obs) > 1:
        return v
    return float(v[0, 0]) if critic.num_heads == 1 else v[0]


def discounted_returns(rewards, discount: float) -> np.ndarray:
    """Return-to-go per step via the standard backward recursion.

    The recursion runs in plain scalar arithmetic so results are
    bit-identical to a naive reference loop.
    """
    T = len(rewards)
    out = np.empty(T)
    acc = 0.0
    for t in range(T - 1, -1, -1):
        acc = float(rewards[t]) + discount * acc
        out[t] = acc
    return out


def returns_matrix(batch: Batch, discount: float) -> np.ndarray:
    return np.stack([discounted_returns(batch.rewards[k], discount) for k in range(batch.num_agents)])


def compute_advantages(critic: Critic, batch: Batch) -> np.ndarray:
    """Per-tuple advantage: return-to-go minus the centralized value,
    mean-centered and variance-normalized over the batch."""
    if batch.size == 0:
        raise ValueError("batch is empty")
    returns = returns_matrix(batch, critic.discount)
    values = critic_value(critic, batch.joint_observations)  # (T, heads)
    if critic.num_heads == batch.num_agents:
        raw = returns - values.T
    elif critic.num_heads == 1:
        raw = returns - values[:, 0][None, :]
    else:
        raise ValueError(
            f"critic has {critic.num_heads} heads for {batch.num_agents} agents"
        )
    return (raw - raw.mean()) / (raw.std() + ADVANTAGE_EPS)


def policy_gradient_step(
    policy: PolicyParams,
    observations: np.ndarray,
    actions: np.ndarray,
    advantages: np.ndarray,
    bounds: ActionBounds,
    entropy_cfg: EntropyConfig,
    lr: float,
) -> PolicyParams:
    """One ascent step on mean[log pi * advantage] + mu * entropy.

    Returns a new parameter set; log-std stays within its clamp range.
    """
    T = observations.shape[0]
    if T == 0:
        raise ValueError("batch is empty")
    grad_w = np.zeros_like(policy.weights)
    grad_b = np.zeros_like(policy.bias)
    grad_ls = np.zeros_like(policy.log_std)
    for t in range(T):
        d_w, d_b, d_ls = log_prob_grads(policy, bounds, observations[t], actions[t])
        grad_w += d_w * advantages[t]
        grad_b += d_b * advantages[t]
        grad_ls += d_ls * advantages[t]
    grad_w /= T
    grad_b /= T
    grad_ls /= T
    grad_ls += entropy_cfg.mu  # d entropy / d log_std = 1 per dimension
    for g in (grad_w, grad_b, grad_ls):
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite policy gradient, rejecting update")
    return PolicyParams(
        weights=policy.weights + lr * grad_w,
        bias=policy.bias + lr * grad_b,
        log_std=policy.log_std + lr * grad_ls,
    )


def _scaled_errors(critic: Critic, v: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """Residuals (T, N) between scaled head outputs and scaled targets."""
    targets = (returns / critic.output_scale).T  # (T, N)
    if critic.num_heads == returns.shape[0]:
        return v - targets
    if critic.num_heads == 1:
        return v - targets  # (T, 1) broadcasts against (T, N)
    raise ValueError(f"critic has {critic.num_heads} heads for {returns.shape[0]} agents")


def critic_step(critic: Critic, batch: Batch):
    """One descent step on mean squared return error (in scaled value units).

    Returns (updated critic, scalar loss before the update).
    """
    if batch.size == 0:
        raise ValueError("batch is empty")
    returns = returns_matrix(batch, critic.discount)  # (N, T)
    n, t = returns.shape
    x = batch.joint_observations / critic.input_scale  # (T, in)
    z = x @ critic.w1.T + critic.b1
    h = np.tanh(z)  # (T, hidden)
    v = h @ critic.w2 + critic.b2  # (T, heads) in scaled units

    err = _scaled_errors(critic, v, returns)  # (T, N)
    loss = float(np.mean(err**2))
    if not np.isfinite(loss):
        raise ValueError("non-finite critic loss, rejecting update")

    if critic.num_heads == 1:
        d_v = (2.0 / (n * t)) * err.sum(axis=1, keepdims=True)  # (T, 1)
    else:
        d_v = (2.0 / (n * t)) * err  # (T, N)
    d_w2 = h.T @ d_v  # (hidden, heads)
    d_b2 = d_v.sum(axis=0)  # (heads,)
    d_h = d_v @ critic.w2.T  # (T, hidden)
    d_z = d_h * (1.0 - h**2)
    d_w1 = d_z.T @ x
    d_b1 = d_z.sum(axis=0)

    updated = Critic(
        w1=critic.w1 - critic.lr * d_w1,
        b1=critic.b1 - critic.lr * d_b1,
        w2=critic.w2 - critic.lr * d_w2,
        b2=critic.b2 - critic.lr * d_b2,
        lr=critic.lr,
        discount=critic.discount,
        input_scale=critic.input_scale,
        output_scale=critic.output_scale,
    )
    return updated, loss


def critic_loss(critic: Critic, batch: Batch) -> float:
    """Mean squared return error in scaled units, without updating
    (used by gradient checks)."""
    returns = returns_matrix(batch, critic.discount)
    v = critic_value(critic, batch.joint_observations) / critic.output_scale
    return float(np.mean(_scaled_errors(critic, v, returns) ** 2))


def policy_entropy(policy: PolicyParams) -> float:
    """Gaussian differential entropy of one agent's policy."""
    return entropy(policy)


def max_value_estimate(critic: Critic, batch: Batch) -> float:
    """Optimistic value proxy: mean critic value over the batch plus the
    best single-step reward observed."""
    if batch.size == 0:
        raise ValueError("batch is empty")
    values = critic_value(critic, batch.joint_observations)  # (T, heads)
    return float(np.mean(values) + np.max(batch.rewards))


def collect_trajectory(engine, horizon: int) -> Batch:
    """Roll the engine forward and return the recorded tuples as a Batch."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return engine.collect_batch(horizon)
