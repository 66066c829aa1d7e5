"""Diagonal-Gaussian action policy with a tanh-squashed affine mean.

The mean head maps an observation into the action box; a learned
per-dimension log standard deviation controls exploration. Keeping the
Gaussian on the raw (pre-clamp) action keeps log-likelihood gradients and
entropy in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

# differential entropy of a unit Gaussian: 0.5 * ln(2*pi*e)
_HALF_LOG_2PI_E = 0.5 * math.log(2.0 * math.pi * math.e)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ActionBounds:
    """Box bounds for the three actions: secretion rate, movement, gain."""

    secrete_max: float = 1.0
    max_step: float = 0.1
    gain_max: float = 2.0

    def __post_init__(self):
        if self.secrete_max <= 0 or self.max_step <= 0 or self.gain_max <= 0:
            raise ValueError("action bounds must be positive")

    @property
    def lows(self) -> np.ndarray:
        return np.array([0.0, -self.max_step, 0.0])

    @property
    def highs(self) -> np.ndarray:
        return np.array([self.secrete_max, self.max_step, self.gain_max])

    def clamp(self, raw: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(raw, self.lows), self.highs)


@dataclass
class PolicyParams:
    """Per-agent policy parameters: mean-head weights/bias and log-std.

    input_scale is a fixed preprocessing constant, scalar or per-component
    (observations are divided by it before the affine head) so
    concentration-scale inputs do not saturate the squashing nonlinearity;
    it is not learned.
    """

    weights: np.ndarray  # (act_dim, obs_dim)
    bias: np.ndarray  # (act_dim,)
    log_std: np.ndarray  # (act_dim,)
    input_scale: np.ndarray | float = 1.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        self.log_std = np.clip(np.asarray(self.log_std, dtype=float), LOG_STD_MIN, LOG_STD_MAX)
        if np.any(np.asarray(self.input_scale) <= 0):
            raise ValueError(f"input_scale must be positive, got {self.input_scale}")

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.weights))
            and np.all(np.isfinite(self.bias))
            and np.all(np.isfinite(self.log_std))
        )

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            self.weights.copy(), self.bias.copy(), self.log_std.copy(),
            np.array(self.input_scale, copy=True) if np.ndim(self.input_scale) else self.input_scale,
        )


def init_policy(
    obs_dim: int,
    bounds: ActionBounds,
    rng: np.random.Generator,
    weight_scale: float = 0.05,
    std_fraction: float = 0.25,
    input_scale=1.0,
) -> PolicyParams:
    """Small random mean head; initial std a fixed fraction of each action range."""
    act_dim = 3
    weights = weight_scale * rng.standard_normal((act_dim, obs_dim))
    bias = np.zeros(act_dim)
    log_std = np.log(std_fraction * (bounds.highs - bounds.lows))
    return PolicyParams(weights=weights, bias=bias, log_std=log_std, input_scale=input_scale)


def policy_mean(params: PolicyParams, bounds: ActionBounds, obs: np.ndarray) -> np.ndarray:
    """Squashed mean: tanh of the affine head, mapped into the action box."""
    m = np.tanh(params.weights @ (obs / params.input_scale) + params.bias)
    return bounds.lows + 0.5 * (m + 1.0) * (bounds.highs - bounds.lows)


def sample_raw(
    params: PolicyParams,
    bounds: ActionBounds,
    obs: np.ndarray,
    rng: np.random.Generator,
    deterministic: bool = False,
) -> np.ndarray:
    """Draw a raw (unclamped) action from the Gaussian policy.

    deterministic mode is the zero-std limit: it returns the mean without
    consuming the random stream.
    """
    mean = policy_mean(params, bounds, obs)
    if deterministic:
        return mean
    return mean + np.exp(params.log_std) * rng.standard_normal(mean.shape)


def log_prob(params: PolicyParams, bounds: ActionBounds, obs: np.ndarray, action: np.ndarray) -> float:
    """Log density of a raw action under the diagonal Gaussian policy."""
    mean = policy_mean(params, bounds, obs)
    std = np.exp(params.log_std)
    z = (action - mean) / std
    return float(np.sum(-params.log_std - _HALF_LOG_2PI - 0.5 * z**2))


def log_prob_grads(
    params: PolicyParams, bounds: ActionBounds, obs: np.ndarray, action: np.ndarray
):
    """Analytic gradients of log pi(action | obs) in all parameters.

    Returns (d_weights, d_bias, d_log_std) with the shapes of the
    corresponding parameter arrays.
    """
    scaled_obs = obs / params.input_scale
    z = params.weights @ scaled_obs + params.bias
    m = np.tanh(z)
    half_range = 0.5 * (bounds.highs - bounds.lows)
    mean = bounds.lows + (m + 1.0) * half_range
    std = np.exp(params.log_std)

    d_mean = (action - mean) / std**2
    d_z = d_mean * (1.0 - m**2) * half_range
    d_weights = np.outer(d_z, scaled_obs)
    d_bias = d_z
    d_log_std = ((action - mean) / std) ** 2 - 1.0
    return d_weights, d_bias, d_log_std


def entropy(params: PolicyParams) -> float:
    """Gaussian differential entropy summed over action dimensions."""
    return float(np.sum(params.log_std + _HALF_LOG_2PI_E))
