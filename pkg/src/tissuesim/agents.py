"""Engineered-cell agents: observable state, health metrics, stochastic
action sampling, and action execution (secrete, move, amplify)."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .field import (
    ConcentrationField,
    FieldParams,
    SecretionProfile,
    gradient_value_at,
    secretion_at,
    value_at,
)
from .policy import ActionBounds, PolicyParams, sample_raw

OBS_DIM = 7  # concentration, gradient, five health metrics


@dataclass
class HealthMetrics:
    """The five per-agent health readouts."""

    atp: float = 0.0
    injury_gradient: float = 0.0
    secretion_rate: float = 0.0
    neural_coherence: float = 0.0
    oxidative_stress: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.atp,
                self.injury_gradient,
                self.secretion_rate,
                self.neural_coherence,
                self.oxidative_stress,
            ]
        )


@dataclass(frozen=True)
class Action:
    secrete_rate: float
    move_delta: float
    amplify_gain: float

    def as_array(self) -> np.ndarray:
        return np.array([self.secrete_rate, self.move_delta, self.amplify_gain])


@dataclass(frozen=True)
class NoiseConfig:
    """Standard deviations of the zero-mean action and observation noise."""

    action_noise: float = 0.1
    observation_noise: float = 0.05

    def __post_init__(self):
        if self.action_noise < 0 or self.observation_noise < 0:
            raise ValueError("noise scales must be >= 0")


@dataclass
class AgentState:
    """One agent: position, membrane potential, health, and policy."""

    id: int
    position: float
    policy: PolicyParams
    activation: float = 0.0
    health: HealthMetrics = dc_field(default_factory=HealthMetrics)
    last_action: Optional[Action] = None


def observe(
    agent: AgentState,
    field: ConcentrationField,
    params: FieldParams,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Local observation: concentration and gradient at the agent plus the
    five health metrics, with i.i.d. metabolic noise per component."""
    obs = np.empty(OBS_DIM)
    obs[0] = value_at(field, params, agent.position)
    obs[1] = gradient_value_at(field, params, agent.position)
    obs[2:] = agent.health.as_array()
    if noise.observation_noise > 0.0:
        obs = obs + noise.observation_noise * rng.standard_normal(OBS_DIM)
    return obs


def sample_action(
    agent: AgentState,
    observation: np.ndarray,
    bounds: ActionBounds,
    noise: NoiseConfig,
    rng: np.random.Generator,
    noise_rng: Optional[np.random.Generator] = None,
    deterministic: bool = False,
):
    """Sample an executable action.

    Draws from the Gaussian policy, adds chemotactic action noise, then
    clamps into the action box. Returns (action, draw) where draw is the
    policy's own pre-noise, pre-clamp sample: differentiating through the
    raw draw keeps the likelihood-ratio estimator unbiased (the
    environment's action noise is credited through advantages instead).
    A separate noise_rng may supply the action noise so that disabling it
    does not shift the policy-sampling stream.
    """
    if not agent.policy.is_finite():
        raise ValueError(f"agent {agent.id} has non-finite policy parameters")
    if observation.shape != (OBS_DIM,):
        raise ValueError(f"observation must have shape ({OBS_DIM},), got {observation.shape}")
    draw = sample_raw(agent.policy, bounds, observation, rng, deterministic=deterministic)
    executed = draw
    if noise.action_noise > 0.0 and not deterministic:
        zeta_rng = noise_rng if noise_rng is not None else rng
        executed = draw + noise.action_noise * zeta_rng.standard_normal(draw.shape)
    clamped = bounds.clamp(executed)
    action = Action(
        secrete_rate=float(clamped[0]),
        move_delta=float(clamped[1]),
        amplify_gain=float(clamped[2]),
    )
    return action, draw


def apply_action(
    agent: AgentState,
    action: Action,
    params: FieldParams,
    secretion_width: float,
) -> np.ndarray:
    """Execute an action: move (clamped to the grid) and deposit secretion.

    The secretion lands as a Gaussian bump centered on the new position,
    realizing the agent's source term of the chemical field. Returns the
    per-cell source contribution.
    """
    new_pos = min(max(agent.position + action.move_delta, params.grid_min), params.grid_max)
    agent.position = new_pos
    agent.last_action = action
    if action.secrete_rate == 0.0:
        return np.zeros(params.num_cells)
    bump = SecretionProfile(peak_rate=action.secrete_rate, center=new_pos, width=secretion_width)
    return secretion_at(bump, params.positions())


def update_health(
    agent: AgentState,
    field: ConcentrationField,
    params: FieldParams,
    all_activations: np.ndarray,
) -> HealthMetrics:
    """Refresh the health metrics from the field and the population state.

    Oxidative stress is a 0.99-decay running mean of |activation| and is the
    only path-dependent metric.
    """
    all_activations = np.asarray(all_activations, dtype=float)
    if all_activations.size >= 2:
        coherence = 1.0 - min(float(np.var(all_activations)), 1.0)
    else:
        coherence = 1.0  # a lone agent is trivially synchronized
    coherence = min(max(coherence, 0.0), 1.0)
    metrics = HealthMetrics(
        atp=value_at(field, params, agent.position),
        injury_gradient=abs(gradient_value_at(field, params, agent.position)),
        secretion_rate=agent.last_action.secrete_rate if agent.last_action else 0.0,
        neural_coherence=coherence,
        oxidative_stress=0.99 * agent.health.oxidative_stress + 0.01 * abs(agent.activation),
    )
    agent.health = metrics
    return metrics


def spawn_positions(n: int, spawn_min: float, spawn_max: float) -> np.ndarray:
    """Uniformly spaced positions across the spawn region."""
    if n == 1:
        return np.array([0.5 * (spawn_min + spawn_max)])
    return np.linspace(spawn_min, spawn_max, n)
