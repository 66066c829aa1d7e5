"""Engine configuration: nested settings, JSON loading with field-level
diagnostics, and the reference experiment preset."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field as dc_field, fields
from pathlib import Path
from typing import Optional

from .agents import NoiseConfig
from .curriculum import CurriculumSchedule, ScenarioConfig
from .field import FieldParams, SecretionProfile
from .learning import EntropyConfig
from .policy import ActionBounds
from .reward import RewardCoefficients


class ConfigError(ValueError):
    """Invalid configuration; carries one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class RewardSettings:
    """Shaping coefficients plus the external-reward knobs."""

    coefficients: RewardCoefficients = dc_field(default_factory=RewardCoefficients)
    secretion_bonus: float = 0.5
    proximity_width: float = 0.5
    inflammation_weight: float = 0.0
    variance_window: int = 20

    def __post_init__(self):
        if self.variance_window < 1:
            raise ValueError(f"variance_window must be >= 1, got {self.variance_window}")
        if self.secretion_bonus < 0 or self.proximity_width <= 0:
            raise ValueError("secretion_bonus must be >= 0 and proximity_width > 0")
        if self.inflammation_weight < 0:
            raise ValueError("inflammation_weight must be >= 0")


@dataclass(frozen=True)
class CurriculumSettings:
    """Schedule endpoints and the difficulty-axis ranges they control.

    ramp_steps defaults to 70% of the run length when left unset.
    """

    start: float = 0.0
    end: float = 1.0
    ramp_steps: Optional[int] = None
    injury_near: float = 3.0
    injury_far: float = 5.0
    drift_speed: float = 0.05

    def __post_init__(self):
        if self.ramp_steps is not None and self.ramp_steps < 1:
            raise ValueError(f"ramp_steps must be >= 1, got {self.ramp_steps}")
        if self.drift_speed < 0:
            raise ValueError(f"drift_speed must be >= 0, got {self.drift_speed}")


@dataclass(frozen=True)
class HebbianSettings:
    learning_rate: float = 0.1
    decay: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.learning_rate <= 1.0):
            raise ValueError(f"learning_rate must be in [0, 1], got {self.learning_rate}")
        if not (0.0 <= self.decay <= 1.0):
            raise ValueError(f"decay must be in [0, 1], got {self.decay}")


@dataclass(frozen=True)
class LearningSettings:
    discount: float = 0.99
    policy_lr: float = 1e-3
    critic_lr: float = 1e-2
    episode_length: int = 200
    per_step_updates: bool = False
    critic_hidden: int = 64
    critic_epochs: int = 5
    critic_input_scale: float = 10.0
    critic_output_scale: float = 100.0
    policy_weight_scale: float = 0.0
    policy_std_fraction: float = 0.5
    policy_input_scale: float = 10.0

    def __post_init__(self):
        if not (0.0 <= self.discount < 1.0):
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if self.policy_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.episode_length < 1:
            raise ValueError(f"episode_length must be >= 1, got {self.episode_length}")
        if self.critic_hidden < 1 or self.critic_epochs < 1:
            raise ValueError("critic_hidden and critic_epochs must be >= 1")
        if self.critic_input_scale <= 0 or self.policy_input_scale <= 0:
            raise ValueError("input scales must be positive")
        if self.critic_output_scale <= 0:
            raise ValueError("critic_output_scale must be positive")
        if not (0.0 < self.policy_std_fraction <= 1.0):
            raise ValueError("policy_std_fraction must be in (0, 1]")


@dataclass(frozen=True)
class EngineConfig:
    num_agents: int = 10
    total_steps: int = 20_000
    seed: int = 0
    spawn_min: float = 0.0
    spawn_max: float = 2.0
    field: FieldParams = dc_field(default_factory=lambda: FieldParams(noise=0.05))
    secretion: SecretionProfile = dc_field(default_factory=SecretionProfile)
    noise: NoiseConfig = dc_field(default_factory=NoiseConfig)
    actions: ActionBounds = dc_field(default_factory=ActionBounds)
    reward: RewardSettings = dc_field(default_factory=RewardSettings)
    entropy: EntropyConfig = dc_field(default_factory=EntropyConfig)
    curriculum: CurriculumSettings = dc_field(default_factory=CurriculumSettings)
    hebbian: HebbianSettings = dc_field(default_factory=HebbianSettings)
    learning: LearningSettings = dc_field(default_factory=LearningSettings)

    def __post_init__(self):
        errors = []
        if self.num_agents < 1:
            errors.append(f"num_agents: must be >= 1, got {self.num_agents}")
        if self.total_steps < 1:
            errors.append(f"total_steps: must be >= 1, got {self.total_steps}")
        lo, hi = self.field.grid_min, self.field.grid_max
        if not (lo <= self.spawn_min <= self.spawn_max <= hi):
            errors.append(
                f"spawn: region [{self.spawn_min}, {self.spawn_max}] must lie within "
                f"the grid [{lo}, {hi}]"
            )
        if not (lo <= self.secretion.center <= hi):
            errors.append(f"secretion.center: {self.secretion.center} outside grid [{lo}, {hi}]")
        for name in ("injury_near", "injury_far"):
            v = getattr(self.curriculum, name)
            if not (lo <= v <= hi):
                errors.append(f"curriculum.{name}: {v} outside grid [{lo}, {hi}]")
        if errors:
            raise ConfigError(errors)

    def schedule(self) -> CurriculumSchedule:
        ramp = self.curriculum.ramp_steps
        if ramp is None:
            ramp = max(1, round(0.7 * self.total_steps))
        return CurriculumSchedule(
            start=self.curriculum.start, end=self.curriculum.end, ramp_steps=ramp
        )

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            injury_near=self.curriculum.injury_near,
            injury_far=self.curriculum.injury_far,
            drift_speed=self.curriculum.drift_speed,
            field_noise=self.field.noise,
        )


_SECTIONS = {
    "field": FieldParams,
    "secretion": SecretionProfile,
    "noise": NoiseConfig,
    "actions": ActionBounds,
    "entropy": EntropyConfig,
    "curriculum": CurriculumSettings,
    "hebbian": HebbianSettings,
    "learning": LearningSettings,
}

_TOP_LEVEL = ("num_agents", "total_steps", "seed", "spawn_min", "spawn_max")


def _build_section(cls, name: str, data: dict, errors: list):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        errors.append(f"{name}: unknown keys {sorted(unknown)}")
        data = {k: v for k, v in data.items() if k in known}
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        errors.append(f"{name}: {exc}")
        return cls()


def config_from_dict(data: dict) -> EngineConfig:
    """Build a validated EngineConfig, aggregating all field errors."""
    errors: list = []
    kwargs = {}
    reserved = set(_SECTIONS) | set(_TOP_LEVEL) | {"reward"}
    unknown = set(data) - reserved
    if unknown:
        errors.append(f"config: unknown keys {sorted(unknown)}")
    for key in _TOP_LEVEL:
        if key in data:
            kwargs[key] = data[key]
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, name, dict(data[name]), errors)
    if "reward" in data:
        rdata = dict(data["reward"])
        coeff_keys = {f.name for f in fields(RewardCoefficients)}
        coeffs = _build_section(
            RewardCoefficients, "reward", {k: rdata.pop(k) for k in list(rdata) if k in coeff_keys}, errors
        )
        settings = _build_section(RewardSettings, "reward", rdata, errors)
        kwargs["reward"] = RewardSettings(
            coefficients=coeffs,
            secretion_bonus=settings.secretion_bonus,
            proximity_width=settings.proximity_width,
            inflammation_weight=settings.inflammation_weight,
            variance_window=settings.variance_window,
        )
    try:
        config = EngineConfig(**kwargs)
    except ConfigError as exc:
        errors.extend(exc.errors)
        raise ConfigError(errors) from None
    except (TypeError, ValueError) as exc:
        errors.append(str(exc))
        raise ConfigError(errors) from None
    if errors:
        raise ConfigError(errors)
    return config


def config_to_dict(config: EngineConfig) -> dict:
    """Flat JSON-serializable mirror of the config (reward flattened)."""
    out = {key: getattr(config, key) for key in _TOP_LEVEL}
    for name in _SECTIONS:
        out[name] = asdict(getattr(config, name))
    reward = asdict(config.reward)
    coeffs = reward.pop("coefficients")
    out["reward"] = {**coeffs, **reward}
    return out


def load_config(path) -> EngineConfig:
    """Read a JSON config file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file is not valid JSON: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["config file must contain a JSON object"])
    return config_from_dict(data)


def paper_preset(total_steps: int = 20_000, seed: int = 0) -> EngineConfig:
    """The reference in-silico experiment: 10 agents, D=0.1, decay=0.01,
    unit-peak secretion targeted in [3, 5], betas (0.5, 0.3, 0.2), action
    noise 0.1, observation noise 0.05."""
    return EngineConfig(
        num_agents=10,
        total_steps=total_steps,
        seed=seed,
        field=FieldParams(diffusion=0.1, decay=0.01, noise=0.05),
        secretion=SecretionProfile(peak_rate=1.0, center=4.0, width=0.5),
        noise=NoiseConfig(action_noise=0.1, observation_noise=0.05),
        reward=RewardSettings(
            coefficients=RewardCoefficients(beta_chem=0.5, beta_sync=0.3, beta_robust=0.2)
        ),
        curriculum=CurriculumSettings(injury_near=3.0, injury_far=5.0),
    )
