"""Linear difficulty schedule and the injury-site targeting it drives."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CurriculumSchedule:
    """Linear ramp from start to end over ramp_steps steps, then flat."""

    start: float = 0.0
    end: float = 1.0
    ramp_steps: int = 1

    def __post_init__(self):
        if self.ramp_steps < 1:
            raise ValueError(f"ramp_steps must be >= 1, got {self.ramp_steps}")
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError("schedule endpoints must be finite")

    def fraction(self, value: float) -> float:
        """Normalized position of a target value within [start, end]."""
        if self.end == self.start:
            return 0.0
        return (value - self.start) / (self.end - self.start)


def target(schedule: CurriculumSchedule, t: float) -> float:
    """Difficulty target at step t: start + (end - start) * min(t / n, 1)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return schedule.start + (schedule.end - schedule.start) * min(t / schedule.ramp_steps, 1.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Difficulty-axis endpoints: where the injury sits at the easiest and
    hardest settings, how fast it may drift, and the field noise ceiling."""

    injury_near: float = 3.0
    injury_far: float = 5.0
    drift_speed: float = 0.05
    field_noise: float = 0.05


@dataclass(frozen=True)
class Scenario:
    """Concrete scenario knobs for one difficulty level."""

    injury_position: float
    drift_speed: float
    field_noise: float


def difficulty_to_scenario(
    value: float, schedule: CurriculumSchedule, cfg: ScenarioConfig
) -> Scenario:
    """Map a difficulty target onto the three scenario knobs, linearly.

    At the schedule floor the injury sits adjacent to the spawn region,
    static, with no field noise; at the ceiling it sits at the far end,
    drifting at full speed under full noise.
    """
    lo, hi = min(schedule.start, schedule.end), max(schedule.start, schedule.end)
    if not (lo <= value <= hi):
        raise ValueError(f"target {value} outside schedule range [{lo}, {hi}]")
    frac = schedule.fraction(value)
    return Scenario(
        injury_position=cfg.injury_near + frac * (cfg.injury_far - cfg.injury_near),
        drift_speed=frac * cfg.drift_speed,
        field_noise=frac * cfg.field_noise,
    )


def drift_injury(
    x_inj: float,
    gradient: float,
    wound_center: float,
    scenario: Scenario,
    dt: float,
    grid_min: float,
    grid_max: float,
) -> float:
    """Advance the injury marker one step of gradient-sign targeting.

    The marker chases the wound's chemical signature: it steps drift_speed*dt
    in the direction of the local concentration gradient, falling back to the
    direction of the wound center itself when the field is flat (e.g. before
    any chemical has arrived). Isolated here so the targeting rule can be
    swapped without touching the engine.
    """
    if scenario.drift_speed == 0.0:
        return x_inj
    if gradient != 0.0:
        direction = math.copysign(1.0, gradient)
    elif wound_center != x_inj:
        direction = math.copysign(1.0, wound_center - x_inj)
    else:
        return x_inj
    moved = x_inj + direction * scenario.drift_speed * dt
    return min(max(moved, grid_min), grid_max)
