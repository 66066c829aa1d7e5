"""Shaped per-agent reward: external task term plus chemical-tracking,
synchronization, and robustness shaping.

The squared shaping terms are accumulated with plain sequential loops so
results are bit-identical to naive recomputation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

_CONVENTIONS = ("penalty", "literal")


@dataclass(frozen=True)
class RewardCoefficients:
    """Shaping weights and the sign convention used to combine them.

    The penalty convention treats the squared chem/sync terms as costs to
    minimize (matching their stated intent); the literal convention adds
    them with positive sign exactly as the combination formula is written.
    """

    beta_chem: float = 0.5
    beta_sync: float = 0.3
    beta_robust: float = 0.2
    sign_convention: str = "penalty"

    def __post_init__(self):
        for name in ("beta_chem", "beta_sync", "beta_robust"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.sign_convention not in _CONVENTIONS:
            raise ValueError(
                f"sign_convention must be one of {_CONVENTIONS}, got {self.sign_convention!r}"
            )


@dataclass(frozen=True)
class RewardBreakdown:
    external: float
    chem: float
    sync: float
    robust: float
    total: float


@dataclass(frozen=True)
class ExternalRewardConfig:
    """Knobs for the external task reward: normalized distance to the injury
    plus a proximity-gated secretion bonus, optionally an inflammation
    penalty on oxidative stress."""

    domain_length: float
    secretion_bonus: float = 0.5
    proximity_width: float = 0.5
    inflammation_weight: float = 0.0


def proximity(x: float, x_inj: float, width: float) -> float:
    """Gaussian closeness gate in (0, 1], equal to 1 at the injury site."""
    return math.exp(-((x - x_inj) ** 2) / (2.0 * width**2))


def external_reward(
    x: float,
    secrete_rate: float,
    x_inj: float,
    cfg: ExternalRewardConfig,
    oxidative_stress: float = 0.0,
) -> float:
    """Task reward in [-1, 1]: approach the injury, secrete when close."""
    r = -abs(x - x_inj) / cfg.domain_length
    r += cfg.secretion_bonus * secrete_rate * proximity(x, x_inj, cfg.proximity_width)
    if cfg.inflammation_weight:
        r -= cfg.inflammation_weight * oxidative_stress
    return min(max(r, -1.0), 1.0)


def chem_term(c_agent, c_injury) -> float:
    """Squared concentration mismatch between agent and injury positions,
    summed over species."""
    if not isinstance(c_agent, Sequence):
        c_agent, c_injury = (c_agent,), (c_injury,)
    acc = 0.0
    for ca, ci in zip(c_agent, c_injury):
        acc += (ca - ci) ** 2
    return acc


def sync_term(a_k: float, peer_activations) -> float:
    """Squared deviation of an agent's activation from each peer's."""
    acc = 0.0
    for a_q in peer_activations:
        acc += (a_k - a_q) ** 2
    return acc


def robust_term(action_window) -> float:
    """Negative population variance of the trailing activation window.

    A single sample has zero variance by definition.
    """
    n = len(action_window)
    if n == 0:
        raise ValueError("action window must contain at least one sample")
    if n == 1:
        return 0.0
    first = action_window[0]
    if all(v == first for v in action_window):
        return 0.0  # exactly zero for constant windows, no float residue
    mean = 0.0
    for v in action_window:
        mean += v
    mean /= n
    var = 0.0
    for v in action_window:
        var += (v - mean) ** 2
    var /= n
    return -var


def combine(
    external: float,
    chem: float,
    sync: float,
    robust: float,
    coeffs: RewardCoefficients,
) -> RewardBreakdown:
    """Recombine the components into the scalar reward under the active
    sign convention. robust already carries its minus sign."""
    for name, v in (("external", external), ("chem", chem), ("sync", sync), ("robust", robust)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite reward component {name}: {v}")
    if coeffs.sign_convention == "penalty":
        total = (
            external
            - coeffs.beta_chem * chem
            - coeffs.beta_sync * sync
            + coeffs.beta_robust * robust
        )
    else:
        total = (
            external
            + coeffs.beta_chem * chem
            + coeffs.beta_sync * sync
            + coeffs.beta_robust * robust
        )
    return RewardBreakdown(external=external, chem=chem, sync=sync, robust=robust, total=total)
