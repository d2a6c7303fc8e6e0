"""Composed step reward: cognitive term plus environment penalties.

The total reward is

    r = beta * y_hat                      (cognitive term, beta < 0)
      + r_collide * [collided]
      + omega * r_idle * [idle]
      + delta * r_gap

with r_gap = clamp(1 - |gap_time - gap_target| / gap_target, -1, 1).  With
beta = 0 the cognitive term contributes exactly 0.0 and the sum reduces
bit-for-bit to the environment-only reward, which is what the ablation
baseline trains on.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..sim.world import StepResult


@dataclass(frozen=True)
class RewardWeights:
    beta: float = -1.0
    r_collide: float = -100.0
    r_idle: float = -1.0
    omega: float = 1.0
    delta: float = 1.0
    gap_target: float = 2.0

    def __post_init__(self):
        if self.gap_target <= 0:
            raise ValueError("gap_target must be positive")


def gap_reward(gap_time: float, gap_target: float = 2.0,
               has_lead: bool = True) -> float:
    """Following-distance term, clamped to [-1, 1].

    Peaks at 1 when the time gap hits the target and falls off linearly.
    Without a lead vehicle there is no gap to regulate, so the term is 0
    rather than the large penalty the sentinel gap value would imply.
    """
    if not has_lead:
        return 0.0
    raw = 1.0 - abs(gap_time - gap_target) / gap_target
    return max(-1.0, min(1.0, raw))


def compose_reward(weights: RewardWeights, step: StepResult,
                   y_hat: float) -> tuple[float, dict]:
    """Total reward and its component breakdown for one step."""
    if not 0.0 <= y_hat <= 1.0:
        raise ValueError(f"y_hat must be in [0, 1], got {y_hat}")
    components = {
        "cog": weights.beta * y_hat,
        "collide": weights.r_collide if step.collided else 0.0,
        "idle": weights.omega * weights.r_idle if step.idle else 0.0,
        "gap": weights.delta * gap_reward(step.gap_time, weights.gap_target,
                                          step.has_lead),
    }
    total = (components["cog"] + components["collide"]
             + components["idle"] + components["gap"])
    return total, components
