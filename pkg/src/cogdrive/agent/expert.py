"""Scripted longitudinal controller used as the demonstration source."""

from __future__ import annotations

EXPERT_BRAKE_TTC = 1.5
EXPERT_GAP_TARGET = 2.0
EXPERT_GAIN = 0.5


def scripted_expert(gap_time: float, ttc_truth: float, speed: float) -> float:
    """Full brake under an imminent TTC, else regulate the 2 s time gap.

    ``speed`` is part of the step interface for symmetry with learned
    policies; the rule itself only needs the two time quantities.
    """
    del speed
    if ttc_truth < EXPERT_BRAKE_TTC:
        return -1.0
    raw = EXPERT_GAIN * (gap_time - EXPERT_GAP_TARGET)
    return max(-1.0, min(1.0, raw))


def expert_step_action(prev) -> float:
    """Adapter for rollouts: previous StepResult (or None at reset) -> action.

    Before the first step there is nothing to regulate against, so the
    controller simply accelerates from rest.
    """
    if prev is None:
        return 1.0
    return scripted_expert(prev.gap_time, prev.ttc_truth, prev.speed)
