"""Deterministic 2-D driving scenarios with a top-down semantic renderer."""

from .world import (
    ScenarioConfig,
    VehicleState,
    StepResult,
    BrakeEvent,
    TrafficState,
    EmergencyBrakingSim,
    LeftTurnSim,
    make_sim,
    compute_ttc,
    traffic_controller,
)
from .render import RenderScene, render_topdown, MPC, EGO_ROW, EGO_COL
from .logio import write_pgm, read_pgm, write_jsonl, read_jsonl

__all__ = [
    "ScenarioConfig",
    "VehicleState",
    "StepResult",
    "BrakeEvent",
    "TrafficState",
    "EmergencyBrakingSim",
    "LeftTurnSim",
    "make_sim",
    "compute_ttc",
    "traffic_controller",
    "RenderScene",
    "render_topdown",
    "MPC",
    "EGO_ROW",
    "EGO_COL",
    "write_pgm",
    "read_pgm",
    "write_jsonl",
    "read_jsonl",
]
