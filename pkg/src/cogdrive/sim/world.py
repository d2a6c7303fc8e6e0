"""Two deterministic driving scenarios at 10 Hz.

``emergency_braking``: 1-D car following.  A lead vehicle cruises toward an
8 m/s cap and brakes hard at random 4-7 s intervals down to a sampled crawl
speed; the ego controls longitudinal acceleration only.  Each brake onset is
recorded as an event (with a severity derived from the ground-truth
time-to-collision at onset) so a synthetic EEG session can be locked to it.

``left_turn``: a planar intersection.  The ego follows a fixed route --
straight approach, quarter-circle left turn, then westbound lane -- while
oncoming traffic crosses at constant sampled speeds and never yields.  The
ego picks its speed along the route; collisions are disc-overlap tests.

Both scenarios are fully deterministic given a config (seed included) and an
action sequence.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .render import RenderScene, render_topdown

log = logging.getLogger(__name__)

VEHICLE_LENGTH = 4.5
VEHICLE_WIDTH = 2.0
LEAD_SPEED_CAP = 8.0        # m/s, lead never exceeds this
LEAD_CRUISE_ACCEL = 2.0     # m/s^2 toward the cap between brake events
LEAD_BRAKE_DECEL = 4.0      # m/s^2 during a brake event
BRAKE_INTERVAL = (4.0, 7.0)  # s between brake onsets
BRAKE_TARGET = (0.0, 2.0)    # m/s, sampled per event
IDLE_SPEED = 0.2            # m/s, strictly below means idle
TTC_MAX = 5.0               # s, clip ceiling for time-to-collision
GAP_TIME_NO_LEAD = 99.0     # sentinel when no lead vehicle exists

# Left-turn geometry: approach along x=0 from y=-28, quarter arc of radius 8
# centered at (-8,-8), then westbound along y=0.
LT_APPROACH = 20.0
LT_RADIUS = 8.0
LT_ARC = math.pi / 2.0 * LT_RADIUS
LT_TAIL = 30.0
LT_COLLISION_DIST = 3.5     # m between disc centers
LT_SPAWN_X = 15.0
LT_HEADWAY = (14.0, 34.0)   # m between spawned oncoming vehicles
LT_SPEED = (3.0, 5.0)       # m/s, constant per vehicle
LT_N_VEHICLES = 14
LT_LEAD_HORIZON = 60.0      # m, beyond this a merged ego has no lead


@dataclass
class ScenarioConfig:
    scenario: str
    dt: float = 0.1
    max_brake_decel: float = 4.0
    max_throttle_accel: float = 3.0
    route_length: float | None = None
    episode_cap: int = 600
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in ("emergency_braking", "left_turn"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.episode_cap <= 0:
            raise ValueError("episode_cap must be > 0")
        if self.route_length is None:
            self.route_length = 250.0 if self.scenario == "emergency_braking" \
                else LT_APPROACH + LT_ARC + LT_TAIL


@dataclass
class VehicleState:
    position: float
    speed: float
    length: float = VEHICLE_LENGTH
    heading: float = 0.0

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be >= 0")
        if self.length <= 0:
            raise ValueError("length must be > 0")


@dataclass
class StepResult:
    next_state: np.ndarray      # (3, 64, 64) uint8 frame stack
    collided: bool
    idle: bool
    ttc_truth: float
    gap_time: float
    route_progress: float
    done: bool
    # Extras beyond the core contract, used by reward composition and logs.
    has_lead: bool = True
    gap_m: float = 0.0
    speed: float = 0.0


@dataclass
class BrakeEvent:
    """Lead-vehicle brake onset, the trigger a synthetic EEG session locks to."""

    step: int
    time_s: float
    ttc_at_onset: float
    severity: float             # 1 - ttc/5: how critical the onset was


@dataclass
class TrafficState:
    """Lead-vehicle controller state for the car-following scenario."""

    mode: str = "cruise"        # "cruise" | "braking"
    target_speed: float = 0.0
    next_brake_time: float = 0.0
    last_interval: float = 0.0  # most recent sampled inter-onset interval


def compute_ttc(dis: float, v_ego: float, v_front: float) -> float:
    """Time-to-collision, clipped to [0, 5] s.

    When the ego is not closing (v_ego <= v_front) the geometric formula
    would degenerate, so the non-closing case returns the 5 s ceiling.
    """
    if dis < 0:
        raise ValueError(f"dis must be >= 0, got {dis}")
    if v_ego > v_front:
        return float(np.clip(dis / (v_ego - v_front), 0.0, TTC_MAX))
    return TTC_MAX


def traffic_controller(traffic: TrafficState, now: float,
                       rng: np.random.Generator) -> tuple[float, bool]:
    """Advance the lead controller; returns (acceleration, brake_onset).

    Cruise accelerates toward the 8 m/s cap; at each scheduled onset the lead
    brakes at 4 m/s^2 down to a freshly sampled target in [0, 2] m/s, and the
    next onset is drawn 4-7 s after the current one.
    """
    onset = False
    if traffic.mode == "cruise" and now >= traffic.next_brake_time:
        traffic.mode = "braking"
        traffic.target_speed = rng.uniform(*BRAKE_TARGET)
        traffic.last_interval = rng.uniform(*BRAKE_INTERVAL)
        traffic.next_brake_time = traffic.next_brake_time + \
            traffic.last_interval
        onset = True
    if traffic.mode == "braking":
        return -LEAD_BRAKE_DECEL, onset
    return LEAD_CRUISE_ACCEL, onset


class _BaseSim:
    """Shared plumbing: action clamping, frame stack, step bookkeeping."""

    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.done = True
        self._frames: deque = deque(maxlen=3)
        self.t = 0
        self.events: list[BrakeEvent] = []

    def _clamp_action(self, action: float) -> float:
        a = float(action)
        if not -1.0 <= a <= 1.0:
            log.warning("action %.3f outside [-1, 1]; clamped", a)
            a = float(np.clip(a, -1.0, 1.0))
        return a

    def _accel(self, action: float) -> float:
        return action * self.cfg.max_throttle_accel if action >= 0.0 \
            else action * self.cfg.max_brake_decel

    def _push_frame(self, frame: np.ndarray) -> None:
        self._frames.append(frame)

    def stacked(self) -> np.ndarray:
        return np.stack(self._frames).astype(np.uint8)

    def _require_running(self) -> None:
        if self.done:
            raise RuntimeError("step() called on a finished episode; "
                               "call reset() first")


def _eb_road_mask(px, py):
    return np.abs(py) <= 2.0


class EmergencyBrakingSim(_BaseSim):
    """1-D car following with a stochastically braking lead vehicle."""

    def __init__(self, config: ScenarioConfig):
        if config.scenario != "emergency_braking":
            raise ValueError("config.scenario must be 'emergency_braking'")
        super().__init__(config)

    def reset(self) -> np.ndarray:
        self._rng = np.random.default_rng(self.cfg.seed)
        self.ego = VehicleState(position=0.0, speed=0.0)
        gap0 = self._rng.uniform(12.0, 25.0)
        lead_v0 = self._rng.uniform(4.0, 8.0)
        self.lead = VehicleState(position=gap0 + VEHICLE_LENGTH,
                                 speed=lead_v0)
        self.traffic = TrafficState(
            next_brake_time=self._rng.uniform(*BRAKE_INTERVAL))
        self.t = 0
        self.done = False
        self.events = []
        frame = self._render()
        self._frames.clear()
        for _ in range(3):
            self._push_frame(frame)
        return self.stacked()

    def _render(self) -> np.ndarray:
        scene = RenderScene(
            ego_x=self.ego.position, ego_y=0.0, ego_heading=0.0,
            vehicles=[
                (self.ego.position, 0.0, 0.0, VEHICLE_LENGTH, VEHICLE_WIDTH),
                (self.lead.position, 0.0, 0.0, VEHICLE_LENGTH, VEHICLE_WIDTH),
            ],
            road_mask=_eb_road_mask)
        return render_topdown(scene)

    def gap(self) -> float:
        """Bumper-to-bumper distance ego front -> lead rear, in meters."""
        return self.lead.position - self.ego.position - VEHICLE_LENGTH

    def step(self, action: float) -> StepResult:
        self._require_running()
        a = self._clamp_action(action)
        dt = self.cfg.dt

        self.ego.speed = max(0.0, self.ego.speed + self._accel(a) * dt)
        self.ego.position += self.ego.speed * dt

        self.t += 1
        now = self.t * dt
        lead_accel, onset = traffic_controller(self.traffic, now, self._rng)
        self.lead.speed = float(np.clip(self.lead.speed + lead_accel * dt,
                                        0.0, LEAD_SPEED_CAP))
        if self.traffic.mode == "braking" and \
                self.lead.speed <= self.traffic.target_speed:
            self.traffic.mode = "cruise"
        self.lead.position += self.lead.speed * dt

        completed = self.ego.position >= self.cfg.route_length
        collided = False
        dis = self.gap()
        if not completed and dis <= 0.0:
            collided = True
            # Contact: the ego cannot pass through the lead.
            self.ego.position = self.lead.position - VEHICLE_LENGTH
            dis = 0.0

        ttc = compute_ttc(max(dis, 0.0), self.ego.speed, self.lead.speed)
        if onset:
            self.events.append(BrakeEvent(
                step=self.t, time_s=now, ttc_at_onset=ttc,
                severity=1.0 - ttc / TTC_MAX))
        idle = self.ego.speed < IDLE_SPEED
        gap_time = max(dis, 0.0) / max(self.ego.speed, 0.1)
        progress = min(self.ego.position / self.cfg.route_length, 1.0)
        self.done = completed or collided or self.t >= self.cfg.episode_cap

        self._push_frame(self._render())
        return StepResult(
            next_state=self.stacked(), collided=collided, idle=idle,
            ttc_truth=ttc, gap_time=gap_time, route_progress=progress,
            done=self.done, has_lead=True, gap_m=max(dis, 0.0),
            speed=self.ego.speed)


def _lt_road_mask(px, py):
    return (np.abs(py) <= 2.5) | ((np.abs(px) <= 2.5) & (py <= 2.5))


class LeftTurnSim(_BaseSim):
    """Unprotected left turn across a constant-speed oncoming stream."""

    def __init__(self, config: ScenarioConfig):
        if config.scenario != "left_turn":
            raise ValueError("config.scenario must be 'left_turn'")
        super().__init__(config)

    def reset(self) -> np.ndarray:
        self._rng = np.random.default_rng(self.cfg.seed)
        self.s = 0.0                      # arc length along the ego route
        self.speed = 0.0
        headways = self._rng.uniform(*LT_HEADWAY, size=LT_N_VEHICLES)
        xs = LT_SPAWN_X + np.concatenate([[0.0], np.cumsum(headways[:-1])])
        speeds = self._rng.uniform(*LT_SPEED, size=LT_N_VEHICLES)
        # A follower may never outrun its leader (front of the stream is the
        # smallest x), so the stream stays collision-free among itself.
        speeds = np.minimum.accumulate(speeds)
        self.oncoming_x = xs
        self.oncoming_v = speeds
        self.t = 0
        self.done = False
        self.events = []
        frame = self._render()
        self._frames.clear()
        for _ in range(3):
            self._push_frame(frame)
        return self.stacked()

    def ego_pose(self) -> tuple[float, float, float]:
        """Route parameterization: (x, y, heading) at the current arc length."""
        s = self.s
        if s <= LT_APPROACH:
            return 0.0, -28.0 + s, math.pi / 2.0
        if s <= LT_APPROACH + LT_ARC:
            phi = (s - LT_APPROACH) / LT_RADIUS
            return (-LT_RADIUS + LT_RADIUS * math.cos(phi),
                    -LT_RADIUS + LT_RADIUS * math.sin(phi),
                    math.pi / 2.0 + phi)
        d = s - LT_APPROACH - LT_ARC
        return -LT_RADIUS - d, 0.0, math.pi

    def merged(self) -> bool:
        return self.s >= LT_APPROACH + LT_ARC

    def _render(self) -> np.ndarray:
        x, y, h = self.ego_pose()
        vehicles = [(x, y, h, VEHICLE_LENGTH, VEHICLE_WIDTH)]
        for vx, _ in zip(self.oncoming_x, self.oncoming_v):
            vehicles.append((float(vx), 0.0, math.pi, VEHICLE_LENGTH,
                             VEHICLE_WIDTH))
        return render_topdown(RenderScene(ego_x=x, ego_y=y, ego_heading=h,
                                          vehicles=vehicles,
                                          road_mask=_lt_road_mask))

    def _ttc_truth(self) -> float:
        x, y, h = self.ego_pose()
        vx_ego = self.speed * math.cos(h)
        vy_ego = self.speed * math.sin(h)
        best = TTC_MAX
        for ox, ov in zip(self.oncoming_x, self.oncoming_v):
            rx, ry = ox - x, 0.0 - y
            dist = math.hypot(rx, ry)
            if dist < 1e-9:
                return 0.0
            closing = -((rx * (-ov - vx_ego)) + (ry * (0.0 - vy_ego))) / dist
            dis_eff = max(dist - LT_COLLISION_DIST, 0.0)
            best = min(best, compute_ttc(dis_eff, max(closing, 0.0), 0.0))
        return best

    def _lead(self) -> tuple[bool, float]:
        """(has_lead, bumper gap) to the nearest on-lane vehicle ahead."""
        if not self.merged():
            return False, GAP_TIME_NO_LEAD
        x, _, _ = self.ego_pose()
        ahead = [ox for ox in self.oncoming_x if ox < x]
        if not ahead:
            return False, GAP_TIME_NO_LEAD
        nearest = max(ahead)
        if x - nearest > LT_LEAD_HORIZON:
            return False, GAP_TIME_NO_LEAD
        return True, max(x - nearest - VEHICLE_LENGTH, 0.0)

    def step(self, action: float) -> StepResult:
        self._require_running()
        a = self._clamp_action(action)
        dt = self.cfg.dt

        self.speed = max(0.0, self.speed + self._accel(a) * dt)
        self.s += self.speed * dt
        self.oncoming_x = self.oncoming_x - self.oncoming_v * dt
        self.t += 1

        progress = min(self.s / self.cfg.route_length, 1.0)
        completed = self.s >= self.cfg.route_length
        collided = False
        if not completed:
            x, y, _ = self.ego_pose()
            for ox in self.oncoming_x:
                if math.hypot(ox - x, -y) < LT_COLLISION_DIST:
                    collided = True
                    break

        ttc = self._ttc_truth()
        has_lead, gap_m = self._lead()
        gap_time = gap_m / max(self.speed, 0.1) if has_lead \
            else GAP_TIME_NO_LEAD
        idle = self.speed < IDLE_SPEED
        self.done = completed or collided or self.t >= self.cfg.episode_cap

        self._push_frame(self._render())
        return StepResult(
            next_state=self.stacked(), collided=collided, idle=idle,
            ttc_truth=ttc, gap_time=gap_time, route_progress=progress,
            done=self.done, has_lead=has_lead,
            gap_m=gap_m if has_lead else GAP_TIME_NO_LEAD, speed=self.speed)


def make_sim(config: ScenarioConfig):
    """Instantiate the simulator named by ``config.scenario``."""
    if config.scenario == "emergency_braking":
        return EmergencyBrakingSim(config)
    if config.scenario == "left_turn":
        return LeftTurnSim(config)
    raise ValueError(f"unknown scenario {config.scenario!r}")
