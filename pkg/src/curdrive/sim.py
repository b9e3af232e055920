"""Fixed-timestep 2D driving environment with a kinematic bicycle agent.

The environment only emits reward inputs (heading error, lateral offset,
speed, collision intensity); scoring is left to :mod:`curdrive.rewards` so a
trajectory can be re-scored under any reward variant.

Speeds on every public surface are km/h; kinematics integrate in m/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .track import Track, TrackProjection, heading_error, lap_progress, project, wrap_angle

KMH_PER_MS = 3.6

LAPS_DONE = "laps_done"
OFF_CENTER = "off_center"
STALLED = "stalled"
NONE = "none"


@dataclass(frozen=True)
class EnvConfig:
    dt: float = 0.05
    delta_max: float = 0.4  # rad
    a_max: float = 3.0  # m/s^2
    wheelbase: float = 2.5
    half_length: float = 2.25
    half_width: float = 1.0
    traffic_count: int = 0
    traffic_speed_min: float = 15.0  # km/h
    traffic_speed_max: float = 30.0
    low_speed_threshold: float = 1.0  # km/h
    low_speed_timeout: float = 5.0  # s
    off_center_limit: float = 3.0  # m
    laps_to_finish: int = 3
    min_separation: float = 10.0  # m, between traffic placements
    rng_seed: int = 0

    def __post_init__(self):
        if not (0 < self.dt <= 0.1):
            raise ValueError("dt must be in (0, 0.1]")
        if self.delta_max <= 0 or self.a_max <= 0 or self.wheelbase <= 0:
            raise ValueError("delta_max, a_max and wheelbase must be positive")
        if self.traffic_count < 0:
            raise ValueError("traffic_count must be >= 0")
        if not (0 <= self.traffic_speed_min <= self.traffic_speed_max):
            raise ValueError("need 0 <= traffic_speed_min <= traffic_speed_max")


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float  # km/h
    steering: float = 0.0
    acceleration: float = 0.0
    cumulative_distance: float = 0.0
    half_length: float = 2.25
    half_width: float = 1.0

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class TrafficVehicle:
    track_s: float
    speed: float  # km/h
    half_length: float = 2.25
    half_width: float = 1.0


@dataclass(frozen=True)
class RewardInputs:
    alpha: float
    d: float
    v: float
    collision_intensity: float


@dataclass(frozen=True)
class StepOutcome:
    reward_inputs: RewardInputs
    terminated: bool
    termination_reason: str
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EnvSnapshot:
    """Everything an observation builder needs about the current step."""

    agent: VehicleState
    traffic: tuple[TrafficVehicle, ...]
    projection: TrackProjection
    alpha: float
    track: Track
    config: EnvConfig


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def bicycle_step(state: VehicleState, action, dt: float, config: EnvConfig) -> VehicleState:
    """Advance the agent one step; ``action`` is ``(steer, throttle)`` in [-1, 1]."""
    steer = _clamp(float(action[0]), -1.0, 1.0)
    throttle = _clamp(float(action[1]), -1.0, 1.0)
    accel = throttle * config.a_max
    delta = steer * config.delta_max
    v = max(0.0, state.speed / KMH_PER_MS + accel * dt)
    heading = wrap_angle(state.heading + (v / config.wheelbase) * math.tan(delta) * dt)
    step = v * dt
    return replace(
        state,
        x=state.x + step * math.cos(heading),
        y=state.y + step * math.sin(heading),
        heading=heading,
        speed=v * KMH_PER_MS,
        steering=delta,
        acceleration=accel,
        cumulative_distance=state.cumulative_distance + step,
    )


def place_traffic(config: EnvConfig, track: Track, count: int, episode_index: int,
                  stream: int = 0) -> tuple[TrafficVehicle, ...]:
    """Deterministically scatter ``count`` vehicles around the loop.

    Every pair of vehicles (and the agent at s=0) is at least
    ``config.min_separation`` apart along the track. The draw depends only on
    ``(config.rng_seed, episode_index, stream)``.
    """
    if count < 0:
        raise ValueError("traffic count must be >= 0")
    if count == 0:
        return ()
    sep = config.min_separation
    length = track.total_length
    slack = length - (count + 1) * sep
    if slack < 0:
        raise ValueError(
            f"cannot place {count} vehicles {sep} m apart on a {length:.1f} m track"
        )
    rng = np.random.default_rng([config.rng_seed, episode_index, stream])
    offsets = np.sort(rng.uniform(0.0, slack, size=count))
    speeds = rng.uniform(config.traffic_speed_min, config.traffic_speed_max, size=count)
    return tuple(
        TrafficVehicle(float(sep * (i + 1) + offsets[i]), float(speeds[i]),
                       config.half_length, config.half_width)
        for i in range(count)
    )


def _box_axes(heading: float):
    c, s = math.cos(heading), math.sin(heading)
    return (c, s), (-s, c)


def boxes_overlap(a_center, a_heading, a_half, b_center, b_heading, b_half) -> bool:
    """Separating-axis test for two oriented rectangles; ``*_half`` = (half_length, half_width)."""
    dx = b_center[0] - a_center[0]
    dy = b_center[1] - a_center[1]
    a_axes = _box_axes(a_heading)
    b_axes = _box_axes(b_heading)
    for ax, ay in a_axes + b_axes:
        dist = abs(dx * ax + dy * ay)
        ra = sum(h * abs(ux * ax + uy * ay) for h, (ux, uy) in zip(a_half, a_axes))
        rb = sum(h * abs(ux * ax + uy * ay) for h, (ux, uy) in zip(b_half, b_axes))
        if dist > ra + rb:
            return False
    return True


def detect_collision(agent: VehicleState, traffic, track: Track, previous_overlap=None,
                     alpha: float | None = None):
    """Collision intensity for this step plus the per-vehicle overlap flags.

    The intensity is the closing speed (km/h, agent speed taken along the
    track) summed over vehicles whose contact *starts* this step. Continued
    overlap contributes nothing.
    """
    if previous_overlap is None:
        previous_overlap = (False,) * len(traffic)
    if alpha is None:
        alpha = heading_error(project(track, agent.position), agent.heading)
    along = agent.speed * math.cos(alpha)
    reach = math.hypot(agent.half_length, agent.half_width)
    intensity = 0.0
    flags = []
    for veh, was in zip(traffic, previous_overlap):
        x, y, h = track.point_at(veh.track_s)
        hit = False
        if math.hypot(x - agent.x, y - agent.y) <= reach + math.hypot(veh.half_length, veh.half_width):
            hit = boxes_overlap(agent.position, agent.heading, (agent.half_length, agent.half_width),
                                (x, y), h, (veh.half_length, veh.half_width))
        if hit and not was:
            intensity += abs(along - veh.speed)
        flags.append(hit)
    return intensity, tuple(flags)


def check_termination(state: VehicleState, d: float, low_speed_time: float, track: Track,
                      config: EnvConfig) -> tuple[bool, str]:
    """Laps completed, off-center, or stalled; collisions never end an episode."""
    if lap_progress(track, state.cumulative_distance) >= config.laps_to_finish:
        return True, LAPS_DONE
    if d > config.off_center_limit:
        return True, OFF_CENTER
    if low_speed_time >= config.low_speed_timeout - 1e-9:
        return True, STALLED
    return False, NONE


class DrivingEnv:
    """Single-owner, mutable environment. Not safe for concurrent stepping."""

    def __init__(self, config: EnvConfig, track: Track):
        self.config = config
        self.track = track
        self.state: VehicleState | None = None
        self.traffic: tuple[TrafficVehicle, ...] = ()
        self.terminated = True

    def reset(self, traffic_count: int | None = None, episode_index: int = 0, stream: int = 0):
        cfg = self.config
        count = cfg.traffic_count if traffic_count is None else traffic_count
        self.traffic = place_traffic(cfg, self.track, count, episode_index, stream)
        x, y, h = self.track.point_at(0.0)
        self.state = VehicleState(x, y, h, 0.0, half_length=cfg.half_length, half_width=cfg.half_width)
        self._overlap = (False,) * len(self.traffic)
        self._low_steps = 0
        self._steps = 0
        self._low_limit = math.ceil(cfg.low_speed_timeout / cfg.dt - 1e-9)
        self.projection = project(self.track, self.state.position)
        self.alpha = heading_error(self.projection, self.state.heading)
        self.terminated = False
        return self.state, self.traffic

    @property
    def episode_time(self) -> float:
        return self._steps * self.config.dt

    def snapshot(self) -> EnvSnapshot:
        return EnvSnapshot(self.state, self.traffic, self.projection, self.alpha, self.track, self.config)

    def step(self, action) -> StepOutcome:
        if self.terminated:
            raise RuntimeError("step() called on a terminated episode; call reset() first")
        cfg = self.config
        dt = cfg.dt
        self.state = bicycle_step(self.state, action, dt, cfg)
        length = self.track.total_length
        self.traffic = tuple(
            replace(v, track_s=(v.track_s + v.speed / KMH_PER_MS * dt) % length) for v in self.traffic
        )
        self._steps += 1
        self.projection = project(self.track, self.state.position)
        self.alpha = heading_error(self.projection, self.state.heading)
        intensity = 0.0
        new_contacts = 0
        if self.traffic:
            previous = self._overlap
            intensity, self._overlap = detect_collision(self.state, self.traffic, self.track,
                                                        previous, self.alpha)
            new_contacts = sum(now and not was for now, was in zip(self._overlap, previous))
        if self.state.speed < cfg.low_speed_threshold:
            self._low_steps += 1
        else:
            self._low_steps = 0
        # integer step count avoids float drift in the stall timer
        low_time = cfg.low_speed_timeout if self._low_steps >= self._low_limit else self._low_steps * dt
        d = self.projection.lateral_offset_d
        terminated, reason = check_termination(self.state, d, low_time, self.track, cfg)
        self.terminated = terminated
        info = {
            "lap_fraction": lap_progress(self.track, self.state.cumulative_distance),
            "cumulative_distance": self.state.cumulative_distance,
            "episode_time": self._steps * dt,
            "signed_offset": self.projection.signed_offset,
            "new_contacts": new_contacts,
        }
        return StepOutcome(RewardInputs(self.alpha, d, self.state.speed, intensity), terminated, reason, info)
