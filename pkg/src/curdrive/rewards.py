"""Per-step reward components for lane following.

Every function is pure and works on Python scalars or numpy arrays
(broadcasting elementwise). Scalars in, floats out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RewardParams:
    alpha_max: float = math.pi / 9  # 20 degrees
    d_max: float = 3.0  # meters
    v_min: float = 15.0  # km/h
    v_target: float = 60.0
    v_max: float = 105.0

    def __post_init__(self):
        if not (0 < self.v_min < self.v_target < self.v_max):
            raise ValueError("need 0 < v_min < v_target < v_max")
        if self.alpha_max <= 0 or self.d_max <= 0:
            raise ValueError("alpha_max and d_max must be positive")


DEFAULT_PARAMS = RewardParams()


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def angle_reward(alpha, params: RewardParams = DEFAULT_PARAMS):
    alpha = np.asarray(alpha, dtype=float)
    return _out(np.maximum(1.0 - np.abs(alpha / params.alpha_max), 0.0))


def centering_reward(d, params: RewardParams = DEFAULT_PARAMS):
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(d > params.d_max):
        raise ValueError(f"lateral offset must lie in [0, {params.d_max}]")
    return _out(1.0 - d / params.d_max)


def _check_speed(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("speed must be non-negative")
    return v


def speed_reward_original(v, params: RewardParams = DEFAULT_PARAMS):
    """Flat-top speed reward: ramps up to v_min, 1 up to v_target, then falls to 0 at v_max."""
    v = _check_speed(v)
    p = params
    falling = 1.0 - (v - p.v_target) / (p.v_max - p.v_target)
    r = np.where(v < p.v_min, v / p.v_min, np.where(v <= p.v_target, 1.0, falling))
    # above v_max the falling branch would go negative
    return _out(np.maximum(r, 0.0))


def speed_reward_revised(v, params: RewardParams = DEFAULT_PARAMS):
    """Peaked speed reward: half credit at v_min, rising linearly to 1 at v_target."""
    v = _check_speed(v)
    p = params
    # joins (v_min, 0.5) to (v_target, 1) so the curve is continuous
    rising = 1.0 - 0.5 * (p.v_target - v) / (p.v_target - p.v_min)
    falling = (p.v_max - v) / (p.v_max - p.v_target)
    r = np.where(v < p.v_min, 0.5 * v / p.v_min, np.where(v <= p.v_target, rising, falling))
    return _out(np.maximum(r, 0.0))


def collision_penalty(intensity):
    """Log-scaled penalty in [-1, 0]; zero for intensities up to 1."""
    ic = np.asarray(intensity, dtype=float)
    if np.any(ic < 0):
        raise ValueError("collision intensity must be non-negative")
    return _out(np.maximum(-1.0, -np.log10(np.maximum(1.0, ic))))


def composite_original(alpha, d, v, params: RewardParams = DEFAULT_PARAMS):
    return _out(
        np.asarray(angle_reward(alpha, params))
        * centering_reward(d, params)
        * speed_reward_original(v, params)
    )


def composite_revised(alpha, d, v, intensity, collision_term_enabled, params: RewardParams = DEFAULT_PARAMS):
    base = (
        np.asarray(angle_reward(alpha, params))
        * centering_reward(d, params)
        * speed_reward_revised(v, params)
    )
    penalty = collision_penalty(intensity)
    return _out(base + np.where(collision_term_enabled, penalty, 0.0))
