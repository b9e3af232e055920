"""Episode-indexed schedule for traffic volume and collision-penalty gating.

Three agent variants are supported:

* ``SCA`` -- original reward, traffic at full volume throughout, no collision term.
* ``OneFoldCL`` -- revised reward, full traffic from episode 0, collision term
  switched on at ``switch_episode``.
* ``CuRLA`` -- revised reward, no traffic before ``switch_episode``, then a
  linear traffic ramp together with the collision term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import rewards
from .rewards import RewardParams

SCA = "SCA"
ONE_FOLD = "OneFoldCL"
CURLA = "CuRLA"
KINDS = (SCA, ONE_FOLD, CURLA)

# CLI / config spellings
_ALIASES = {"sca": SCA, "onefold": ONE_FOLD, "onefoldcl": ONE_FOLD, "one_fold": ONE_FOLD, "curla": CURLA}


def parse_kind(name: str) -> str:
    if name in KINDS:
        return name
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown agent variant {name!r}") from None


@dataclass(frozen=True)
class AgentVariant:
    kind: str = CURLA
    switch_episode: int = 1500
    total_episodes: int = 3500
    traffic_max: int = 6
    traffic_ramp_episodes: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_kind(self.kind))
        # a switch at or past the last episode is allowed: the run simply never switches
        if self.switch_episode < 1 or self.total_episodes < 1:
            raise ValueError("need switch_episode >= 1 and total_episodes >= 1")
        if self.traffic_ramp_episodes < 1:
            raise ValueError("traffic_ramp_episodes must be >= 1")
        if self.traffic_max < 0:
            raise ValueError("traffic_max must be >= 0")

    @property
    def reward_flavor(self) -> str:
        return "original" if self.kind == SCA else "revised"


def _check_episode(variant: AgentVariant, episode: int):
    if not (0 <= episode < variant.total_episodes):
        raise ValueError(f"episode {episode} outside [0, {variant.total_episodes})")


def traffic_count_for_episode(variant: AgentVariant, episode: int) -> int:
    _check_episode(variant, episode)
    if variant.kind != CURLA:
        return variant.traffic_max
    if episode < variant.switch_episode:
        return 0
    frac = min(1.0, (episode - variant.switch_episode + 1) / variant.traffic_ramp_episodes)
    # at least one vehicle from the switch onward, so traffic starts exactly there
    return min(variant.traffic_max, max(1, math.floor(variant.traffic_max * frac)))


def collision_penalty_enabled(variant: AgentVariant, episode: int) -> bool:
    _check_episode(variant, episode)
    if variant.kind == SCA:
        return False
    return episode >= variant.switch_episode


def reward_for_step(variant: AgentVariant, episode: int, alpha, d, v, intensity,
                    params: RewardParams = rewards.DEFAULT_PARAMS) -> float:
    if variant.kind == SCA:
        _check_episode(variant, episode)
        return rewards.composite_original(alpha, d, v, params)
    gate = collision_penalty_enabled(variant, episode)
    return rewards.composite_revised(alpha, d, v, intensity, gate, params)
