"""
Curriculum schedules
====================

Traffic volume and collision-penalty gating per episode for the three agent
variants, under the full-length and the desk profiles.
"""

from curdrive.config import desk_profile, paper_profile
from curdrive.curriculum import collision_penalty_enabled, traffic_count_for_episode

for profile in (paper_profile, desk_profile):
    for kind in ("SCA", "OneFoldCL", "CuRLA"):
        variant = profile(kind).variant
        marks = sorted({0, variant.switch_episode - 1, variant.switch_episode,
                        variant.switch_episode + variant.traffic_ramp_episodes // 2,
                        variant.switch_episode + variant.traffic_ramp_episodes - 1, variant.total_episodes - 1})
        row = ", ".join(
            f"{ep}:{traffic_count_for_episode(variant, ep)}{'p' if collision_penalty_enabled(variant, ep) else ''}"
            for ep in marks if ep < variant.total_episodes)
        print(f"{profile.__name__:14s} {kind:9s} {row}")

print("(episode:traffic, 'p' marks an active collision penalty)")
