"""
Driving a lap on the desk track
===============================

Build the oval, let the proportional lane follower drive one lap and look at
the reward inputs the simulator reports along the way.
"""

from dataclasses import replace

import numpy as np

from curdrive.harness import scripted_action
from curdrive.sim import DrivingEnv, EnvConfig
from curdrive.track import TrackSpec, build_track, project

# two 100 m straights joined by 20 m half circles, waypoints every metre
track = build_track(TrackSpec(shape="oval", straight_length=100.0, radius=20.0))
print(f"{len(track)} waypoints, lap length {track.total_length:.1f} m")

# projection of a point 1.5 m left of the first straight
proj = project(track, (30.0, 1.5))
print(f"s = {proj.nearest_s:.2f} m, signed offset = {proj.signed_offset:+.2f} m")

# one lap at 40 km/h with a couple of vehicles ahead
env = DrivingEnv(replace(EnvConfig(), laps_to_finish=1, rng_seed=7), track)
state, traffic = env.reset(2, episode_index=0)
print("traffic at s =", [round(v.track_s, 1) for v in traffic])

offsets, speeds, contacts = [], [], 0
while True:
    out = env.step(scripted_action(env, target_speed=40.0))
    offsets.append(out.reward_inputs.d)
    speeds.append(out.reward_inputs.v)
    contacts += out.info["new_contacts"]
    if out.terminated:
        break

print(f"finished: {out.termination_reason} after {len(speeds)} steps ({out.info['episode_time']:.1f} s)")
print(f"max lateral offset {max(offsets):.2f} m, mean speed {np.mean(speeds):.1f} km/h, contacts {contacts}")
