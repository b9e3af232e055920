"""
A short training run
====================

Train the CuRLA agent for a handful of episodes on a small circle, then
evaluate the final checkpoint and draw the metric charts. The full desk
profile is the same call with the default 400 episodes.
"""

from dataclasses import replace

from curdrive.config import desk_profile
from curdrive.curriculum import AgentVariant
from curdrive.harness import run_eval, run_training
from curdrive.plots import emit_plots
from curdrive.sim import EnvConfig
from curdrive.track import TrackSpec

config = replace(
    desk_profile("CuRLA"),
    variant=AgentVariant("CuRLA", switch_episode=10, total_episodes=20, traffic_max=2, traffic_ramp_episodes=5),
    env=EnvConfig(laps_to_finish=1),
    track=TrackSpec(shape="circle", radius=40.0),
    eval_every=5,
    output_dir="demo_output/curla_short",
)
result = run_training(config)
for rec in result.records:
    if rec.phase == "eval":
        print(f"eval @ {rec.episode:2d}: {rec.distance_pct:6.1f}% of a lap, {rec.avg_speed_kmh:5.1f} km/h, "
              f"traffic {rec.traffic_count}, {rec.termination_reason}")

for rec in run_eval(result.final_checkpoint, config, episodes=2, traffic_count=2):
    print(f"final policy with 2 vehicles: {rec.distance_pct:.1f}%, {rec.collision_count} contacts")

for path in emit_plots([result.out_dir], "demo_output/plots", smoothing=0.9):
    print("wrote", path)
