"""
The two speed rewards
=====================

The original speed reward is flat between v_min and v_target; the revised one
gives half credit at v_min and rises to a peak at v_target. Both are sampled
here and written out as SVG charts.
"""

from pathlib import Path

import numpy as np

from curdrive.plots import reward_curve_svgs
from curdrive.rewards import composite_revised, speed_reward_original, speed_reward_revised

for v in (0.0, 7.5, 15.0, 37.5, 60.0, 82.5, 105.0, 120.0):
    print(f"v = {v:6.1f} km/h   original {speed_reward_original(v):.3f}   revised {speed_reward_revised(v):.3f}")

# below the target the revised curve never exceeds the original one
v = np.linspace(0.0, 60.0, 601)
print("original >= revised on [0, 60]:", bool(np.all(speed_reward_original(v) >= speed_reward_revised(v))))

# a 10 km/h contact cancels a perfect step once the penalty is switched on
print("perfect step with contact:", composite_revised(0.0, 0.0, 60.0, 10.0, True))

out = Path("demo_output")
out.mkdir(exist_ok=True)
for name, svg in reward_curve_svgs().items():
    (out / name).write_text(svg)
    print("wrote", out / name)
