"""
PPO on a one-step bandit
========================

A single state, a one-dimensional action in [-1, 1] and reward equal to the
action. Each update consumes a full buffer of 128 one-step episodes; the
policy mean should drift toward +1.
"""

import numpy as np

from curdrive.ppo import GaussianPolicy, PpoHyper, RolloutBuffer, ValueFunction, make_adam_states, ppo_update

rng = np.random.default_rng(0)
hyper = PpoHyper(learning_rate=3e-3)
obs = np.ones(1)
policy = GaussianPolicy(1, 1, hidden=(16,), rng=rng)
value_fn = ValueFunction(1, hidden=(16,), rng=rng)
adam = make_adam_states(policy, value_fn)

for update in range(30):
    buf = RolloutBuffer(hyper.horizon, 1, 1)
    while not buf.full:
        action, u, logp = policy.sample(obs, rng)
        buf.add(obs, u, logp, float(action[0]), value_fn(obs), True)
    stats = ppo_update(policy, value_fn, buf, hyper, adam, rng)
    if update % 5 == 0 or update == 29:
        mean_action = float(policy.deterministic_action(obs)[0])
        print(f"update {update:2d}  mean action {mean_action:+.3f}  std {np.exp(policy.log_std[0]):.3f}  "
              f"clip fraction {stats['clip_fraction']:.2f}")
