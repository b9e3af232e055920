"""
Rasters and the observation VAE
===============================

Collect ego-centric frames from the scripted driver, train a small VAE on
them for a few epochs and compare a frame with its reconstruction.
"""

import numpy as np

from curdrive.config import desk_profile
from curdrive.harness import collect_frames
from curdrive.observation import Vae, vae_decode, vae_encode, vae_evaluate, vae_train

frames = collect_frames(desk_profile(), 120, seed=0)
print("frames:", frames.shape, "intensities:", np.unique(frames))

rng = np.random.default_rng(0)
train, val = frames[:100], frames[100:]
vae = Vae(z_dim=16, rng=rng)
print("initial validation BCE per frame:", round(vae_evaluate(vae, val)["bce"], 1))
vae, history = vae_train(train, vae, epochs=15, rng=rng, val_frames=val, lr=1e-3, batch_size=25)
for h in history[::5] + [history[-1]]:
    print(f"epoch {h['epoch']:2d}  val BCE {h['val_bce']:8.1f}  val KL {h['val_kl']:6.2f}")

mu, _ = vae_encode(val[0], vae)
recon = vae_decode(mu, vae).reshape(val[0].shape)
print("mean absolute reconstruction error:", round(float(np.abs(recon - val[0]).mean()), 3))
