"""Policy observations: an ego-centric raster compressed by a VAE, or handcrafted features.

Either way the vector ends with the three normalized vehicle externals
``[acceleration / a_max, steering / delta_max, speed / v_max]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn import AdamState, Mlp, adam_step
from .rewards import RewardParams
from .sim import KMH_PER_MS, EnvSnapshot

LANE_VALUE = 0.5
CENTERLINE_VALUE = 0.8
TRAFFIC_VALUE = 1.0
GAP_SCALE = 50.0  # m
N_BYPASS = 6


@dataclass(frozen=True)
class RasterConfig:
    width: int = 40  # pixels across (lateral)
    height: int = 80  # pixels along (forward is up)
    ahead: float = 40.0  # m
    behind: float = 10.0
    lateral: float = 7.5  # half-width of the window, m
    centerline_width: float = 0.3  # half-width of the painted centerline, m

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def ego_grid(self):
        """Forward and left offsets (m) of every pixel center, shape (height, width)."""
        rows = (np.arange(self.height) + 0.5) / self.height
        cols = (np.arange(self.width) + 0.5) / self.width
        forward = self.ahead - rows * (self.ahead + self.behind)
        left = self.lateral - cols * 2.0 * self.lateral
        return np.meshgrid(forward, left, indexing="ij")


def rasterize(snapshot: EnvSnapshot, config: RasterConfig = RasterConfig()) -> np.ndarray:
    """Grayscale (height, width) frame in the agent's ego frame; row 0 is farthest ahead."""
    agent = snapshot.agent
    track = snapshot.track
    fwd, left = config.ego_grid()
    c, s = math.cos(agent.heading), math.sin(agent.heading)
    wx = agent.x + fwd * c - left * s
    wy = agent.y + fwd * s + left * c
    px = wx.ravel()
    py = wy.ravel()

    # segments too far away cannot be the nearest one for any lane pixel
    reach = math.hypot(max(config.ahead, config.behind), config.lateral)
    reach += track.lane_half_width + float(track.seg_len.max())
    near = np.hypot(track.points[:, 0] - agent.x, track.points[:, 1] - agent.y) <= reach
    frame = np.zeros(config.n_pixels)
    if near.any():
        p0 = track.points[near]
        v = track.seg_vec[near]
        l2 = track.seg_len[near] ** 2
        rx = px[:, None] - p0[None, :, 0]
        ry = py[:, None] - p0[None, :, 1]
        t = np.clip((rx * v[:, 0] + ry * v[:, 1]) / l2, 0.0, 1.0)
        dist = np.sqrt(((rx - t * v[:, 0]) ** 2 + (ry - t * v[:, 1]) ** 2).min(axis=1))
        frame[dist <= track.lane_half_width] = LANE_VALUE
        frame[dist <= config.centerline_width] = CENTERLINE_VALUE

    for veh in snapshot.traffic:
        x, y, h = track.point_at(veh.track_s)
        dx, dy = px - x, py - y
        along = dx * math.cos(h) + dy * math.sin(h)
        across = -dx * math.sin(h) + dy * math.cos(h)
        frame[(np.abs(along) <= veh.half_length) & (np.abs(across) <= veh.half_width)] = TRAFFIC_VALUE
    return frame.reshape(config.height, config.width)


def externals(snapshot: EnvSnapshot, params: RewardParams = RewardParams()) -> np.ndarray:
    agent, cfg = snapshot.agent, snapshot.config
    ext = np.array([agent.acceleration / cfg.a_max, agent.steering / cfg.delta_max, agent.speed * KMH_PER_MS / params.v_max])
    return np.clip(ext, -1.0, 1.0)


def bypass_features(snapshot: EnvSnapshot, params: RewardParams = RewardParams()) -> np.ndarray:
    """[signed d/d_max, sin alpha, cos alpha, v/v_max, gap/50 m, closing/v_max], all in [-1, 1]."""
    agent, track = snapshot.agent, snapshot.track
    alpha = snapshot.alpha
    gap, closing = 1.0, 0.0
    if snapshot.traffic:
        length = track.total_length
        s0 = snapshot.projection.nearest_s
        best = None
        for veh in snapshot.traffic:
            ahead = (veh.track_s - s0) % length - (agent.half_length + veh.half_length)
            ahead = max(ahead, 0.0)
            if best is None or ahead < best[0]:
                best = (ahead, veh)
        if best[0] < GAP_SCALE:
            gap = best[0] / GAP_SCALE
            closing = (agent.speed * KMH_PER_MS * math.cos(alpha) - best[1].speed) / params.v_max
    feats = np.array([
        snapshot.projection.signed_offset / params.d_max,
        math.sin(alpha),
        math.cos(alpha),
        agent.speed * KMH_PER_MS / params.v_max,
        gap,
        closing,
    ])
    return np.clip(feats, -1.0, 1.0)


# --------------------------------------------------------------------------- VAE


class Vae:
    """Fully-connected VAE over flattened rasters; the decoder ends in a sigmoid."""

    def __init__(self, n_pixels: int = 3200, z_dim: int = 64, hidden=(256, 128), kl_beta: float = 1.0,
                 rng: np.random.Generator | None = None, encoder: Mlp | None = None,
                 decoder: Mlp | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        hidden = tuple(hidden)
        self.encoder = encoder or Mlp((n_pixels, *hidden, 2 * z_dim), rng=rng)
        self.decoder = decoder or Mlp((z_dim, *hidden[::-1], n_pixels), rng=rng)
        if self.encoder.sizes[-1] != 2 * self.decoder.sizes[0] or self.encoder.sizes[0] != self.decoder.sizes[-1]:
            raise ValueError("encoder and decoder shapes are inconsistent")
        self.kl_beta = float(kl_beta)

    @property
    def z_dim(self) -> int:
        return self.decoder.sizes[0]

    @property
    def n_pixels(self) -> int:
        return self.encoder.sizes[0]

    @property
    def params(self) -> list[np.ndarray]:
        return self.encoder.params + self.decoder.params


def _flat(frames, n_pixels):
    x = np.asarray(frames, dtype=float)
    single = x.ndim <= 2 and x.size == n_pixels
    x = x.reshape(1 if single else len(x), -1)
    if x.shape[1] != n_pixels:
        raise ValueError(f"frame has {x.shape[1]} pixels, VAE expects {n_pixels}")
    return x, single


def vae_encode(frame, vae: Vae):
    x, single = _flat(frame, vae.n_pixels)
    out = vae.encoder(x)
    mu, log_var = out[:, :vae.z_dim], out[:, vae.z_dim:]
    return (mu[0], log_var[0]) if single else (mu, log_var)


def reparameterize(z_mu, z_log_var, noise):
    z_mu = np.asarray(z_mu, dtype=float)
    z_log_var = np.asarray(z_log_var, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if z_mu.shape != z_log_var.shape or z_mu.shape != noise.shape:
        raise ValueError("z_mu, z_log_var and noise must have equal shapes")
    return z_mu + np.exp(0.5 * z_log_var) * noise


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def vae_decode(z, vae: Vae):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != vae.z_dim:
        raise ValueError(f"latent has length {z.shape[-1]}, VAE expects {vae.z_dim}")
    return _sigmoid(vae.decoder(z))


def vae_loss(frame, recon, z_mu, z_log_var, kl_beta: float = 1.0) -> dict:
    """Summed-over-pixel BCE plus beta-weighted KL to N(0, I), for one frame or a batch (mean)."""
    x = np.asarray(frame, dtype=float)
    xh = np.asarray(recon, dtype=float).reshape(x.shape)
    if np.any(xh <= 0.0) or np.any(xh >= 1.0):
        raise ValueError("reconstruction probabilities must lie strictly inside (0, 1)")
    mu = np.atleast_2d(z_mu)
    lv = np.atleast_2d(z_log_var)
    n = len(mu)
    bce = -float(np.sum(x * np.log(xh) + (1.0 - x) * np.log1p(-xh))) / n
    kl = -0.5 * float(np.sum(1.0 + lv - mu * mu - np.exp(lv))) / n
    return {"total": bce + kl_beta * kl, "bce": bce, "kl": kl}


def vae_loss_and_grads(vae: Vae, frames, noise):
    """Batch-mean loss with fixed reparameterization noise, and gradients aligned with ``vae.params``."""
    x, _ = _flat(frames, vae.n_pixels)
    n = len(x)
    zd = vae.z_dim
    enc_out, ecache = vae.encoder.forward(x)
    mu, lv = enc_out[:, :zd], enc_out[:, zd:]
    sd = np.exp(0.5 * lv)
    z = mu + sd * noise
    logits, dcache = vae.decoder.forward(z)
    # BCE from logits: softplus(l) - x*l
    bce = float(np.sum(np.logaddexp(0.0, logits) - x * logits)) / n
    kl = -0.5 * float(np.sum(1.0 + lv - mu * mu - np.exp(lv))) / n
    d_logits = (_sigmoid(logits) - x) / n
    dec_grads, d_z = vae.decoder.backward(dcache, d_logits)
    beta = vae.kl_beta
    d_mu = d_z + beta * mu / n
    d_lv = d_z * 0.5 * sd * noise + beta * 0.5 * (np.exp(lv) - 1.0) / n
    enc_grads, _ = vae.encoder.backward(ecache, np.concatenate([d_mu, d_lv], axis=1))
    terms = {"total": bce + beta * kl, "bce": bce, "kl": kl}
    return terms, enc_grads + dec_grads


def vae_evaluate(vae: Vae, frames) -> dict:
    """Loss with z = z_mu (no sampling), averaged over frames."""
    x, _ = _flat(frames, vae.n_pixels)
    out = vae.encoder(x)
    mu, lv = out[:, :vae.z_dim], out[:, vae.z_dim:]
    logits = vae.decoder(mu)
    bce = float(np.sum(np.logaddexp(0.0, logits) - x * logits)) / len(x)
    kl = -0.5 * float(np.sum(1.0 + lv - mu * mu - np.exp(lv))) / len(x)
    return {"total": bce + vae.kl_beta * kl, "bce": bce, "kl": kl}


def vae_train(frames, vae: Vae, epochs: int, rng: np.random.Generator, val_frames=None,
              lr: float = 1e-4, batch_size: int = 100):
    """Minibatch Adam on the ELBO. Returns ``(vae, history)``; ``vae`` is updated in place.

    ``history`` has one dict per epoch with train/validation BCE and KL
    (validation uses z = z_mu; without ``val_frames`` it reuses the training set).
    """
    if len(frames) == 0:
        raise ValueError("empty training set")
    x = np.asarray(frames, dtype=float).reshape(len(frames), -1)
    if x.shape[1] != vae.n_pixels:
        raise ValueError(f"frames have {x.shape[1]} pixels, VAE expects {vae.n_pixels}")
    val = x if val_frames is None else _flat(val_frames, vae.n_pixels)[0]
    state = AdamState.like(vae.params)
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(x))
        sums = {"bce": 0.0, "kl": 0.0}
        for start in range(0, len(x), batch_size):
            batch = x[order[start:start + batch_size]]
            noise = rng.standard_normal((len(batch), vae.z_dim))
            terms, grads = vae_loss_and_grads(vae, batch, noise)
            adam_step(vae.params, grads, state, lr)
            for k in sums:
                sums[k] += terms[k] * len(batch)
        ev = vae_evaluate(vae, val)
        history.append({
            "epoch": epoch,
            "train_bce": sums["bce"] / len(x),
            "train_kl": sums["kl"] / len(x),
            "val_bce": ev["bce"],
            "val_kl": ev["kl"],
        })
    return vae, history


# --------------------------------------------------------------------------- assembly


def observation_size(mode: str, z_dim: int = 64) -> int:
    return (z_dim if mode == "vae" else N_BYPASS) + 3


def build_observation(snapshot: EnvSnapshot, vae: Vae | None = None, sampled: bool = False,
                      rng: np.random.Generator | None = None, raster: RasterConfig = RasterConfig(),
                      params: RewardParams = RewardParams()) -> np.ndarray:
    """Observation vector; ``vae=None`` selects the handcrafted bypass features."""
    if vae is None:
        head = bypass_features(snapshot, params)
    else:
        mu, log_var = vae_encode(rasterize(snapshot, raster), vae)
        if sampled:
            if rng is None:
                raise ValueError("sampled latents need an rng")
            head = reparameterize(mu, log_var, rng.standard_normal(mu.shape))
        else:
            head = mu
    return np.concatenate([head, externals(snapshot, params)])
