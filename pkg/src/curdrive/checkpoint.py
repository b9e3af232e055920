"""Versioned flat-binary checkpoints shared by the policy and the VAE.

Layout (little-endian)::

    magic      4 bytes  b"DRVK"
    version    u32      1
    kind       u32      1 = policy/value, 2 = VAE
    n_nets     u32
    per net:   u32 n_sizes, then n_sizes x u32 layer sizes
    n_extra    u32
    payload    float64: for each net, W0, b0, W1, b1, ... (row-major), then the extras

Policy checkpoints hold ``[mean_net, value_net]`` and the log-std vector as
extras. VAE checkpoints hold ``[encoder, decoder]`` and ``[kl_beta]``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .nn import Mlp
from .observation import Vae
from .ppo import GaussianPolicy, ValueFunction

MAGIC = b"DRVK"
VERSION = 1
KIND_POLICY = 1
KIND_VAE = 2


class CheckpointError(ValueError):
    pass


def encode(kind: int, nets, extras) -> bytes:
    header = [MAGIC, struct.pack("<III", VERSION, kind, len(nets))]
    payload = []
    for net in nets:
        header.append(struct.pack("<I", len(net.sizes)))
        header.append(struct.pack(f"<{len(net.sizes)}I", *net.sizes))
        payload.extend(np.ascontiguousarray(p, dtype="<f8").ravel() for p in net.params)
    extras = np.asarray(extras, dtype="<f8").ravel()
    header.append(struct.pack("<I", len(extras)))
    payload.append(extras)
    return b"".join(header) + b"".join(p.tobytes() for p in payload)


def decode(blob: bytes):
    """Return ``(kind, [Mlp, ...], extras)``."""
    if blob[:4] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    try:
        version, kind, n_nets = struct.unpack_from("<III", blob, 4)
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        off = 16
        all_sizes = []
        for _ in range(n_nets):
            (n,) = struct.unpack_from("<I", blob, off)
            off += 4
            all_sizes.append(struct.unpack_from(f"<{n}I", blob, off))
            off += 4 * n
        (n_extra,) = struct.unpack_from("<I", blob, off)
        off += 4
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint header: {exc}") from None
    values = np.frombuffer(blob, dtype="<f8", offset=off).astype(float)
    nets, pos = [], 0
    for sizes in all_sizes:
        weights, biases = [], []
        for a, b in zip(sizes[:-1], sizes[1:]):
            if pos + a * b + b > len(values):
                raise CheckpointError("truncated checkpoint payload")
            weights.append(values[pos:pos + a * b].reshape(a, b))
            pos += a * b
            biases.append(values[pos:pos + b])
            pos += b
        nets.append(Mlp(sizes, weights=weights, biases=biases))
    if len(values) - pos != n_extra:
        raise CheckpointError("checkpoint payload length does not match its header")
    return kind, nets, values[pos:].copy()


def save_policy(path, policy: GaussianPolicy, value_fn: ValueFunction):
    Path(path).write_bytes(encode(KIND_POLICY, [policy.mean_net, value_fn.value_net], policy.log_std))


def load_policy(path) -> tuple[GaussianPolicy, ValueFunction]:
    kind, nets, extras = decode(Path(path).read_bytes())
    if kind != KIND_POLICY or len(nets) != 2:
        raise CheckpointError(f"{path} is not a policy checkpoint")
    mean_net, value_net = nets
    if len(extras) != mean_net.sizes[-1] or value_net.sizes[0] != mean_net.sizes[0]:
        raise CheckpointError("policy checkpoint shapes are inconsistent")
    return GaussianPolicy(mean_net.sizes[0], mean_net=mean_net, log_std=extras), ValueFunction(0, value_net=value_net)


def save_vae(path, vae: Vae):
    Path(path).write_bytes(encode(KIND_VAE, [vae.encoder, vae.decoder], [vae.kl_beta]))


def load_vae(path) -> Vae:
    kind, nets, extras = decode(Path(path).read_bytes())
    if kind != KIND_VAE or len(nets) != 2 or len(extras) != 1:
        raise CheckpointError(f"{path} is not a VAE checkpoint")
    encoder, decoder = nets
    return Vae(encoder=encoder, decoder=decoder, kl_beta=float(extras[0]))
