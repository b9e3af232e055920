"""Small fully-connected networks with hand-written backprop, plus Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Mlp:
    """Affine layers with tanh between them and an identity output.

    Weights are stored as ``(fan_in, fan_out)`` matrices so a batch of row
    vectors maps as ``x @ W + b``. All arrays are float64.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None, output_scale: float = 1.0,
                 weights=None, biases=None):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError(f"invalid layer sizes {sizes}")
        n_layers = len(self.sizes) - 1
        if weights is not None:
            self.weights = [np.array(w, dtype=float) for w in weights]
            self.biases = [np.array(b, dtype=float) for b in biases]
            for i, (w, b) in enumerate(zip(self.weights, self.biases)):
                if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                    raise ValueError(f"layer {i} shape mismatch")
            return
        rng = np.random.default_rng(0) if rng is None else rng
        self.weights, self.biases = [], []
        for i in range(n_layers):
            fan_in, fan_out = self.sizes[i], self.sizes[i + 1]
            w = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
            if i == n_layers - 1:
                w *= output_scale
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, weights=self.weights, biases=self.biases)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.sizes[0]:
            raise ValueError(f"expected input width {self.sizes[0]}, got {h.shape[1]}")
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.tanh(h)
            acts.append(h)
        out = h[0] if single else h
        return out, (single, acts)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out):
        """Gradients of ``sum(grad_out * output)`` w.r.t. params and input."""
        if cache is None:
            raise ValueError("backward needs the cache returned by forward")
        single, acts = cache
        g = np.asarray(grad_out, dtype=float)
        if single:
            g = g[None, :]
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i < last:
                g = g * (1.0 - acts[i + 1] ** 2)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, (g[0] if single else g)


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, lr: float):
    """In-place bias-corrected Adam descent step; returns ``params``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and Adam moments must have equal length")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params
