"""Composition of invertible layers and standard-normal scoring."""
from __future__ import annotations

import math

import numpy as np

from .. import autograd as ag
from ..autograd import Tensor, no_grad
from ..nn import Module
from .layers import ActNorm, AffineCoupling, Autoregressive, InvConv1x1

LOG_2PI = math.log(2.0 * math.pi)


def std_normal_logprob(z, axis=-1):
    """Standard-normal log-density summed over ``axis``."""
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    d = int(np.prod([z.shape[a] for a in axes]))
    return ag.sum(z * z, axis=axes) * -0.5 - 0.5 * d * LOG_2PI


class FlowStack(Module):
    """Layers in generative order: ``x = f_n(...f_1(z))``."""

    def __init__(self, layers, dim):
        super().__init__()
        self.dim = dim
        self.layers = list(layers)

    @property
    def kinds(self):
        return [layer.kind for layer in self.layers]

    def forward(self, z, cond=None, per_layer=False):
        total = Tensor(np.zeros(z.shape[:-1]))
        parts = []
        h = z
        for layer in self.layers:
            h, ld = layer.forward(h, cond)
            parts.append(ld)
            total = total + ld
        return (h, total, parts) if per_layer else (h, total)

    def inverse(self, x, cond=None, per_layer=False):
        total = Tensor(np.zeros(x.shape[:-1]))
        parts = []
        h = x
        for layer in reversed(self.layers):
            h, ld = layer.inverse(h, cond)
            parts.append(ld)
            total = total + ld
        return (h, total, parts) if per_layer else (h, total)

    def log_prob(self, x, cond=None):
        """``log N(z; 0, I) - sum of forward log-dets`` with ``z`` the inverse image of ``x``."""
        x = ag.as_tensor(x)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got {x.shape}")
        z, ld = self.inverse(x, cond)
        return std_normal_logprob(z) + ld

    def sample(self, n, cond, rng):
        z = Tensor(rng.standard_normal((n, self.dim)))
        with no_grad():
            x, _ = self.forward(z, cond)
        return x.data

    def data_init(self, x, cond=None):
        """Initialise every actnorm so the density pass standardises ``x``."""
        h = ag.as_tensor(x)
        with no_grad():
            for layer in reversed(self.layers):
                if isinstance(layer, ActNorm):
                    layer.initialize(h, "inverse")
                h, _ = layer.inverse(h, cond)


def stack_logprob(x, cond, stack):
    return stack.log_prob(x, cond)


def stack_sample(n, cond, stack, rng):
    return stack.sample(n, cond, rng)


def glow_blocks(dim, n_blocks, rng, hidden=64, n_layers=2, n_cond=1, kernel=1, n_global=0,
                coupling="affine"):
    """Blocks of actnorm, 1x1 mixing and a coupling or AR layer.

    Built in density order (actnorm first on the data side) and returned in
    generative order.
    """
    density_order = []
    for i in range(n_blocks):
        density_order.append(ActNorm(dim))
        density_order.append(InvConv1x1(dim, rng))
        if coupling == "affine":
            density_order.append(AffineCoupling(dim, hidden, n_layers, rng, parity=i % 2,
                                                n_cond=n_cond, kernel=kernel, n_global=n_global))
        elif coupling == "autoregressive":
            density_order.append(Autoregressive(dim, hidden, rng, n_cond=n_cond, n_global=n_global))
        else:
            raise ValueError(f"unknown coupling kind {coupling!r}")
    return density_order[::-1]


def make_toy_flow(rng, n_blocks=8, hidden=64, n_layers=2, conditioned=True):
    """2-D conditional flow used by the toy experiments."""
    layers = glow_blocks(2, n_blocks, rng, hidden=hidden, n_layers=n_layers,
                         n_cond=1 if conditioned else 0)
    return FlowStack(layers, 2)
