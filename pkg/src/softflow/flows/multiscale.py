"""Multi-scale flow over a flat latent: squeeze to channels, factor out as we go."""
from __future__ import annotations

import numpy as np

from .. import autograd as ag
from ..autograd import Tensor, no_grad
from ..nn import Module
from .layers import ActNorm
from .stack import FlowStack, glow_blocks, std_normal_logprob


def squeeze(s, channels=8):
    """``(B, n) -> (B, n // channels, channels)``, consecutive entries share a position."""
    n = s.shape[-1]
    if n % channels:
        raise ValueError(f"latent length {n} is not divisible by {channels}")
    return ag.reshape(ag.as_tensor(s), s.shape[:-1] + (n // channels, channels))


def unsqueeze(h):
    return ag.reshape(h, h.shape[:-2] + (h.shape[-2] * h.shape[-1],))


def squeeze_factor(s, stage, channels=8, factor=2):
    """Squeeze ``s`` and split off ``factor * stage`` trailing channels.

    Returns ``(kept, factored)``; ``concat([kept, factored], -1)`` unsqueezed
    reproduces ``s``.
    """
    h = squeeze(s, channels)
    keep = channels - factor * stage
    if keep < 1:
        raise ValueError(f"stage {stage} factors out every channel")
    return h[..., :keep], h[..., keep:]


class MultiScaleFlow(Module):
    """Coupling flow on ``(B, L, C)`` with ``factor`` channels scored after every
    ``group`` blocks.  The full latent is the flat concatenation of each
    factored slab (in stage order) and the final slab.
    """

    def __init__(self, dim, n_blocks, rng, channels=8, group=4, factor=2, hidden=64,
                 n_layers=4, kernel=3):
        super().__init__()
        if dim % channels:
            raise ValueError(f"latent length {dim} is not divisible by {channels}")
        self.dim = dim
        self.channels = channels
        self.length = dim // channels
        self.factor = factor
        counts = []
        left = n_blocks
        while left > 0:
            counts.append(min(group, left))
            left -= group
        stages = []
        c = channels
        for i, nb in enumerate(counts):
            layers = glow_blocks(c, nb, rng, hidden=hidden, n_layers=n_layers, n_cond=0, kernel=kernel)
            stages.append(FlowStack(layers, c))
            if i < len(counts) - 1:
                c -= factor
                if c < 2:
                    raise ValueError("too many stages for the channel count")
        self.stages = stages
        self.widths = [st.dim for st in stages]

    def _slab_sizes(self):
        sizes = [self.length * self.factor] * (len(self.stages) - 1)
        sizes.append(self.length * self.widths[-1])
        return sizes

    def inverse(self, s):
        """Latent side ``z`` of ``s`` and ``log|det dz/ds|`` per row."""
        s = ag.as_tensor(s)
        h = squeeze(s, self.channels)
        total = Tensor(np.zeros(s.shape[:-1]))
        slabs = []
        for i, stage in enumerate(self.stages):
            h, ld = stage.inverse(h)
            total = total + ag.sum(ld, axis=-1)
            if i < len(self.stages) - 1:
                keep = h.shape[-1] - self.factor
                slabs.append(h[..., keep:])
                h = h[..., :keep]
        slabs.append(h)
        flat = [ag.reshape(sl, sl.shape[:-2] + (sl.shape[-2] * sl.shape[-1],)) for sl in slabs]
        return ag.concat(flat, axis=-1), total

    def forward(self, z):
        z = ag.as_tensor(z)
        lead = z.shape[:-1]
        sizes = self._slab_sizes()
        bounds = np.cumsum([0] + sizes)
        slabs = [z[..., bounds[i]:bounds[i + 1]] for i in range(len(sizes))]
        total = Tensor(np.zeros(lead))
        h = ag.reshape(slabs[-1], lead + (self.length, self.widths[-1]))
        for i in range(len(self.stages) - 1, -1, -1):
            if i < len(self.stages) - 1:
                fac = ag.reshape(slabs[i], lead + (self.length, self.factor))
                h = ag.concat([h, fac], axis=-1)
            h, ld = self.stages[i].forward(h)
            total = total + ag.sum(ld, axis=-1)
        return unsqueeze(h), total

    def log_prob(self, s):
        z, ld = self.inverse(s)
        return std_normal_logprob(z) + ld

    def scored_dims(self):
        return sum(self._slab_sizes())

    def sample(self, n, rng, sigma=1.0):
        z = Tensor(sigma * rng.standard_normal((n, self.dim)))
        with no_grad():
            s, _ = self.forward(z)
        return s.data

    def data_init(self, s):
        h = squeeze(ag.as_tensor(s), self.channels)
        with no_grad():
            for i, stage in enumerate(self.stages):
                for layer in reversed(stage.layers):
                    if isinstance(layer, ActNorm):
                        layer.initialize(h, "inverse")
                    h, _ = layer.inverse(h)
                if i < len(self.stages) - 1:
                    h = h[..., : h.shape[-1] - self.factor]
