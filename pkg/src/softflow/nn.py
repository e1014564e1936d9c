"""Parameter containers and the conditioner networks used inside flow layers."""
from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor


class Module:
    """Ordered registry of parameters and child modules.

    Parameters and children are registered in assignment order, which fixes
    the declaration order used by checkpoints.
    """

    def __init__(self):
        object.__setattr__(self, "_preg", {})
        object.__setattr__(self, "_creg", {})

    def __setattr__(self, key, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._preg[key] = value
        elif isinstance(value, Module):
            self._creg[key] = value
        elif isinstance(value, (list, tuple)) and value and all(isinstance(v, Module) for v in value):
            for i, v in enumerate(value):
                self._creg[f"{key}.{i}"] = v
        object.__setattr__(self, key, value)

    def named_parameters(self, prefix=""):
        for k, p in self._preg.items():
            yield prefix + k, p
        for k, child in self._creg.items():
            yield from child.named_parameters(prefix + k + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self):
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state):
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        if missing:
            raise KeyError(f"missing parameters in state: {sorted(missing)[:5]}")
        for k, p in own.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(f"{k}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None


def glorot(rng, fan_in, fan_out, shape=None):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape or (fan_in, fan_out))


class Linear(Module):
    def __init__(self, n_in, n_out, rng, zero=False, bias=True):
        super().__init__()
        w = np.zeros((n_in, n_out)) if zero else glorot(rng, n_in, n_out)
        self.weight = ag.parameter(w)
        if bias:
            self.bias = ag.parameter(np.zeros(n_out))
        else:
            self.bias = None

    def __call__(self, x):
        return ag.linear(x, self.weight, self.bias)


def gated(filt, gate):
    return ag.tanh(filt) * ag.sigmoid(gate)


def gated_pair(pre):
    """Gated-tanh unit on a fused ``[filter, gate]`` pre-activation."""
    return ag.gated_tanh(pre)


def _shift_stack(h, kernel):
    """im2col along axis -2 with zero padding: (B, L, C) -> (B, L, kernel*C)."""
    if kernel == 1:
        return h
    pad = kernel // 2
    b, length, c = h.shape
    zeros = Tensor(np.zeros((b, pad, c)))
    hp = ag.concat([zeros, h, zeros], axis=1)
    return ag.concat([hp[:, k:k + length, :] for k in range(kernel)], axis=-1)


class GatedResidualNet(Module):
    """Gated-tanh stack with residual and skip connections.

    ``tanh(W_f h + c_f) * sigmoid(W_g h + c_g)`` per layer, where ``c_*`` are
    optional projections of a global condition.  With ``kernel > 1`` the
    layers are 1-D convolutions over axis -2 of a channels-last input.  The
    output projection starts at zero so the enclosing layer is the identity.
    """

    def __init__(self, n_in, n_out, hidden, n_layers, rng, kernel=1, n_global=0):
        super().__init__()
        self.kernel = kernel
        self.n_layers = n_layers
        self.inp = Linear(n_in * kernel, hidden, rng)
        # filter and gate weights side by side: (in, 2 * hidden)
        self.fg = [Linear(hidden * kernel, 2 * hidden, rng) for _ in range(n_layers)]
        self.skip = [Linear(hidden, hidden, rng, bias=False) for _ in range(n_layers)]
        if n_global:
            self.gfg = [Linear(n_global, 2 * hidden, rng, bias=False) for _ in range(n_layers)]
        else:
            self.gfg = None
        self.out = Linear(hidden, n_out, rng, zero=True)

    def __call__(self, x, glob=None):
        k = self.kernel
        h = self.inp(_shift_stack(x, k))
        skip = None
        for i in range(self.n_layers):
            pre = self.fg[i](_shift_stack(h, k))
            if glob is not None and self.gfg is not None:
                pre = pre + self.gfg[i](glob)
            u = gated_pair(pre)
            h = h + u
            s = self.skip[i](u)
            skip = s if skip is None else skip + s
        return self.out(ag.tanh(skip))


class MaskedGatedNet(Module):
    """Three masked linear layers with gated-tanh units (MADE-style).

    Inputs are ``[x_1..x_D, cond...]``; data coordinate ``k`` has degree ``k``
    and condition features degree 0.  The output for coordinate ``k`` sees only
    hidden units of degree ``< k``, so it depends on ``x_{<k}``, the condition
    and the global vector, which enters through both gate branches.  Output
    layout is ``(..., 2*D)`` as ``[raw_scale(D), shift(D)]``.
    """

    def __init__(self, dim, n_cond, hidden, rng, n_global=0):
        super().__init__()
        self.dim = dim
        deg_in = np.concatenate([np.arange(1, dim + 1), np.zeros(n_cond, dtype=int)])
        deg_h = np.arange(hidden) % dim
        deg_out = np.tile(np.arange(1, dim + 1), 2)
        m1 = (deg_in[:, None] <= deg_h[None, :]).astype(float)
        m2 = (deg_h[:, None] <= deg_h[None, :]).astype(float)
        self.m1 = np.concatenate([m1, m1], axis=1)
        self.m2 = np.concatenate([m2, m2], axis=1)
        self.m3 = (deg_h[:, None] < deg_out[None, :]).astype(float)
        self.l1 = Linear(dim + n_cond, 2 * hidden, rng)
        self.l2 = Linear(hidden, 2 * hidden, rng)
        self.out = Linear(hidden, 2 * dim, rng, zero=True)
        self.n_global = n_global
        if n_global:
            self.g1 = Linear(n_global, 2 * hidden, rng, bias=False)
            self.g2 = Linear(n_global, 2 * hidden, rng, bias=False)

    def global_terms(self, glob):
        """Per-shape projections of the global vector, reusable across points."""
        if glob is None or not self.n_global:
            return None
        return self.g1(glob), self.g2(glob)

    def masked_weights(self):
        return (self.l1.weight * self.m1, self.l2.weight * self.m2, self.out.weight * self.m3)

    def __call__(self, x, gterms=None, weights=None):
        w1, w2, w3 = weights or self.masked_weights()
        pre = ag.linear(x, w1, self.l1.bias)
        if gterms is not None:
            pre = pre + gterms[0]
        h = gated_pair(pre)
        pre = ag.linear(h, w2, self.l2.bias)
        if gterms is not None:
            pre = pre + gterms[1]
        h = h + gated_pair(pre)
        return ag.linear(h, w3, self.out.bias)
