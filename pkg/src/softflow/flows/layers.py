"""Invertible layers.

Convention: ``forward`` maps latent-side ``z`` to data-side ``x`` and returns
``log|det dx/dz|``; ``inverse`` goes the other way and returns the negated
quantity.  Log-dets are tensors broadcastable to ``x.shape[:-1]`` (one value
per point; a scalar when the Jacobian does not depend on the input).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .. import autograd as ag
from ..autograd import Tensor
from ..nn import GatedResidualNet, MaskedGatedNet, Module

S_MAX = 5.0


def squash(raw):
    """Bounded log-scale: ``S_MAX * tanh(raw / S_MAX)``."""
    return ag.tanh(raw * (1.0 / S_MAX)) * S_MAX


@dataclass
class ConditionVector:
    """Scaled noise condition plus an optional global latent.

    ``c_in`` is a scalar or an array broadcastable to ``x.shape[:-1] + (1,)``.
    ``global_cond`` is a tensor broadcastable against the hidden activations,
    e.g. ``(B, 1, dim_S)`` for point sets shaped ``(B, M, 3)``.
    """

    c_in: object = 0.0
    global_cond: Tensor | None = None

    def __post_init__(self):
        if self.c_in is not None and np.any(np.asarray(self.c_in) < 0):
            raise ValueError("c_in must be non-negative")

    def features(self, lead_shape):
        if self.c_in is None:
            return None
        c = np.asarray(self.c_in, dtype=np.float64)
        if c.ndim == len(lead_shape):
            c = c[..., None]
        return Tensor(np.broadcast_to(c, tuple(lead_shape) + (1,)))


def _cond_features(cond, lead_shape):
    return None if cond is None else cond.features(lead_shape)


class FlowLayer(Module):
    kind = "abstract"

    def forward(self, x, cond=None):
        raise NotImplementedError

    def inverse(self, y, cond=None):
        raise NotImplementedError


class ActNorm(FlowLayer):
    """``y = scale * (x + bias)`` per channel, scale stored as its log."""

    kind = "actnorm"

    def __init__(self, dim):
        super().__init__()
        self.dim = dim
        self.bias = ag.parameter(np.zeros(dim))
        self.logs = ag.parameter(np.zeros(dim))
        self.initialized = False

    @classmethod
    def from_scale(cls, scale, bias):
        scale = np.asarray(scale, dtype=np.float64)
        if np.any(scale == 0):
            raise ValueError("actnorm scale must be non-zero")
        if np.any(scale < 0):
            raise ValueError("actnorm scale is parameterised by its log; negative scale unsupported")
        layer = cls(scale.size)
        layer.logs.data = np.log(scale)
        layer.bias.data = np.asarray(bias, dtype=np.float64).copy()
        layer.initialized = True
        return layer

    @property
    def scale(self):
        return np.exp(self.logs.data)

    def forward(self, x, cond=None):
        y = (x + self.bias) * ag.exp(self.logs)
        return y, ag.sum(self.logs)

    def inverse(self, y, cond=None):
        x = y * ag.exp(-self.logs) - self.bias
        return x, -ag.sum(self.logs)

    def initialize(self, batch, direction="forward"):
        """Data-dependent init so that the ``direction`` pass standardises ``batch``."""
        arr = np.asarray(batch.data if isinstance(batch, Tensor) else batch, dtype=np.float64)
        arr = arr.reshape(-1, self.dim)
        if arr.shape[0] < 2:
            raise ValueError("actnorm init needs at least 2 samples")
        mu = arr.mean(axis=0)
        sd = arr.std(axis=0)
        if np.any(sd <= 1e-8):
            raise ValueError("actnorm init: degenerate batch (zero variance in some dimension)")
        if direction == "forward":
            self.bias.data = -mu
            self.logs.data = -np.log(sd)
        elif direction == "inverse":
            self.bias.data = mu / sd
            self.logs.data = np.log(sd)
        else:
            raise ValueError(f"unknown direction {direction!r}")
        self.initialized = True


def actnorm_init(batch, layer: ActNorm):
    layer.initialize(batch, "forward")


class InvConv1x1(FlowLayer):
    """Channel mixing ``y = W x`` with ``W = P L (U + diag(sign * exp(logs)))``."""

    kind = "inv1x1"

    def __init__(self, dim, rng=None):
        super().__init__()
        if rng is None:
            w = np.eye(dim)
        else:
            w, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        self._set_from_matrix(w)

    @classmethod
    def from_matrix(cls, w):
        w = np.asarray(w, dtype=np.float64)
        layer = cls(w.shape[0])
        layer._set_from_matrix(w)
        return layer

    def _set_from_matrix(self, w):
        d = w.shape[0]
        self.dim = d
        p, low, up = sla.lu(w)
        diag = np.diag(up)
        if np.any(diag == 0):
            raise ValueError("matrix is singular")
        self.perm = p
        self.sign = np.sign(diag)
        self.lmask = np.tril(np.ones((d, d)), -1)
        self.umask = np.triu(np.ones((d, d)), 1)
        self.lower = ag.parameter(low * self.lmask)
        self.upper = ag.parameter(up * self.umask)
        self.logs = ag.parameter(np.log(np.abs(diag)))

    def _factors(self):
        eye = np.eye(self.dim)
        low = self.lower * self.lmask + eye
        up = self.upper * self.umask + (ag.exp(self.logs) * self.sign) * eye
        return low, up

    def weight(self):
        low, up = self._factors()
        return Tensor(self.perm) @ low @ up

    def forward(self, x, cond=None):
        w = self.weight()
        return x @ ag.transpose(w), ag.sum(self.logs)

    def inverse(self, y, cond=None):
        low, up = self._factors()
        lead = y.shape[:-1]
        cols = ag.transpose(ag.reshape(y, (-1, self.dim)) @ Tensor(self.perm))
        t = ag.solve_triangular(low, cols, lower=True, unit_diagonal=True)
        t = ag.solve_triangular(up, t, lower=False)
        x = ag.reshape(ag.transpose(t), lead + (self.dim,))
        return x, -ag.sum(self.logs)


class AffineCoupling(FlowLayer):
    """Scale-and-shift half of the channels from the other half plus condition.

    ``parity`` 0 conditions on the first ``dim // 2`` channels, parity 1 on the
    last ``dim // 2``.
    """

    kind = "affine-coupling"

    def __init__(self, dim, hidden, n_layers, rng, parity=0, n_cond=1, kernel=1, n_global=0):
        super().__init__()
        if dim < 2:
            raise ValueError("coupling needs at least 2 channels")
        self.dim = dim
        self.parity = parity
        self.n_a = dim // 2
        self.n_b = dim - self.n_a
        self.n_cond = n_cond
        self.net = GatedResidualNet(self.n_a + n_cond, 2 * self.n_b, hidden, n_layers, rng,
                                    kernel=kernel, n_global=n_global)

    def _split(self, x):
        if self.parity == 0:
            return x[..., : self.n_a], x[..., self.n_a:]
        return x[..., self.n_b:], x[..., : self.n_b]

    def _join(self, a, b):
        return ag.concat([a, b] if self.parity == 0 else [b, a], axis=-1)

    def _params(self, xa, cond):
        feats = [xa]
        if self.n_cond:
            c = _cond_features(cond, xa.shape[:-1])
            if c is None:
                c = Tensor(np.zeros(xa.shape[:-1] + (self.n_cond,)))
            feats.append(c)
        inp = ag.concat(feats, axis=-1) if len(feats) > 1 else xa
        glob = None if cond is None else cond.global_cond
        out = self.net(inp, glob)
        return squash(out[..., : self.n_b]), out[..., self.n_b:]

    def forward(self, x, cond=None):
        xa, xb = self._split(x)
        s, t = self._params(xa, cond)
        yb = xb * ag.exp(s) + t
        return self._join(xa, yb), ag.sum(s, axis=-1)

    def inverse(self, y, cond=None):
        ya, yb = self._split(y)
        s, t = self._params(ya, cond)
        xb = (yb - t) * ag.exp(-s)
        return self._join(ya, xb), -ag.sum(s, axis=-1)


class Autoregressive(FlowLayer):
    """Per-coordinate affine map ``x_k = z_k * exp(s_k) + t_k`` with
    ``(s_k, t_k)`` functions of ``x_{<k}``, the noise condition and the global
    latent.  ``inverse`` (density direction) is one parallel pass; ``forward``
    (sampling direction) is serial over coordinates.
    """

    kind = "autoregressive"

    def __init__(self, dim, hidden, rng, n_cond=1, n_global=0):
        super().__init__()
        self.dim = dim
        self.n_cond = n_cond
        self.net = MaskedGatedNet(dim, n_cond, hidden, rng, n_global=n_global)

    def _inputs(self, x, cond):
        if not self.n_cond:
            return x
        c = _cond_features(cond, x.shape[:-1])
        if c is None:
            c = Tensor(np.zeros(x.shape[:-1] + (self.n_cond,)))
        return ag.concat([x, c], axis=-1)

    def _gterms(self, cond):
        return None if cond is None else self.net.global_terms(cond.global_cond)

    def inverse(self, x, cond=None):
        out = self.net(self._inputs(x, cond), self._gterms(cond))
        s = squash(out[..., : self.dim])
        t = out[..., self.dim:]
        z = (x - t) * ag.exp(-s)
        return z, -ag.sum(s, axis=-1)

    def forward(self, z, cond=None):
        d = self.dim
        gterms = self._gterms(cond)
        weights = self.net.masked_weights()
        zeros = Tensor(np.zeros(z.shape[:-1] + (1,)))
        cols = []
        logdet = None
        for k in range(d):
            cur = ag.concat(cols + [zeros] * (d - k), axis=-1)
            out = self.net(self._inputs(cur, cond), gterms, weights)
            s_k = squash(out[..., k:k + 1])
            t_k = out[..., d + k:d + k + 1]
            cols.append(z[..., k:k + 1] * ag.exp(s_k) + t_k)
            logdet = s_k if logdet is None else logdet + s_k
        return ag.concat(cols, axis=-1), ag.sum(logdet, axis=-1)


def actnorm_forward(x, layer):
    return layer.forward(x)


def inv1x1_forward(x, layer):
    return layer.forward(x)


def coupling_forward(x, cond, layer):
    return layer.forward(x, cond)


def autoregressive_forward(z, cond, layer):
    return layer.forward(z, cond)
