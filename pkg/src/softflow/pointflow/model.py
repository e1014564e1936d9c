"""Two-level point-set model: shape latent with a flow prior, and a
noise-conditioned autoregressive flow over individual points."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .. import autograd as ag
from ..autograd import NonFiniteError, Tensor, no_grad
from ..flows.layers import ConditionVector
from ..flows.multiscale import MultiScaleFlow
from ..flows.stack import LOG_2PI, FlowStack, glow_blocks, std_normal_logprob
from ..nn import Linear, Module
from ..optim import Adam
from ..perturb import NoiseSchedule, perturb
from .shapes import PointSet

log = logging.getLogger(__name__)

LOGVAR_MIN, LOGVAR_MAX = -10.0, 10.0

# full-size architecture, selectable through PointFlowConfig(**REFERENCE_SCALE)
REFERENCE_SCALE = dict(n_points=2048, prior_blocks=12, decoder_blocks=9, hidden=256)


@dataclass
class PointFlowConfig:
    n_points: int = 128
    latent_dim: int = 32
    prior_blocks: int = 4
    decoder_blocks: int = 4
    hidden: int = 64
    encoder_hidden: int = 64
    prior_layers: int = 4
    prior_kernel: int = 3
    a: float = 0.0
    b: float = 0.075
    max_condition: float = 2.0
    random_mixing: bool = True

    def schedule(self):
        return NoiseSchedule.max_scaled(self.a, self.b, self.max_condition)


@dataclass
class ShapeLatent:
    mu: Tensor
    logvar: Tensor
    s: Tensor

    def entropy(self):
        d = self.mu.shape[-1]
        return ag.sum(self.logvar, axis=-1) * 0.5 + 0.5 * d * (1.0 + LOG_2PI)


class SetEncoder(Module):
    """Shared per-point MLP, max-pool over points, Gaussian heads."""

    def __init__(self, latent_dim, hidden, rng, n_in=3):
        super().__init__()
        self.l1 = Linear(n_in, hidden, rng)
        self.l2 = Linear(hidden, hidden, rng)
        self.l3 = Linear(hidden, hidden, rng)
        self.mu = Linear(hidden, latent_dim, rng)
        self.logvar = Linear(hidden, latent_dim, rng)
        self.logvar.weight.data *= 0.1
        self.logvar.bias.data[:] = -4.0

    def __call__(self, x):
        h = ag.relu(self.l1(x))
        h = ag.relu(self.l2(h))
        h = self.l3(h)
        pooled = ag.max(h, axis=-2)
        return self.mu(pooled), ag.clip(self.logvar(pooled), LOGVAR_MIN, LOGVAR_MAX)


def _as_batch(xset):
    if isinstance(xset, PointSet):
        return xset.points[None]
    if isinstance(xset, (list, tuple)):
        return np.stack([p.points if isinstance(p, PointSet) else np.asarray(p) for p in xset])
    arr = np.asarray(xset.data if isinstance(xset, Tensor) else xset, dtype=np.float64)
    return arr[None] if arr.ndim == 2 else arr


class SoftPointFlow(Module):
    def __init__(self, config: PointFlowConfig | None = None, rng=None):
        super().__init__()
        cfg = config or PointFlowConfig()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.config = cfg
        self.encoder = SetEncoder(cfg.latent_dim, cfg.encoder_hidden, rng)
        self.prior = MultiScaleFlow(cfg.latent_dim, cfg.prior_blocks, rng, hidden=cfg.hidden,
                                    n_layers=cfg.prior_layers, kernel=cfg.prior_kernel)
        if not cfg.random_mixing:
            for stage in self.prior.stages:
                _reset_mixing(stage.layers)
        layers = glow_blocks(3, cfg.decoder_blocks, rng, hidden=cfg.hidden, n_cond=1,
                             n_global=cfg.latent_dim, coupling="autoregressive")
        if not cfg.random_mixing:
            _reset_mixing(layers)
        self.decoder = FlowStack(layers, 3)
        self.sched = cfg.schedule()

    # -- the pieces of the objective ----------------------------------------
    def encode(self, xset, rng=None, eps=None):
        x = Tensor(_as_batch(xset))
        mu, logvar = self.encoder(x)
        if eps is None:
            eps = np.zeros(mu.shape) if rng is None else rng.standard_normal(mu.shape)
        s = mu + ag.exp(logvar * 0.5) * Tensor(eps)
        return ShapeLatent(mu, logvar, s)

    def prior_logprob(self, s):
        s = s.s if isinstance(s, ShapeLatent) else s
        return self.prior.log_prob(s)

    def _decoder_cond(self, s, c_in):
        s = s.s if isinstance(s, ShapeLatent) else ag.as_tensor(s)
        glob = ag.reshape(s, (s.shape[0], 1, s.shape[1]))
        return ConditionVector(c_in, glob)

    def decoder_logprob(self, xset, s, rng, sched=None):
        """Mean per-point conditional log-likelihood of the perturbed points, per set."""
        sched = sched or self.sched
        x = _as_batch(xset)
        batch = perturb(x, sched, rng)
        cond = self._decoder_cond(s, batch.c_in)
        lp = self.decoder.log_prob(Tensor(batch.x_perturbed), cond)
        return ag.mean(lp, axis=-1)

    def elbo(self, xset, rng, sched=None):
        """Single-sample estimate of the per-set lower bound."""
        x = _as_batch(xset)
        lat = self.encode(x, rng)
        dec = self.decoder_logprob(x, lat, rng, sched) * float(x.shape[1])
        return dec + self.prior_logprob(lat) + lat.entropy()

    # -- sampling ------------------------------------------------------------
    def decode(self, s, n, c_sp, rng, sigma_z=1.0):
        s = ag.as_tensor(np.asarray(s.data if isinstance(s, Tensor) else s).reshape(1, -1))
        z = Tensor(sigma_z * rng.standard_normal((1, n, 3)))
        c_in = np.full((1, n), self.sched.scale * c_sp)
        with no_grad():
            x, _ = self.decoder.forward(z, self._decoder_cond(s, c_in))
        return x.data[0]

    def reconstruct(self, xset, n, c_sp=0.0, sigma_z=1.0, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        with no_grad():
            lat = self.encode(xset)
        pts = self.decode(lat.mu.data[0], n, c_sp, rng, sigma_z)
        src = xset if isinstance(xset, PointSet) else None
        return PointSet(pts, src.shape_id if src else "", dict(src.normalization) if src else
                        {"center": [0.0, 0.0, 0.0], "scale": 1.0})

    def generate(self, n_points, c_sp=0.0, rng=None, sigma_z=1.0):
        rng = rng if rng is not None else np.random.default_rng(0)
        s = self.prior.sample(1, rng)
        return PointSet(self.decode(s[0], n_points, c_sp, rng, sigma_z), "generated")

    def data_init(self, xset, rng):
        x = _as_batch(xset)
        with no_grad():
            lat = self.encode(x, rng)
            self.prior.data_init(lat.s)
            batch = perturb(x, self.sched, rng)
            self.decoder.data_init(Tensor(batch.x_perturbed), self._decoder_cond(lat.s, batch.c_in))


def _reset_mixing(layers):
    from ..flows.layers import InvConv1x1

    for layer in layers:
        if isinstance(layer, InvConv1x1):
            layer._set_from_matrix(np.eye(layer.dim))


def encode(xset, model, rng):
    return model.encode(xset, rng)


def prior_logprob(s, model):
    return model.prior_logprob(s)


def decoder_logprob(xset, s, sched, model, rng):
    return model.decoder_logprob(xset, s, rng, sched)


def elbo(xset, model, sched, rng):
    return model.elbo(xset, rng, sched)


def reconstruct(xset, n, c_sp, sigma_z, model, rng):
    return model.reconstruct(xset, n, c_sp, sigma_z, rng)


def generate(n_points, c_sp, model, rng):
    return model.generate(n_points, c_sp, rng)


def spread(points):
    """Mean distance of points from their centroid."""
    p = np.asarray(getattr(points, "points", points))
    return float(np.linalg.norm(p - p.mean(axis=0), axis=1).mean())


def fit(model, sampler, steps, rng, batch_size=8, lr=2e-3, decay_interval=0, on_step=None,
        optimizer=None, start_step=0):
    """Maximise the bound on batches from ``sampler(rng, batch_size) -> (B, M, 3)``.

    The loss is the negative bound divided by the points per set.
    """
    opt = optimizer or Adam(model.parameters(), lr=lr, decay_factor=0.5, decay_interval=decay_interval)
    if start_step == 0:
        model.data_init(sampler(rng, max(batch_size, 16)), rng)
    losses = []
    for step in range(start_step + 1, steps + 1):
        x = sampler(rng, batch_size)
        opt.zero_grad()
        loss = -ag.mean(model.elbo(x, rng)) * (1.0 / x.shape[1])
        if not np.isfinite(loss.data):
            raise NonFiniteError(f"non-finite loss at step {step}")
        ag.backward(loss)
        opt.step()
        losses.append(float(loss.data))
        if on_step is not None:
            on_step(step, losses[-1], opt)
    return losses


def std_normal_points_logprob(x):
    """Per-point standard-normal log-density in 3-D."""
    return std_normal_logprob(ag.as_tensor(x))


def gaussian_entropy(logvar):
    logvar = np.asarray(logvar, dtype=np.float64)
    return 0.5 * logvar.shape[-1] * (1.0 + math.log(2 * math.pi)) + 0.5 * logvar.sum(axis=-1)
