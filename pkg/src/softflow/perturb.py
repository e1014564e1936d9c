"""Training on noise-perturbed data with the noise level as a condition.

Each point gets its own noise level ``c ~ unif[a, b]`` and is perturbed by
``N(0, c^2 I)``; the flow is conditioned on ``c_in = scale * c``.  Sampling
fixes the condition to a small value (usually zero).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import NonFiniteError, Tensor, no_grad
from .flows.layers import ConditionVector
from .optim import Adam
from .toy import sample_toy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSchedule:
    a: float = 0.0
    b: float = 0.1
    scale: float = 20.0

    def __post_init__(self):
        if not (0 <= self.a <= self.b):
            raise ValueError(f"need 0 <= a <= b, got a={self.a}, b={self.b}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def max_scaled(cls, a, b, max_cond=2.0):
        """Schedule whose largest scaled condition equals ``max_cond``."""
        if b <= 0:
            return cls(a, b, 1.0)
        return cls(a, b, max_cond / b)

    @property
    def degenerate(self):
        return self.b == 0


@dataclass
class PerturbedBatch:
    x: np.ndarray
    noise: np.ndarray
    c: np.ndarray
    c_in: np.ndarray

    @property
    def x_perturbed(self):
        return self.x + self.noise


def perturb(x, sched: NoiseSchedule, rng):
    """Draw a noise level and a perturbation for every point (last axis = coords)."""
    x = np.asarray(x, dtype=np.float64)
    lead = x.shape[:-1]
    c = sched.a + (sched.b - sched.a) * rng.random(lead)
    noise = rng.standard_normal(x.shape) * c[..., None]
    return PerturbedBatch(x=x, noise=noise, c=c, c_in=sched.scale * c)


def softflow_loss(batch: PerturbedBatch, model):
    """Mean negative conditional log-likelihood of the perturbed points."""
    cond = ConditionVector(batch.c_in)
    return -ag.mean(model.log_prob(Tensor(batch.x_perturbed), cond))


def softflow_sample(n, c_sp, model, rng, sched: NoiseSchedule | None = None):
    """``n`` samples with the scaled condition ``scale * c_sp``."""
    scale = (sched or NoiseSchedule()).scale
    if n == 0:
        return np.zeros((0, model.dim))
    return model.sample(n, ConditionVector(np.full(n, scale * c_sp)), rng)


def fit(model, dataset, sched, steps, rng, batch_size=256, lr=1e-3, log_every=0, on_step=None,
        optimizer=None, start_step=0):
    """Minimise :func:`softflow_loss` on fresh batches from a toy distribution.

    Returns the per-step losses.  ``on_step(step, loss, optimizer)`` is
    called after each update.
    """
    opt = optimizer or Adam(model.parameters(), lr=lr)
    if start_step == 0:
        batch = perturb(sample_toy(dataset, 1024, rng), sched, rng)
        model.data_init(batch.x_perturbed, ConditionVector(batch.c_in))
    losses = []
    for step in range(start_step + 1, steps + 1):
        batch = perturb(sample_toy(dataset, batch_size, rng), sched, rng)
        opt.zero_grad()
        loss = softflow_loss(batch, model)
        if not np.isfinite(loss.data):
            raise NonFiniteError(f"non-finite loss at step {step}")
        ag.backward(loss)
        opt.step()
        losses.append(float(loss.data))
        if log_every and step % log_every == 0:
            log.info("step %d loss %.4f", step, losses[-1])
        if on_step is not None:
            on_step(step, losses[-1], opt)
    return losses


def density_grid(model, c_in, lim=4.0, n=400, chunk=20000):
    """Density on an ``n x n`` cell-centred grid over ``[-lim, lim]^2``.

    Returns ``(xs, density)`` with ``density`` shaped ``(n, n)`` (row = y).
    """
    h = 2 * lim / n
    xs = -lim + h * (np.arange(n) + 0.5)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.stack([gx.ravel(), gy.ravel()], 1)
    out = np.empty(len(pts))
    with no_grad():
        for i in range(0, len(pts), chunk):
            p = pts[i:i + chunk]
            out[i:i + chunk] = model.log_prob(Tensor(p), ConditionVector(np.full(len(p), c_in))).data
    return xs, np.exp(out).reshape(n, n)


def integrated_mass(model, c_in, lim=4.0, n=400):
    xs, dens = density_grid(model, c_in, lim, n)
    h = xs[1] - xs[0]
    return float(dens.sum() * h * h)
