"""Continuous normalizing flow in 2-D with an exact Jacobian trace.

The velocity field is a small tanh MLP taking ``(z, t, c_in)``; time and
condition are concatenated to the input of every layer.  The divergence is
computed exactly by pushing one tangent per state dimension through the
network, so gradients of the log-likelihood come straight off the tape
(backprop through the unrolled RK4 solver).
"""
from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import NonFiniteError, Tensor, no_grad
from .flows.layers import ConditionVector
from .flows.stack import std_normal_logprob
from .nn import Linear, Module


def _cond_array(cond, n):
    if cond is None:
        return np.zeros((n, 1))
    c = cond.c_in if isinstance(cond, ConditionVector) else cond
    c = np.asarray(0.0 if c is None else c, dtype=np.float64)
    return np.broadcast_to(c.reshape(-1, 1) if c.ndim else c, (n, 1)).copy()


class VelocityField(Module):
    def __init__(self, rng, dim=2, hidden=64, n_hidden=2, n_extra=2, zero=True):
        super().__init__()
        self.dim = dim
        self.zs = [Linear(dim, hidden, rng)] + [Linear(hidden, hidden, rng) for _ in range(n_hidden - 1)]
        self.es = [Linear(n_extra, hidden, rng, bias=False) for _ in range(n_hidden)]
        self.out = Linear(hidden, dim, rng, zero=zero)
        self.out_e = Linear(n_extra, dim, rng, zero=zero, bias=False)

    def __call__(self, z, extra, with_trace=True):
        h = z
        acts = []
        for lin, elin in zip(self.zs, self.es):
            h = ag.tanh(lin(h) + elin(extra))
            acts.append(h)
        v = self.out(h) + self.out_e(extra)
        if not with_trace:
            return v, None
        trace = None
        for k in range(self.dim):
            tan = self.zs[0].weight[k]
            for i, h in enumerate(acts):
                if i > 0:
                    tan = tan @ self.zs[i].weight
                tan = (1.0 - h * h) * tan
            dv_k = ag.sum(tan * self.out.weight[:, k], axis=-1)
            trace = dv_k if trace is None else trace + dv_k
        return v, trace


class LinearField(Module):
    """``v = A z`` with constant divergence ``tr(A)``; closed-form reference."""

    def __init__(self, a):
        super().__init__()
        self.a = ag.parameter(np.asarray(a, dtype=np.float64))
        self.dim = self.a.shape[0]

    def __call__(self, z, extra, with_trace=True):
        v = z @ ag.transpose(self.a)
        if not with_trace:
            return v, None
        tr = ag.sum(self.a * np.eye(self.dim))
        return v, tr * Tensor(np.ones(z.shape[0]))


class CnfDynamics(Module):
    def __init__(self, field, t0=0.0, t1=1.0, steps=16):
        super().__init__()
        if steps < 8:
            raise ValueError("CNF needs at least 8 solver steps")
        self.field = field
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.steps = int(steps)
        self.dim = field.dim

    def velocity(self, z, t, c, with_trace=True):
        n = z.shape[0]
        extra = Tensor(np.concatenate([np.full((n, 1), t), c], axis=1))
        return self.field(z, extra, with_trace)

    def integrate(self, z, c, t_start, t_end, with_trace=True, steps=None):
        """RK4 from ``t_start`` to ``t_end``; returns ``(z_end, integral of trace)``."""
        steps = steps or self.steps
        h = (t_end - t_start) / steps
        acc = Tensor(np.zeros(z.shape[0])) if with_trace else None
        t = t_start
        for _ in range(steps):
            k1, d1 = self.velocity(z, t, c, with_trace)
            k2, d2 = self.velocity(z + k1 * (0.5 * h), t + 0.5 * h, c, with_trace)
            k3, d3 = self.velocity(z + k2 * (0.5 * h), t + 0.5 * h, c, with_trace)
            k4, d4 = self.velocity(z + k3 * h, t + h, c, with_trace)
            z = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
            if with_trace:
                acc = acc + (d1 + d2 * 2.0 + d3 * 2.0 + d4) * (h / 6.0)
            if not np.isfinite(z.data).all():
                raise NonFiniteError("non-finite state during integration")
            t += h
        return z, acc

    def inverse(self, x, cond=None):
        """Data to latent: ``(z(t0), log|det dz/dx|)``."""
        x = ag.as_tensor(x)
        c = _cond_array(cond, x.shape[0])
        z, acc = self.integrate(x, c, self.t1, self.t0)
        # acc = integral from t1 to t0 of the trace = -(t0->t1 integral)
        return z, acc

    def forward(self, z, cond=None):
        z = ag.as_tensor(z)
        c = _cond_array(cond, z.shape[0])
        x, acc = self.integrate(z, c, self.t0, self.t1)
        return x, acc

    def log_prob(self, x, cond=None):
        x = ag.as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"expected (N, {self.dim}) input, got {x.shape}")
        z, acc = self.inverse(x, cond)
        return std_normal_logprob(z) + acc

    def sample(self, n, cond, rng):
        z = Tensor(rng.standard_normal((n, self.dim)))
        with no_grad():
            x, _ = self.integrate(z, _cond_array(cond, n), self.t0, self.t1, with_trace=False)
        return x.data

    def data_init(self, x, cond=None):
        pass


def make_cnf(rng, hidden=64, n_hidden=2, steps=16, t1=1.0):
    return CnfDynamics(VelocityField(rng, hidden=hidden, n_hidden=n_hidden), t1=t1, steps=steps)


def cnf_logprob(x, c_in, dyn):
    return dyn.log_prob(x, ConditionVector(c_in))


def cnf_sample(n, c_sp, dyn, rng):
    return dyn.sample(n, ConditionVector(c_sp), rng)
