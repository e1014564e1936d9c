"""Central finite-difference check of tape gradients."""
from __future__ import annotations

import numpy as np

from .autograd import NonFiniteError, backward, no_grad


def grad_check(f, params, step=1e-5):
    """Max relative error between tape gradients and central differences.

    ``f`` takes no arguments and returns a scalar :class:`Tensor` built from
    ``params``.  Relative error per coordinate is
    ``|a - n| / (|a| + |n| + 1e-12)``.
    """
    if not 0 < step <= 1e-2:
        raise ValueError(f"step must lie in (0, 1e-2], got {step}")
    for p in params:
        p.grad = None
    out = f()
    if out.requires_grad:
        backward(out)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    def value():
        with no_grad():
            v = float(f().data)
        if not np.isfinite(v):
            raise NonFiniteError("objective is non-finite at a probe point")
        return v

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        a = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = value()
            flat[i] = orig - step
            fm = value()
            flat[i] = orig
            num = (fp - fm) / (2.0 * step)
            err = abs(a[i] - num) / (abs(a[i]) + abs(num) + 1e-12)
            worst = max(worst, err)
    for p in params:
        p.grad = None
    return worst
