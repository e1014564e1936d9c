"""Adam with an optional step-decay learning-rate schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_factor: float = 1.0
    decay_interval: int = 0
    step: int = 0
    base_lr: float | None = None
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.base_lr is None:
            self.base_lr = self.lr

    def lr_at(self, step: int) -> float:
        """Learning rate in force after ``step`` completed updates."""
        if self.decay_interval <= 0:
            return self.base_lr
        return self.base_lr * self.decay_factor ** (step // self.decay_interval)

    def state_arrays(self):
        return {f"m{i}": m for i, m in enumerate(self.m)} | {f"v{i}": v for i, v in enumerate(self.v)}

    def scalars(self):
        return {
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "decay_factor": self.decay_factor, "decay_interval": self.decay_interval,
            "step": self.step, "base_lr": self.base_lr,
        }

    @classmethod
    def restore(cls, scalars, arrays):
        st = cls(**scalars)
        n = sum(1 for k in arrays if k.startswith("m"))
        st.m = [np.array(arrays[f"m{i}"]) for i in range(n)]
        st.v = [np.array(arrays[f"v{i}"]) for i in range(n)]
        return st


def adam_step(params, state: AdamState):
    """Apply one Adam update in place and advance the schedule."""
    for i, p in enumerate(params):
        if p.grad is None:
            raise ValueError(f"parameter {i} ({p.name or p.shape}) has no gradient")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    for p, m in zip(params, state.m):
        if m.shape != p.data.shape:
            raise ValueError(f"moment buffer shape {m.shape} does not match parameter {p.data.shape}")

    state.step += 1
    t = state.step
    lr = state.lr
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    state.lr = state.lr_at(t)


class Adam:
    """Thin convenience wrapper binding a parameter list to an :class:`AdamState`."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, decay_factor=1.0, decay_interval=0):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps,
                               decay_factor=decay_factor, decay_interval=decay_interval)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.params, self.state)
