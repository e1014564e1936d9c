"""Discrete normalizing flows: layers, stacks and the multi-scale prior."""
from .layers import (
    ActNorm,
    AffineCoupling,
    Autoregressive,
    ConditionVector,
    S_MAX,
    FlowLayer,
    InvConv1x1,
    actnorm_forward,
    actnorm_init,
    autoregressive_forward,
    coupling_forward,
    inv1x1_forward,
)
from .multiscale import MultiScaleFlow, squeeze, squeeze_factor, unsqueeze
from .stack import FlowStack, glow_blocks, make_toy_flow, stack_logprob, stack_sample, std_normal_logprob

__all__ = [
    "S_MAX", "ActNorm", "AffineCoupling", "Autoregressive", "ConditionVector", "FlowLayer", "InvConv1x1",
    "FlowStack", "MultiScaleFlow", "actnorm_forward", "actnorm_init", "autoregressive_forward",
    "coupling_forward", "glow_blocks", "inv1x1_forward", "make_toy_flow", "squeeze", "squeeze_factor",
    "stack_logprob", "stack_sample", "std_normal_logprob", "unsqueeze",
]
