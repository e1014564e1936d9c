"""Two-level generative model for fixed-size 3-D point sets."""
from .model import (
    REFERENCE_SCALE,
    PointFlowConfig,
    SetEncoder,
    ShapeLatent,
    SoftPointFlow,
    decoder_logprob,
    elbo,
    encode,
    fit,
    gaussian_entropy,
    generate,
    prior_logprob,
    reconstruct,
    spread,
)
from .shapes import PointSet, chair, leg_chamfer, sample_shape, shape_family, thin_cross

__all__ = [
    "REFERENCE_SCALE", "PointFlowConfig", "PointSet", "SetEncoder", "ShapeLatent", "SoftPointFlow", "chair",
    "decoder_logprob", "elbo", "encode", "fit", "gaussian_entropy", "generate", "leg_chamfer", "prior_logprob", "reconstruct",
    "sample_shape", "shape_family", "spread", "thin_cross",
]
