"""Normalizing flows trained on noise-perturbed manifold data, with a
two-level point-cloud model and point-set evaluation metrics."""

__version__ = "0.1.0"
