"""Scaled-down comparison runs shared by the demos and the acceptance tests.

Each function trains a noise-conditioned model and a baseline under an
identical budget (same seed, architecture, steps and batch size) and
returns the numbers the comparison is judged on.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import perturb as pt
from .config import RunConfig
from .pointflow import PointSet, chair, leg_chamfer, spread
from .pointflow import fit as fit_points
from .runner import CSP_SWEEP, SIGMA_SWEEP, build_model, schedule, set_sampler
from .toy import manifold_distance

TOY_BUDGET = RunConfig(kind="softflow-2d", n_blocks=12, hidden=32, n_layers=2, batch_size=128, lr=2e-3,
                       steps=3000, noise_a=0.0, noise_b=0.1, noise_scale=20.0)
POINT_BUDGET = RunConfig(kind="softpointflow", dataset="chair", n_points=128, batch_size=8, lr=2e-3,
                         steps=1500, hidden=64, noise_a=0.0, noise_b=0.075, max_condition=2.0)
EVAL_SEED = 1


@dataclass
class Run:
    cfg: RunConfig
    model: object
    losses: list
    seconds: float


@dataclass
class ToyComparison:
    dataset: str
    seed: int
    soft_distance: float
    base_distance: float
    sweep: dict = field(default_factory=dict)
    soft: Run | None = None
    base: Run | None = None


@dataclass
class ThinStructureComparison:
    seed: int
    soft_leg_cd: float
    base_leg_cd: float
    spreads: dict = field(default_factory=dict)
    soft: Run | None = None
    base: Run | None = None


def _train_toy(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    model = build_model(cfg, rng)
    t0 = time.perf_counter()
    losses = pt.fit(model, cfg.dataset, schedule(cfg), cfg.steps, rng, batch_size=cfg.batch_size, lr=cfg.lr)
    return Run(cfg, model, losses, time.perf_counter() - t0)


def toy_distance(run: Run, c_sp=0.0, n=2000):
    pts = pt.softflow_sample(n, c_sp, run.model, np.random.default_rng(EVAL_SEED), schedule(run.cfg))
    return manifold_distance(pts, run.cfg.dataset)


def compare_toy(dataset, seed, budget: RunConfig = TOY_BUDGET, sweep=CSP_SWEEP, n=2000):
    """Noise-conditioned flow against an unconditioned c = 0 baseline."""
    soft_cfg = replace(budget, dataset=dataset, seed=seed)
    base_cfg = replace(soft_cfg, noise_a=0.0, noise_b=0.0)
    soft, base = _train_toy(soft_cfg), _train_toy(base_cfg)
    curve = {c: toy_distance(soft, c, n) for c in sweep}
    return ToyComparison(dataset, seed, curve.get(0.0, toy_distance(soft, 0.0, n)), toy_distance(base, 0.0, n),
                         curve, soft, base)


def probe_chair(m=128, seed=123):
    """A fixed held-out chair and its leg mask."""
    pts, mask = chair(np.random.default_rng(seed), m)
    return PointSet.ingest(pts, "probe-chair"), mask


def _train_points(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    model = build_model(cfg, rng)
    t0 = time.perf_counter()
    losses = fit_points(model, set_sampler(cfg), cfg.steps, rng, batch_size=cfg.batch_size, lr=cfg.lr,
                        decay_interval=cfg.decay_interval)
    return Run(cfg, model, losses, time.perf_counter() - t0)


def latent_spreads(model, shape, sigmas=SIGMA_SWEEP, n=512):
    """Spread of decoded points for each latent temperature, same draws throughout."""
    return {s: spread(model.reconstruct(shape, n, 0.0, s, np.random.default_rng(EVAL_SEED))) for s in sigmas}


def compare_thin_structure(seed, budget: RunConfig = POINT_BUDGET, probe=None):
    """Leg-restricted reconstruction error: noise-conditioned against c = 0."""
    shape, mask = probe or probe_chair(budget.n_points)
    soft_cfg = replace(budget, seed=seed)
    base_cfg = replace(soft_cfg, noise_a=0.0, noise_b=0.0)
    soft, base = _train_points(soft_cfg), _train_points(base_cfg)

    def leg(run):
        recon = run.model.reconstruct(shape, budget.n_points, 0.0, 1.0, np.random.default_rng(EVAL_SEED))
        return leg_chamfer(recon, shape.points, mask)

    return ThinStructureComparison(seed, leg(soft), leg(base), latent_spreads(soft.model, shape), soft, base)
