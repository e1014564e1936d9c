"""Training, sampling and evaluation runs behind the command line.

Every run is a pure function of its :class:`RunConfig` and seed.  The
training log and all other CSV artefacts carry no wall-clock data, so a
repeated run rewrites them byte for byte; elapsed time goes to
``timing.json`` instead.
"""
from __future__ import annotations

import functools
import json
import logging
import time
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import io as sio
from . import perturb as pt
from .autograd import NonFiniteError, Tensor, no_grad
from .cnf import make_cnf
from .config import RunConfig
from .flows.layers import ConditionVector
from .flows.stack import FlowStack, glow_blocks
from .metrics import METRICS, distance_matrix, emd, one_nna_from_matrix
from .optim import Adam, AdamState
from .pointflow import model as pfm
from .pointflow.shapes import SHAPES, shape_family

log = logging.getLogger(__name__)

CSP_SWEEP = (0.0, 0.025, 0.05, 0.075, 0.1)
SIGMA_SWEEP = (0.5, 1.0, 1.5)


class RunError(RuntimeError):
    """A run failed after starting (I/O, non-finite loss, bad checkpoint)."""


# -- model construction ----------------------------------------------------------
def schedule(cfg: RunConfig):
    if cfg.kind == "softpointflow":
        return pt.NoiseSchedule.max_scaled(cfg.noise_a, cfg.noise_b, cfg.max_condition)
    return pt.NoiseSchedule(cfg.noise_a, cfg.noise_b, cfg.noise_scale)


def build_model(cfg: RunConfig, rng):
    if cfg.kind == "softflow-2d":
        n_cond = 0 if cfg.ablation else 1
        return FlowStack(glow_blocks(2, cfg.n_blocks, rng, hidden=cfg.hidden, n_layers=cfg.n_layers,
                                     n_cond=n_cond), 2)
    if cfg.kind == "cnf-2d":
        return make_cnf(rng, hidden=cfg.hidden, n_hidden=cfg.n_layers, steps=cfg.cnf_steps)
    pcfg = pfm.PointFlowConfig(n_points=cfg.n_points, latent_dim=cfg.latent_dim, prior_blocks=cfg.prior_blocks,
                               decoder_blocks=cfg.decoder_blocks, hidden=cfg.hidden, a=cfg.noise_a,
                               b=cfg.noise_b, max_condition=cfg.max_condition)
    return pfm.SoftPointFlow(pcfg, rng)


def set_sampler(cfg: RunConfig):
    """``sampler(rng, B) -> (B, M, 3)`` for the point-cloud model."""
    if cfg.dataset in SHAPES:
        def sampler(rng, bsz):
            return np.stack([p.points for p in shape_family(cfg.dataset, bsz, rng, cfg.n_points)])
        return sampler
    path = Path(cfg.dataset)
    if not path.is_dir():
        raise RunError(f"dataset {cfg.dataset!r} is neither a synthetic family {sorted(SHAPES)} nor a directory")
    sets = [p.points for p in sio.read_pointset_dir(path)]

    def sampler(rng, bsz):
        idx = rng.integers(len(sets), size=bsz)
        out = []
        for i in idx:
            pts = sets[i]
            take = rng.choice(len(pts), cfg.n_points, replace=len(pts) < cfg.n_points)
            out.append(pts[take])
        return np.stack(out)
    return sampler


# -- training --------------------------------------------------------------------
def _log_comments(cfg: RunConfig):
    sched = schedule(cfg)
    return (
        f"softflow training log; kind={cfg.kind} dataset={cfg.dataset} seed={cfg.seed} steps={cfg.steps}",
        f"noise a={cfg.noise_a!r} b={cfg.noise_b!r} scale={sched.scale!r} ablation={str(cfg.ablation).lower()}",
        "units: step = optimizer updates; loss = nats (negative mean log-likelihood per point); lr = Adam step size",
    )


def write_train_log(path, cfg, history):
    rows = zip(history["step"], history["loss"], history["lr"])
    sio.write_csv(path, ["step", "loss", "lr"], rows, _log_comments(cfg))


def _save(path, cfg, model, opt, history, rng, step):
    meta = {"kind": cfg.kind, "config": cfg.to_dict(), "step": step, "optim": opt.state.scalars(),
            "rng": rng.bit_generator.state}
    ckpt.save(path, {"model": model, "optim": opt.state.state_arrays(),
                     "history": {k: np.asarray(v, dtype=np.float64) for k, v in history.items()}}, meta)


def load_run(path):
    """Rebuild ``(cfg, model, meta, sections)`` from a checkpoint."""
    meta, sections = ckpt.load(path)
    try:
        cfg = RunConfig.from_dict(meta["config"])
    except (KeyError, TypeError) as err:
        raise ckpt.CheckpointError(f"{path}: checkpoint carries no run config") from err
    model = build_model(cfg, np.random.default_rng(cfg.seed))
    try:
        model.load_state_dict(sections["model"])
    except (KeyError, ValueError) as err:
        raise ckpt.CheckpointError(f"{path}: parameters do not fit a {cfg.kind} model ({err})") from err
    return cfg, model, meta, sections


def train(cfg: RunConfig, resume=None, out_dir=None):
    """Run (or continue) training; returns the loss history dict."""
    cfg.validate()
    out = Path(out_dir or sio.resolve_out(cfg.out_dir))
    try:
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.json")
    except OSError as err:
        raise RunError(f"cannot write to output directory {out}: {err}") from err

    if resume is not None:
        rcfg, model, meta, sections = load_run(resume)
        if rcfg.kind != cfg.kind:
            raise ckpt.CheckpointError(f"checkpoint holds a {rcfg.kind} model, config asks for {cfg.kind}")
        rng = np.random.default_rng()
        rng.bit_generator.state = meta["rng"]
        opt = Adam(model.parameters())
        opt.state = AdamState.restore(meta["optim"], sections["optim"])
        start = int(meta["step"])
        history = {k: list(v) for k, v in sections["history"].items()}
        for k in ("step", "loss", "lr"):
            history.setdefault(k, [])
    else:
        rng = np.random.default_rng(cfg.seed)
        model = build_model(cfg, rng)
        opt = Adam(model.parameters(), lr=cfg.lr, decay_factor=cfg.decay_factor, decay_interval=cfg.decay_interval)
        start = 0
        history = {"step": [], "loss": [], "lr": []}

    done = [start]

    def on_step(step, loss, optimizer):
        history["step"].append(step)
        history["loss"].append(loss)
        history["lr"].append(optimizer.state.lr)
        done[0] = step
        if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
            _save(out / f"ckpt_{step:07d}.zip", cfg, model, opt, history, rng, step)

    t0 = time.perf_counter()
    try:
        if cfg.kind == "softpointflow":
            pfm.fit(model, set_sampler(cfg), cfg.steps, rng, batch_size=cfg.batch_size, on_step=on_step,
                    optimizer=opt, start_step=start)
        else:
            pt.fit(model, cfg.dataset, schedule(cfg), cfg.steps, rng, batch_size=cfg.batch_size,
                   on_step=on_step, optimizer=opt, start_step=start)
    except NonFiniteError as err:
        bad = done[0] + 1
        write_train_log(out / "train_log.csv", cfg, history)
        (out / "failure.json").write_text(json.dumps({"step": bad, "error": str(err)}, indent=1) + "\n")
        raise RunError(f"non-finite loss at step {bad}: {err}") from err
    wall = time.perf_counter() - t0

    write_train_log(out / "train_log.csv", cfg, history)
    _save(out / "final.zip", cfg, model, opt, history, rng, cfg.steps)
    (out / "timing.json").write_text(json.dumps({"wall_seconds": wall, "first_step": start + 1,
                                                 "last_step": cfg.steps}, indent=1) + "\n")
    return history


# -- sampling --------------------------------------------------------------------
def _tag(name, value):
    return f"{name}{value:g}"


def sample(checkpoint, n, c_sp=(0.0,), sigma_z=(1.0,), out="samples", seed=0, with_logp=False,
           expect_kind=None):
    """Write sample CSVs (plus SVGs) for every requested ``c_sp`` / ``sigma_z``.

    One value per axis writes ``<out>.csv``; sweeps append ``_csp<v>`` and
    ``_sz<v>`` tags.  Returns the list of CSV paths.
    """
    cfg, model, _, _ = load_run(checkpoint)
    if expect_kind and expect_kind != cfg.kind:
        raise ckpt.CheckpointError(f"checkpoint holds a {cfg.kind} model, expected {expect_kind}")
    if n < 0:
        raise ValueError("sample count must be non-negative")
    out = Path(sio.resolve_out(out))
    out.parent.mkdir(parents=True, exist_ok=True)
    sched = schedule(cfg)
    written = []
    sweep_c, sweep_s = len(c_sp) > 1, len(sigma_z) > 1
    for c in c_sp:
        for sz in (sigma_z if cfg.kind == "softpointflow" else (1.0,)):
            stem = str(out)
            if sweep_c:
                stem += "_" + _tag("csp", c)
            if sweep_s and cfg.kind == "softpointflow":
                stem += "_" + _tag("sz", sz)
            rng = np.random.default_rng(seed)
            comments = [f"softflow samples; kind={cfg.kind} checkpoint_seed={cfg.seed} sample_seed={seed} "
                        f"c_sp={c!r} condition={sched.scale * c!r}"]
            if cfg.kind == "softpointflow":
                comments[0] += f" sigma_z={sz!r}"
                comments.append("units: normalised shape coordinates (unit bounding radius)")
                pts = model.generate(n, c, rng, sz).points if n else np.zeros((0, 3))
                sio.write_samples_csv(stem + ".csv", pts, comments=comments)
                sio.svg_projections(stem, pts, title=f"c_sp={c:g} sigma_z={sz:g}")
            else:
                comments.append("units: data coordinates" + ("; logp = nats" if with_logp else ""))
                pts = pt.softflow_sample(n, c, model, rng, sched)
                logp = None
                if with_logp:
                    with no_grad():
                        logp = (model.log_prob(Tensor(pts), ConditionVector(np.full(n, sched.scale * c))).data
                                if n else np.zeros(0))
                sio.write_samples_csv(stem + ".csv", pts, logp, comments)
                sio.svg_scatter(stem + ".svg", pts, lim=4.0, title=f"c_sp={c:g}")
            written.append(stem + ".csv")
    return written


# -- evaluation ------------------------------------------------------------------
def evaluate(gen_dir, ref_dir, metrics=("cd",), out="eval.csv", approximate=False):
    """Cross-distance report plus 1-NNA; returns ``{metric: percent}``.

    The distance rows are always written.  1-NNA needs at least two sets on
    each side; otherwise :class:`ValueError` is raised after the report.
    """
    gen = sio.read_pointset_dir(gen_dir)
    ref = sio.read_pointset_dir(ref_dir)
    sizes = {len(p) for p in gen + ref}
    if len(sizes) != 1:
        raise ValueError(f"point sets must share one cardinality, found sizes {sorted(sizes)}")
    for m in metrics:
        if m not in METRICS:
            raise ValueError(f"unknown metric {m!r}; choose from {sorted(METRICS)}")
    g = [p.points for p in gen]
    r = [p.points for p in ref]
    rows, nna = [], {}
    for m in metrics:
        fn = functools.partial(emd, approximate=True) if (m == "emd" and approximate) else m
        pooled = g + r
        full = distance_matrix(pooled, pooled, fn, symmetric=True)
        cross = full[: len(g), len(g):]
        for i, gp in enumerate(gen):
            for j, rp in enumerate(ref):
                rows.append((gp.shape_id, rp.shape_id, m, cross[i, j]))
        if len(g) >= 2 and len(r) >= 2:
            nna[m] = one_nna_from_matrix(full, np.repeat([0, 1], [len(g), len(r)]))
    out = Path(sio.resolve_out(out))
    out.parent.mkdir(parents=True, exist_ok=True)
    sio.write_csv(out, ["gen_id", "ref_id", "metric", "value"], rows,
                  [f"softflow eval; gen={len(g)} sets ref={len(r)} sets points={sizes.pop()}",
                   "units: cd = summed mean squared nearest-neighbour distance; emd = mean matched distance"])
    if len(g) < 2 or len(r) < 2:
        raise ValueError(f"1-NNA needs at least 2 sets per list (gen={len(g)}, ref={len(r)}); "
                         f"distances written to {out}")
    nna_path = out.with_name(out.stem + "_1nna.csv")
    sio.write_csv(nna_path, ["metric", "n_gen", "n_ref", "accuracy"],
                  [(m, str(len(g)), str(len(r)), v) for m, v in nna.items()],
                  ["softflow 1-NNA; units: accuracy in percent (50 = indistinguishable)"])
    return nna


# -- data generation -------------------------------------------------------------
def datagen_toy(name, n, seed, out):
    from .toy import sample_toy

    pts = sample_toy(name, n, np.random.default_rng(seed)) if n else np.zeros((0, 2))
    out = Path(sio.resolve_out(out))
    out.parent.mkdir(parents=True, exist_ok=True)
    sio.write_samples_csv(out, pts, comments=[f"softflow toy data; name={name} seed={seed}",
                                              "units: data coordinates"])
    return out


def datagen_shapes(family, count, points, seed, out_dir):
    out = Path(sio.resolve_out(out_dir))
    out.mkdir(parents=True, exist_ok=True)
    sets = shape_family(family, count, np.random.default_rng(seed), points)
    for ps in sets:
        sio.write_pointset(out / f"{ps.shape_id}.xyz", ps)
    return sets


__all__ = ["CSP_SWEEP", "SIGMA_SWEEP", "RunError", "build_model", "datagen_shapes", "datagen_toy", "evaluate",
           "load_run", "sample", "schedule", "set_sampler", "train", "write_train_log"]
