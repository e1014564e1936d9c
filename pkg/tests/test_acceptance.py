"""One test per acceptance criterion, each printing a single verdict line."""
import itertools
import math
import time

import numpy as np
import pytest

from softflow import autograd as ag
from softflow.autograd import Tensor, no_grad
from softflow.cli import main
from softflow.cnf import CnfDynamics, LinearField
from softflow.experiments import compare_thin_structure, compare_toy
from softflow.flows import ActNorm, AffineCoupling, Autoregressive, ConditionVector, FlowStack, InvConv1x1
from softflow.flows import MultiScaleFlow, glow_blocks
from softflow.assignment import linear_sum_assignment
from softflow.gradcheck import grad_check
from softflow.metrics import chamfer, emd, one_nna
from softflow.perturb import PerturbedBatch, integrated_mass, softflow_loss
from softflow.pointflow import PointFlowConfig, SoftPointFlow
from softflow.runner import CSP_SWEEP, SIGMA_SWEEP

from conftest import jacobian_fd, point_fn, randomize

SEEDS = (0, 1, 2)


def layer_zoo(dim, rng):
    return {
        "actnorm": randomize(ActNorm(dim), rng),
        "inv1x1": randomize(InvConv1x1(dim, rng), rng),
        "affine-coupling": randomize(AffineCoupling(dim, 16, 2, rng, parity=1), rng),
        "autoregressive": randomize(Autoregressive(dim, 12, rng), rng),
    }


@pytest.fixture(scope="module")
def toy_runs():
    return {(ds, s): compare_toy(ds, s) for ds in ("2sines", "circles") for s in SEEDS}


@pytest.fixture(scope="module")
def point_runs():
    return {s: compare_thin_structure(s) for s in SEEDS}


def test_criterion_01_invertibility(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(100)
    worst = {}
    for dim in (2, 3):
        x = rng.normal(size=(1000, dim)) * 2
        cond = ConditionVector(rng.uniform(0, 2, 1000))
        for name, layer in layer_zoo(dim, rng).items():
            with no_grad():
                y, _ = layer.forward(Tensor(x), cond)
                back, _ = layer.inverse(y, cond)
            worst[name, dim] = np.max(np.abs(back.data - x))
        for n_blocks, kind in itertools.product((1, 4, 8, 12), ("affine", "autoregressive")):
            stack = randomize(FlowStack(glow_blocks(dim, n_blocks, rng, hidden=8, n_layers=1, coupling=kind), dim),
                              rng, 0.1)
            with no_grad():
                z, _ = stack.inverse(Tensor(x), cond)
                back, _ = stack.forward(z, cond)
            worst[f"stack-{kind}-{n_blocks}", dim] = np.max(np.abs(back.data - x))
    prior = randomize(MultiScaleFlow(32, 8, rng, hidden=8, n_layers=2), rng, 0.1)
    s = rng.normal(size=(1000, 32))
    with no_grad():
        back, _ = prior.forward(prior.inverse(Tensor(s))[0])
    worst["multiscale-prior", 32] = np.max(np.abs(back.data - s))
    elapsed = time.perf_counter() - t0

    def tol(key):
        return 1e-6 if "autoregressive" in key[0] else 1e-8

    bad = [k for k, v in worst.items() if v >= tol(k)]
    ok = not bad and elapsed < 60
    criterion(1, ok, f"{len(worst)} layers/stacks, max error {max(worst.values()):.1e}, {elapsed:.1f}s"
              + (f", over tolerance: {bad}" if bad else ""))
    assert ok


def test_criterion_02_log_determinants(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(200)
    worst = 0.0
    for dim in (2, 3):
        cond = ConditionVector(np.array([0.7]))
        layers = layer_zoo(dim, rng)
        layers["stack"] = randomize(FlowStack(glow_blocks(dim, 3, rng, hidden=8, n_layers=1), dim), rng, 0.2)
        for layer in layers.values():
            for _ in range(3):
                x = rng.normal(size=dim)
                jac = jacobian_fd(point_fn(layer, cond), x)
                _, ld = layer.forward(Tensor(x[None]), cond)
                worst = max(worst, abs(float(np.ravel(ld.data)[0]) - math.log(abs(np.linalg.det(jac)))))
    dyn = CnfDynamics(LinearField(-np.eye(2)), steps=32)
    x = rng.normal(size=(50, 2))
    exact = -0.5 * np.sum((x * math.e) ** 2, 1) - math.log(2 * math.pi) + 2.0
    cnf_err = float(np.max(np.abs(dyn.log_prob(Tensor(x)).data - exact)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-5 and cnf_err < 1e-4 and elapsed < 120
    criterion(2, ok, f"max Jacobian log-det gap {worst:.1e} (tol 1e-5), linear-field CNF gap {cnf_err:.1e} "
                     f"(tol 1e-4), {elapsed:.1f}s")
    assert ok


def test_criterion_03_gradients(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(300)
    flow = randomize(FlowStack(glow_blocks(2, 2, rng, hidden=4, n_layers=1), 2), rng, 0.3)
    x = rng.normal(size=(6, 2))
    c = rng.uniform(0, 0.1, 6)
    noise = rng.normal(size=(6, 2)) * c[:, None]
    batch = PerturbedBatch(x, noise, c, 20 * c)
    toy_err = grad_check(lambda: softflow_loss(batch, flow), flow.parameters())
    pf = randomize(SoftPointFlow(PointFlowConfig(latent_dim=8, prior_blocks=1, decoder_blocks=1, hidden=4,
                                                 encoder_hidden=4, prior_layers=1), rng), rng, 0.2)
    pts = rng.normal(size=(4, 3))
    pf_err = grad_check(lambda: -ag.mean(pf.elbo(pts, np.random.default_rng(0))), pf.parameters())
    elapsed = time.perf_counter() - t0
    ok = toy_err < 1e-4 and pf_err < 1e-4 and elapsed < 120
    criterion(3, ok, f"flow loss rel err {toy_err:.1e}, point-set bound rel err {pf_err:.1e} (tol 1e-4), "
                     f"{elapsed:.1f}s")
    assert ok


def test_criterion_04_normalization(criterion, toy_runs):
    run = toy_runs["2sines", 0].soft
    t0 = time.perf_counter()
    mass = {c: integrated_mass(run.model, c) for c in (0.0, 1.0, 2.0)}
    elapsed = run.seconds + time.perf_counter() - t0
    ok = all(abs(m - 1) < 0.02 for m in mass.values()) and elapsed < 300
    criterion(4, ok, "mass " + ", ".join(f"c_in={c:g}: {m:.4f}" for c, m in mass.items())
              + f" (tol 2%), {elapsed:.0f}s incl. training")
    assert ok


def test_criterion_05_toy_comparison(criterion, toy_runs):
    wins, parts = 0, []
    for (ds, s), r in toy_runs.items():
        pair = r.soft.seconds + r.base.seconds
        win = r.soft_distance < r.base_distance and pair < 600
        wins += win
        parts.append(f"{ds}/{s}: {r.soft_distance:.3f} vs {r.base_distance:.3f} ({pair:.0f}s)")
    ok = wins == len(toy_runs)
    criterion(5, ok, f"{wins}/{len(toy_runs)} noise-conditioned wins; " + "; ".join(parts))
    assert ok


def test_criterion_06_condition_sweep(criterion, toy_runs):
    curve = [toy_runs["2sines", 0].sweep[c] for c in CSP_SWEEP]
    ok = all(b >= a for a, b in zip(curve, curve[1:]))
    criterion(6, ok, "manifold distance over c_sp " + " ".join(f"{v:.4f}" for v in curve))
    assert ok


def test_criterion_07_metric_oracles(criterion):
    rng = np.random.default_rng(700)
    emd_gap = cd_gap = 0.0
    for _ in range(10):
        x, y = rng.normal(size=(2, 6, 3))
        best = min(sum(math.dist(x[i], y[p[i]]) for i in range(6)) / 6 for p in itertools.permutations(range(6)))
        emd_gap = max(emd_gap, abs(emd(x, y) - best))
        a, b = rng.normal(size=(64, 3)), rng.normal(size=(70, 3))
        brute = (np.mean([min(np.sum((p - q) ** 2) for q in b) for p in a])
                 + np.mean([min(np.sum((q - p) ** 2) for p in a) for q in b]))
        cd_gap = max(cd_gap, abs(chamfer(a, b) - brute))
    perms = np.array(list(itertools.permutations(range(8))))
    assign_ok = True
    for _ in range(100):
        cost = rng.uniform(0, 10, (8, 8))
        r, c = linear_sum_assignment(cost)
        assign_ok &= bool(abs(cost[r, c].sum() - cost[np.arange(8), perms].sum(1).min()) < 1e-12)
    sets = list(rng.normal(size=(8, 16, 3)))
    dup = one_nna([s.copy() for s in sets], sets)
    # 150 + 150 sets: the null accuracy has a standard deviation near 3 points
    accs = []
    for seed in range(100):
        pool = list(np.random.default_rng(seed).normal(size=(300, 8, 3)))
        accs.append(one_nna(pool[:150], pool[150:]))
    rate = float(np.mean([(40 <= a <= 60) for a in accs]))
    ok = emd_gap < 1e-10 and cd_gap < 1e-10 and assign_ok and dup == 0 and rate >= 0.99
    criterion(7, ok, f"EMD gap {emd_gap:.1e}, CD gap {cd_gap:.1e}, assignment exact={assign_ok}, "
                     f"duplicates {dup:g}%, same-distribution 1-NNA in [40,60] for {rate:.0%} of 100 seeds "
                     f"(mean {np.mean(accs):.1f}%)")
    assert ok


def test_criterion_08_thin_structure(criterion, point_runs):
    wins, parts = 0, []
    for s, r in point_runs.items():
        pair = r.soft.seconds + r.base.seconds
        win = r.soft_leg_cd < r.base_leg_cd and pair < 900
        wins += win
        parts.append(f"seed {s}: {r.soft_leg_cd:.4f} vs {r.base_leg_cd:.4f} ({pair:.0f}s)")
    ok = wins == len(point_runs)
    criterion(8, ok, f"{wins}/{len(point_runs)} leg-CD wins over c=0; " + "; ".join(parts))
    assert ok


def test_criterion_09_latent_temperature(criterion, point_runs):
    spreads = point_runs[0].spreads
    vals = [spreads[s] for s in SIGMA_SWEEP]
    ok = all(b > a for a, b in zip(vals, vals[1:]))
    criterion(9, ok, "spread over sigma_z " + " ".join(f"{s:g}: {v:.4f}" for s, v in zip(SIGMA_SWEEP, vals)))
    assert ok


def test_criterion_10_reproducibility(criterion, tmp_path, monkeypatch):
    monkeypatch.setenv("SOFTFLOW_OUTPUT_ROOT", str(tmp_path))
    small = ["--n-blocks", "3", "--hidden", "12", "--n-layers", "1", "--batch-size", "32"]
    for tag in ("a", "b"):
        cmds = [
            ["train", "--steps", "40", "--seed", "5", "--out-dir", f"r{tag}", *small],
            ["sample", str(tmp_path / f"r{tag}" / "final.zip"), "-n", "200", "--sweep", "--logp", "--out",
             f"r{tag}/s"],
            ["train", "--kind", "softpointflow", "--steps", "3", "--n-points", "32", "--latent-dim", "8",
             "--hidden", "8", "--prior-blocks", "1", "--decoder-blocks", "1", "--batch-size", "2",
             "--out-dir", f"p{tag}"],
            ["sample", str(tmp_path / f"p{tag}" / "final.zip"), "-n", "64", "--sigma-sweep", "--out", f"p{tag}/g"],
            ["datagen", "shapes", "chair", "--count", "4", "--points", "32", "--seed", "9", "--out", f"d{tag}"],
            ["eval", str(tmp_path / f"d{tag}"), str(tmp_path / f"d{tag}"), "--metric", "both", "--out",
             f"r{tag}/e.csv"],
        ]
        assert all(main(c) == 0 for c in cmds)
    files = sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*.csv") if p.parts[-2].endswith("a"))
    same = sum((tmp_path / rel).read_bytes() == (tmp_path / (rel.parts[0][:-1] + "b") / rel.relative_to(rel.parts[0]))
               .read_bytes() for rel in files)
    ok = same == len(files) and len(files) >= 10
    criterion(10, ok, f"{same}/{len(files)} CSV outputs byte-identical across repeated train/sample/eval runs")
    assert ok
