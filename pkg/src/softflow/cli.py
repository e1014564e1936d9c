"""``softflow`` command line: train, sample, eval, datagen.

Exit codes: 0 success, 1 usage error (bad flags, invalid config), 2 runtime
failure (non-finite loss, I/O, unreadable checkpoint or point set).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from . import runner
from .checkpoint import CheckpointError
from .config import KINDS, RunConfig, defaults_for
from .io import PointSetFormatError
from .toy import TOY_NAMES

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_config_flags(p):
    """One ``--flag`` per scalar RunConfig field; unset flags keep the config/default value."""
    for f in fields(RunConfig):
        if f.name in ("kind", "extra"):
            continue
        kind = {"int": int, "float": float}.get(f.type, str)
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=None)


def build_parser():
    ap = _Parser(prog="softflow", description="Noise-conditioned normalizing flows for manifold data.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    tr = sub.add_parser("train", help="train a model and write checkpoints plus a CSV log")
    tr.add_argument("--kind", choices=KINDS, default=None)
    tr.add_argument("--config", help="JSON RunConfig; flags override its fields")
    tr.add_argument("--resume", help="checkpoint to continue from")
    _add_config_flags(tr)

    sp = sub.add_parser("sample", help="draw samples from a checkpoint")
    sp.add_argument("checkpoint")
    sp.add_argument("-n", type=int, default=1000, help="points to draw")
    sp.add_argument("--c-sp", type=_floats, default=(0.0,), help="sampling condition(s), comma separated")
    sp.add_argument("--sweep", action="store_true", help="c_sp in 0, 0.025, 0.05, 0.075, 0.1")
    sp.add_argument("--sigma-z", type=_floats, default=(1.0,), help="base-noise scale(s), point-cloud models")
    sp.add_argument("--sigma-sweep", action="store_true", help="sigma_z in 0.5, 1, 1.5")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--logp", action="store_true", help="add a log-density column (2-D models)")
    sp.add_argument("--kind", choices=KINDS, default=None, help="refuse checkpoints of another kind")
    sp.add_argument("--out", default="samples", help="output path prefix")

    ev = sub.add_parser("eval", help="CD/EMD matrices and 1-NNA between two point-set directories")
    ev.add_argument("gen_dir")
    ev.add_argument("ref_dir")
    ev.add_argument("--metric", choices=("cd", "emd", "both"), default="cd")
    ev.add_argument("--approximate", action="store_true", help="subsample sets above the exact EMD limit")
    ev.add_argument("--out", default="eval.csv")

    dg = sub.add_parser("datagen", help="write toy 2-D data or synthetic point-set files")
    dsub = dg.add_subparsers(dest="what", parser_class=_Parser)
    dt = dsub.add_parser("toy")
    dt.add_argument("name", choices=TOY_NAMES)
    dt.add_argument("-n", type=int, default=1000)
    dt.add_argument("--seed", type=int, default=0)
    dt.add_argument("--out", default="toy.csv")
    ds = dsub.add_parser("shapes")
    ds.add_argument("family", choices=("chair", "thin-cross"))
    ds.add_argument("--count", type=int, default=10)
    ds.add_argument("--points", type=int, default=128)
    ds.add_argument("--seed", type=int, default=0)
    ds.add_argument("--out", default="shapes")
    return ap


def config_from_args(args):
    if args.config:
        cfg = RunConfig.load(args.config)
        base = cfg.to_dict()
    else:
        base = RunConfig(**defaults_for(args.kind or "softflow-2d")).to_dict()
    if args.kind:
        base["kind"] = args.kind
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if f.name != "kind" and val is not None:
            base[f.name] = val
    return RunConfig.from_dict(base)


def _run(args):
    if args.command == "train":
        cfg = config_from_args(args)
        hist = runner.train(cfg, resume=args.resume)
        if hist["loss"]:
            print(f"trained {cfg.kind} to step {int(hist['step'][-1])}, final loss {hist['loss'][-1]:.4f}")
    elif args.command == "sample":
        c_sp = runner.CSP_SWEEP if args.sweep else args.c_sp
        sz = runner.SIGMA_SWEEP if args.sigma_sweep else args.sigma_z
        if args.n < 0:
            raise UsageError("sample: -n must be non-negative")
        for path in runner.sample(args.checkpoint, args.n, c_sp, sz, args.out, args.seed, args.logp, args.kind):
            print(path)
    elif args.command == "eval":
        metrics = ("cd", "emd") if args.metric == "both" else (args.metric,)
        nna = runner.evaluate(args.gen_dir, args.ref_dir, metrics, args.out, args.approximate)
        for m, v in nna.items():
            print(f"1-NNA ({m}): {v:.2f}%")
    elif args.command == "datagen":
        if args.what == "toy":
            print(runner.datagen_toy(args.name, args.n, args.seed, args.out))
        elif args.what == "shapes":
            sets = runner.datagen_shapes(args.family, args.count, args.points, args.seed, args.out)
            print(f"wrote {len(sets)} point sets to {args.out}")
        else:
            raise UsageError("datagen: choose 'toy' or 'shapes'")
    else:
        raise UsageError("choose a command: train, sample, eval, datagen")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _run(args)
    except (PointSetFormatError, CheckpointError, runner.RunError, OSError) as err:
        print(f"softflow: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, ValueError) as err:
        print(f"softflow: {err}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
