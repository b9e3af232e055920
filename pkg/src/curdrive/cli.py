"""Command-line entry point: ``python -m curdrive <command> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import astuple, replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .checkpoint import save_vae
from .curriculum import parse_kind
from .harness import RECORD_FIELDS, collect_frames, run_eval, run_training
from .observation import Vae, vae_evaluate, vae_train
from .plots import emit_plots

FRAMES_FILE = "frames.npy"
LOSS_FIELDS = ["epoch", "train_bce", "train_kl", "val_bce", "val_kl"]


def _load(args, variant=None):
    return cfgmod.load_config(args.config, profile=getattr(args, "profile", "desk"), variant=variant)


def cmd_train(args):
    config = _load(args, parse_kind(args.variant))
    config = replace(config, seed=args.seed, output_dir=args.out)
    result = run_training(config, progress_every=args.log_every)
    print(f"wrote {result.records_csv}")


def cmd_eval(args):
    config = _load(args)
    records = run_eval(args.checkpoint, config, args.episodes)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow(astuple(r))


def cmd_plot(args):
    for path in emit_plots(args.runs, args.out, smoothing=args.smoothing):
        print(path)


def cmd_collect_frames(args):
    config = _load(args)
    frames = collect_frames(config, args.count, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / FRAMES_FILE, frames)
    (out / "raster.txt").write_text(f"{config.raster.height} {config.raster.width}\n")
    print(f"wrote {len(frames)} frames to {out / FRAMES_FILE}")


def cmd_vae_train(args):
    frames_path = Path(args.frames)
    if frames_path.is_dir():
        frames_path = frames_path / FRAMES_FILE
    frames = np.load(frames_path)
    if len(frames) < 2:
        raise ValueError("need at least two frames (training and validation split)")
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(frames))
    n_val = max(1, len(frames) // 10)  # 9:1 split
    val, train = frames[order[:n_val]], frames[order[n_val:]]
    vae = Vae(n_pixels=frames[0].size, z_dim=args.z_dim, kl_beta=args.beta, rng=rng)
    initial = vae_evaluate(vae, val)
    vae, history = vae_train(train, vae, args.epochs, rng, val_frames=val, lr=args.lr, batch_size=args.batch_size)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_vae(out, vae)
    loss_path = out.with_suffix(".losses.csv")
    with open(loss_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOSS_FIELDS)
        w.writerow([0, "", "", repr(initial["bce"]), repr(initial["kl"])])
        for h in history:
            w.writerow([h["epoch"]] + [repr(h[k]) for k in LOSS_FIELDS[1:]])
    print(f"wrote {out} and {loss_path}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curdrive", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one agent variant")
    t.add_argument("--config", required=True)
    t.add_argument("--variant", required=True, choices=["sca", "onefold", "curla"])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--profile", choices=sorted(cfgmod.PROFILES), default="desk")
    t.add_argument("--log-every", type=int, default=0)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="deterministic evaluation of a policy checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config", required=True)
    e.add_argument("--episodes", type=int, default=1)
    e.add_argument("--profile", choices=sorted(cfgmod.PROFILES), default="desk")
    e.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="SVG charts from run directories")
    pl.add_argument("--runs", nargs="+", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--smoothing", type=float, default=0.999)
    pl.set_defaults(func=cmd_plot)

    v = sub.add_parser("vae-train", help="train the observation VAE on collected frames")
    v.add_argument("--frames", required=True)
    v.add_argument("--out", required=True)
    v.add_argument("--epochs", type=int, default=200)
    v.add_argument("--lr", type=float, default=1e-4)
    v.add_argument("--batch-size", type=int, default=100)
    v.add_argument("--beta", type=float, default=1.0)
    v.add_argument("--z-dim", type=int, default=64)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_vae_train)

    c = sub.add_parser("collect-frames", help="record rasters from a scripted driver")
    c.add_argument("--config", required=True)
    c.add_argument("--count", type=int, required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--profile", choices=sorted(cfgmod.PROFILES), default="desk")
    c.set_defaults(func=cmd_collect_frames)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"curdrive {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
