"""Command-line front end: ``pacer train|eval|plot|bimodality|quantiles|sample``."""

from __future__ import annotations

import argparse
import sys

from ..utility import CVAR_LEVELS
from . import commands as C
from .config import RunConfig, parse_override

__all__ = ["RunConfig", "build_parser", "main", "parse_override"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pacer", description="Push-forward actor-critic-encourager experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one agent per seed in the config")
    t.add_argument("config", help="flat JSON config with dotted keys")
    t.add_argument("--override", nargs="+", default=[], metavar="KEY=VALUE",
                   help="replace config entries, e.g. seed=7 total_steps=100")
    t.add_argument("--cvar", type=float, choices=CVAR_LEVELS, help="train against CVaR at this level")
    t.add_argument("--quiet", action="store_true")

    e = sub.add_parser("eval", help="evaluate a checkpoint and print a JSON summary")
    e.add_argument("checkpoint")
    e.add_argument("--env", help="environment name (default: the one stored in the checkpoint)")
    e.add_argument("--episodes", type=int, default=10)
    e.add_argument("--cvar", type=float, choices=CVAR_LEVELS, help="also report the CVaR of episode returns")
    e.add_argument("--seed", type=int)

    pl = sub.add_parser("plot", help="SVG of smoothed eval return against step")
    pl.add_argument("csv", nargs="+")
    pl.add_argument("-o", "--output", required=True)
    pl.add_argument("--window", type=int, default=100)

    b = sub.add_parser("bimodality", help="mode-coverage test for a BimodalBandit policy")
    b.add_argument("checkpoint")
    b.add_argument("-n", "--n-samples", type=int, default=100_000)
    b.add_argument("--seed", type=int, default=0)

    q = sub.add_parser("quantiles", help="dump (tau_hat, z) for one state-action pair as CSV")
    q.add_argument("checkpoint")
    q.add_argument("--state", required=True, help="comma-separated")
    q.add_argument("--action", required=True, help="comma-separated")
    q.add_argument("-k", type=int, default=32)
    q.add_argument("-o", "--output")

    s = sub.add_parser("sample", help="dump n policy actions at one state as CSV")
    s.add_argument("checkpoint")
    s.add_argument("--state", required=True, help="comma-separated")
    s.add_argument("-n", type=int, default=1000)
    s.add_argument("--mode", choices=("train", "eval"), default="eval")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        return C.run_guarded(C.cmd_train, args.config, args.override, args.cvar, args.quiet)
    if args.command == "eval":
        return C.run_guarded(C.cmd_eval, args.checkpoint, args.env, args.episodes, args.cvar, args.seed)
    if args.command == "plot":
        return C.run_guarded(C.cmd_plot, args.csv, args.output, args.window)
    if args.command == "bimodality":
        return C.run_guarded(C.cmd_bimodality, args.checkpoint, args.n_samples, args.seed)
    if args.command == "quantiles":
        return C.run_guarded(C.cmd_quantiles, args.checkpoint, args.state, args.action, args.k, args.output)
    return C.run_guarded(C.cmd_sample, args.checkpoint, args.state, args.n, args.mode, args.seed, args.output)


if __name__ == "__main__":
    sys.exit(main())
