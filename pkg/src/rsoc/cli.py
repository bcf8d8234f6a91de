"""Command line entry point: ``rsoc run | list | compare``.

Exit codes: 0 when the experiment met its success threshold, 2 when it
completed but missed it, 1 on any error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import parallel
from .bench.compare import compare
from .bench.config import SOLVERS, ExperimentConfig
from .bench.experiments import UnknownExperimentError, get_experiment, registry
from .bench.runner import run_experiment

log = logging.getLogger("rsoc")


def build_parser():
    parser = argparse.ArgumentParser(prog="rsoc", description="Randomized smoothing for optimal control.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", nargs="?", help="registry name (optional with --config)")
    run.add_argument("--solver", choices=SOLVERS)
    run.add_argument("--samples", type=int, help="Monte-Carlo samples M")
    run.add_argument("--eps", type=float, help="initial (or fixed) noise level")
    run.add_argument("--eps-target", type=float, help="noise level ending the cascade")
    run.add_argument("--rho", type=float, help="noise shrink factor")
    run.add_argument("--gamma", type=float, help="tolerance shrink factor")
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int, help="worker threads for batched dynamics")
    run.add_argument("--plot", action="store_true", help="also write plot.svg")
    run.add_argument("--wall-clock", action="store_true", help="fill the wall_ms column")
    run.add_argument("--out", help="output directory (default $RSOC_OUT/<experiment>)")
    run.add_argument("--config", help="INI file, e.g. a config.resolved from an earlier run")

    sub.add_parser("list", help="list registered experiments")

    cmp_ = sub.add_parser("compare", help="overlay finished runs of one experiment")
    cmp_.add_argument("dirs", nargs="+", help="run directories")
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--x", choices=("iter", "dyn_evals"), default="iter", help="x axis")
    return parser


def resolve_config(args):
    """Registry defaults, then the config file, then command-line flags."""
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if args.experiment and args.experiment != cfg.name:
            raise ValueError(f"--config is for {cfg.name!r}, not {args.experiment!r}")
        get_experiment(cfg.name)
    elif args.experiment:
        cfg = get_experiment(args.experiment).default_config()
    else:
        raise ValueError("give an experiment name or --config")
    if args.solver:
        cfg.update("experiment", {"solver": args.solver})
    if args.seed is not None:
        cfg.update("experiment", {"seed": args.seed})
    if args.samples is not None:
        cfg.update("noise", {"samples": args.samples})
    if args.eps is not None:
        cfg.update("zeroth" if cfg.solver == "zeroth" else "noise", {"eps": args.eps})
    if args.eps_target is not None:
        cfg.update("schedule", {"eps_target": args.eps_target})
    if args.rho is not None:
        cfg.update("schedule", {"rho": args.rho})
    if args.gamma is not None:
        cfg.update("schedule", {"gamma": args.gamma})
    return cfg.validate()


def cmd_run(args):
    cfg = resolve_config(args)
    if args.threads is not None:
        parallel.set_threads(args.threads)
    out = args.out or os.path.join(os.environ.get("RSOC_OUT", "runs"), cfg.name)
    log.info("running %s with %s into %s", cfg.name, cfg.solver, out)
    result = run_experiment(cfg, out, plot=args.plot, wall_clock=args.wall_clock)
    print(result.summary())
    print(f"wrote {out}")
    return 0 if result.success else 2


def cmd_list(args):
    exps = registry()
    width = max(len(e.name) for e in exps)
    for e in exps:
        print(f"{e.name:<{width}}  {e.doc}")
    return 0


def cmd_compare(args):
    labels = compare(args.dirs, args.out, args.x)
    print(f"compared {', '.join(labels)} -> {args.out}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    handler = {"run": cmd_run, "list": cmd_list, "compare": cmd_compare}[args.command]
    try:
        return handler(args)
    except UnknownExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
