"""Swing a pendulum up with plain DDP, adaptive RDDP and the zeroth-order baseline.

Run: python demos/pendulum_swingup.py [--horizon N]
"""
import argparse

from rsoc.bench.experiments import get_experiment
from rsoc.bench.runner import run_single

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--horizon", type=int, default=None)
args = parser.parse_args()

exp = get_experiment("pendulum-swingup")
for solver in ("ddp", "rddp", "zeroth"):
    cfg = exp.default_config()
    cfg.update("experiment", {"solver": solver})
    if args.horizon:
        cfg.update("experiment", {"horizon": args.horizon})
    res = run_single(cfg)
    verdict = "ok" if res.metric < res.threshold else "miss"
    print(f"{solver:7s} raw cost {res.raw_cost:8.4f}  {res.metric_name} {res.metric:.3f} ({verdict})")
