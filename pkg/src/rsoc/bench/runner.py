"""Run experiments and write their CSV / SVG artifacts."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..adaptive import AdaptiveSchedule, solve_adaptive
from ..core import rollout_batch, trajectory_cost
from ..ddp import CSV_FIELDS, SolverSettings, solve
from ..smoothing import NoiseConfig
from ..zeroth import ZerothOrderSettings, solve_zeroth
from . import svg
from .config import ExperimentConfig
from .experiments import get_experiment

INT_FIELDS = ("iter", "stage", "dyn_evals")


@dataclass
class RunResult:
    """One solver run: its report, the raw rollout and the success verdict."""

    name: str
    solver: str
    config: ExperimentConfig
    report: object
    states: np.ndarray
    controls: np.ndarray
    raw_cost: float
    metric: float
    metric_name: str
    threshold: float
    out_dir: str | None = None

    @property
    def success(self):
        return bool(math.isfinite(self.metric) and self.metric < self.threshold)

    @property
    def final_qu_inf(self):
        return self.report.final_qu_inf

    def summary(self):
        return (f"{self.name} [{self.solver}] status={self.report.status} "
                f"cost={self.report.cost:.6g} raw_cost={self.raw_cost:.6g} "
                f"{self.metric_name}={self.metric:.4g} (threshold {self.threshold:g}) "
                f"dyn_evals={self.report.dyn_evals} -> {'success' if self.success else 'missed'}")


@dataclass
class CompositeResult:
    name: str
    config: ExperimentConfig
    children: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    success: bool = False
    verdict: str = ""
    out_dir: str | None = None

    def summary(self):
        lines = [f"{label}: {child.summary()}" for label, child in zip(self.labels, self.children)]
        lines.append(f"{self.name}: {self.verdict} -> {'success' if self.success else 'missed'}")
        return "\n".join(lines)


def solver_settings(cfg):
    return SolverSettings(**cfg["solver"])


def noise_config(cfg):
    n = cfg["noise"]
    return NoiseConfig(eps=n["eps"], samples=n["samples"], distribution=n["distribution"],
                       seed=cfg["experiment"]["seed"], estimator=n["estimator"])


def schedule(cfg):
    s = cfg["schedule"]
    return AdaptiveSchedule(eps0=cfg["noise"]["eps"], alpha0=s["alpha0"], eps_target=s["eps_target"],
                            alpha_target=s["alpha_target"], rho=s["rho"], gamma=s["gamma"],
                            stall_budget=s["stall_budget"])


def zeroth_settings(cfg):
    z = cfg["zeroth"]
    return ZerothOrderSettings(eps=z["eps"], samples=z["samples"], seed=cfg["experiment"]["seed"],
                               step_size=z["step_size"], iterations=z["iterations"])


def run_solver(problem, cfg, solver=None, callback=None):
    """Dispatch on the solver name; returns a SolveReport."""
    solver = solver or cfg.solver
    settings = solver_settings(cfg)
    if solver == "ddp":
        return solve(problem, None, settings, callback=callback)
    if solver == "rddp":
        return solve_adaptive(problem, None, schedule(cfg), settings, noise_config(cfg), callback=callback)
    if solver == "rddp-fixed":
        sched = schedule(cfg)
        noise = noise_config(cfg)
        if noise.eps == 0:
            return solve(problem, None, settings, callback=callback)
        # same iteration budget as the cascade, final tolerance throughout
        budget = sched.stall_budget * len(sched.stages())
        return solve(problem, None, settings.replace(max_iterations=budget), noise,
                     alpha_tol=sched.alpha_target, callback=callback)
    if solver == "zeroth":
        return solve_zeroth(problem, None, zeroth_settings(cfg), callback=callback)
    raise ValueError(f"unknown solver {solver!r}")


def _evaluate(setup, controls):
    problem = setup.problem
    xs, ok = rollout_batch(problem.dynamics, problem.initial_state, np.asarray(controls)[None])
    states = xs[0]
    if not ok[0]:
        return states, math.inf, math.inf
    cost = trajectory_cost(problem, states, controls)
    return states, cost, setup.measure(states, controls, cost)


def run_single(cfg, out_dir=None, plot=False, wall_clock=False):
    cfg = cfg.copy().validate()
    exp = get_experiment(cfg.name)
    setup = exp.build_setup(cfg)
    report = run_solver(setup.problem, cfg)
    states, raw_cost, metric = _evaluate(setup, report.controls)
    result = RunResult(cfg.name, cfg.solver, cfg, report, states, np.asarray(report.controls),
                       raw_cost, metric, setup.metric, cfg["experiment"]["threshold"], out_dir)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_report(os.path.join(out_dir, "report.csv"), report.records, wall_clock)
        write_trajectory(os.path.join(out_dir, "trajectory.csv"), states, result.controls,
                         setup.problem.dt)
        write_config(os.path.join(out_dir, "config.resolved"), cfg)
        if plot:
            with open(os.path.join(out_dir, "plot.svg"), "w") as fh:
                fh.write(report_svg(cfg.name, [(cfg.solver, report.records)]))
    return result


def _sweep_verdict(children, labels, samples):
    by_m = dict(zip(samples, children))
    ref = by_m.get(8, children[0])
    ref_m = 8 if 8 in by_m else samples[0]
    spread = max(abs(c.raw_cost - ref.raw_cost) / abs(ref.raw_cost) for m, c in by_m.items() if m >= ref_m)
    ok = ref.success and spread < 0.2
    return ok, f"M={ref_m} {ref.metric_name}={ref.metric:.4g}; largest change for larger M {100 * spread:.1f}%"


def _compare_verdict(children, solvers):
    by = dict(zip(solvers, children))
    if not {"ddp", "rddp", "rddp-fixed"} <= set(by):
        ok = all(c.success for c in children)
        return ok, "all runs " + ("met" if ok else "did not all meet") + " the threshold"
    ad, fx, dd = by["rddp"], by["rddp-fixed"], by["ddp"]
    ok = ad.final_qu_inf < fx.final_qu_inf and ad.raw_cost < dd.raw_cost and fx.raw_cost < dd.raw_cost
    return ok, (f"final |Q_u|_inf adaptive {ad.final_qu_inf:.3g} vs fixed {fx.final_qu_inf:.3g}; "
                f"raw cost ddp {dd.raw_cost:.4g}, adaptive {ad.raw_cost:.4g}, fixed {fx.raw_cost:.4g}")


def run_composite(cfg, out_dir=None, plot=False, wall_clock=False):
    exp = get_experiment(cfg.name)
    comp = cfg["composite"]
    children, labels = [], []
    if exp.composite == "samples":
        values = [int(m) for m in comp["samples"]]
        variants = [(f"M{m}", {"noise": {"samples": m}}) for m in values]
    else:
        values = list(comp["solvers"])
        variants = [(s, {"experiment": {"solver": s}}) for s in values]
    for label, overrides in variants:
        sub = cfg.copy()
        for section, vals in overrides.items():
            sub.update(section, vals)
        sub_dir = None if out_dir is None else os.path.join(out_dir, label)
        children.append(run_single(sub, sub_dir, plot=plot, wall_clock=wall_clock))
        labels.append(label)
    if exp.composite == "samples":
        ok, verdict = _sweep_verdict(children, labels, values)
    else:
        ok, verdict = _compare_verdict(children, values)
    result = CompositeResult(cfg.name, cfg, children, labels, ok, verdict, out_dir)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_config(os.path.join(out_dir, "config.resolved"), cfg)
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "solver", "samples", "status", "cost", "raw_cost", "qu_inf",
                        "dyn_evals", "metric", "success"])
            for label, c in zip(labels, children):
                w.writerow([label, c.solver, c.config["noise"]["samples"], c.report.status,
                            _fmt(c.report.cost), _fmt(c.raw_cost), _fmt(c.final_qu_inf),
                            c.report.dyn_evals, _fmt(c.metric), int(c.success)])
        if plot:
            with open(os.path.join(out_dir, "plot.svg"), "w") as fh:
                fh.write(report_svg(cfg.name, [(l, c.report.records) for l, c in zip(labels, children)]))
    return result


def run_experiment(cfg, out_dir=None, plot=False, wall_clock=False):
    """Run one configured experiment; composite experiments write one subdirectory per run."""
    exp = get_experiment(cfg.name)
    if exp.composite is not None:
        return run_composite(cfg, out_dir, plot, wall_clock)
    return run_single(cfg, out_dir, plot, wall_clock)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def report_rows(records, wall_clock=False):
    for r in records:
        row = []
        for f in CSV_FIELDS:
            v = getattr(r, f)
            if f == "wall_ms" and not wall_clock:
                row.append("")
            elif f in INT_FIELDS:
                row.append(str(int(v)))
            else:
                row.append(_fmt(v))
        yield row


def write_report(path, records, wall_clock=False):
    """report.csv: one row per recorded iterate; NaN cells are left empty.

    Wall-clock time changes from run to run, so it is only filled in on
    request to keep the file reproducible.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        w.writerows(report_rows(records, wall_clock))


def write_trajectory(path, states, controls, dt):
    nx = states.shape[1]
    nu = controls.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(nx)] + [f"u{j}" for j in range(nu)])
        for t in range(states.shape[0]):
            u = controls[t] if t < controls.shape[0] else [math.nan] * nu
            w.writerow([_fmt(t * dt)] + [_fmt(v) for v in states[t]] + [_fmt(v) for v in u])


def write_config(path, cfg):
    with open(path, "w") as fh:
        fh.write(cfg.to_ini())


def read_report(path):
    """report.csv back into a list of dicts with floats (empty cells become NaN)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for row in reader:
            rows.append({k: (float(v) if v != "" else math.nan) for k, v in zip(header, row)})
    return rows


def _stage_starts(records):
    out = []
    prev = None
    for r in records:
        stage = r.stage if hasattr(r, "stage") else r["stage"]
        it = r.iter if hasattr(r, "iter") else r["iter"]
        if prev is not None and stage != prev:
            out.append(it)
        prev = stage
    return out


def report_svg(title, runs, x_field="iter"):
    """Cost and |Q_u|_inf against ``x_field``; stage changes of a single run as vertical rules."""
    def get(r, f):
        return getattr(r, f) if hasattr(r, f) else r[f]

    xlabel = "iteration" if x_field == "iter" else "dynamics evaluations"
    cost = svg.Panel(f"{title}: cost", xlabel, "cost")
    qu = svg.Panel(f"{title}: |Q_u|_inf", xlabel, "|Q_u|_inf")
    for label, records in runs:
        xs = [get(r, x_field) for r in records]
        cost.add(label, xs, [get(r, "cost") for r in records])
        qu.add(label, xs, [get(r, "qu_inf") for r in records])
    if len(runs) == 1 and x_field == "iter":
        starts = _stage_starts(runs[0][1])
        cost.add_vlines(starts)
        qu.add_vlines(starts)
    return svg.render([cost, qu])
