"""Experiment registry: model, cost and default settings of every task.

Each experiment turns a configuration into a trajectory problem plus a
success measure evaluated on the raw (noise-free) rollout of the returned
controls. Composite experiments (``sample-sweep``, ``schedule-compare``)
re-run a base experiment under several settings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import TrajectoryProblem
from ..costs import QuadraticGoalCost
from ..models import CartPole, Cube, DoublePendulum, Hopper2D, Pendulum, Quadrotor2D
from .config import ExperimentConfig


@dataclass(frozen=True)
class Setup:
    """A built experiment.

    ``measure(states, controls, cost)`` returns the scalar compared against
    the experiment threshold (smaller is better).
    """

    problem: TrajectoryProblem
    measure: Callable
    metric: str
    model: object = None


@dataclass(frozen=True)
class Experiment:
    name: str
    doc: str
    defaults: dict
    build: Callable | None = None
    base: str | None = None
    composite: str | None = None
    tags: tuple = field(default_factory=tuple)

    def default_config(self):
        sections = {k: dict(v) for k, v in self.defaults.items()}
        if self.base is not None:
            merged = {k: dict(v) for k, v in REGISTRY[self.base].defaults.items()}
            for section, values in sections.items():
                merged.setdefault(section, {}).update(values)
            sections = merged
        sections.setdefault("experiment", {})["name"] = self.name
        return ExperimentConfig(sections)

    def build_setup(self, cfg):
        builder = self.build if self.base is None else REGISTRY[self.base].build
        return builder(cfg)


def _initial_state(cfg, default):
    x0 = cfg["experiment"].get("initial_state")
    return np.array(default if x0 is None else x0, dtype=float)


def _goal_cost(cfg, goal_map):
    c = cfg["cost"]
    u_ref = None if c["u_ref"] is None else np.atleast_1d(np.asarray(c["u_ref"], dtype=float))
    return QuadraticGoalCost(goal_map, np.atleast_1d(np.asarray(c["target"], dtype=float)),
                             u_ref=u_ref, w_p=c["w_p"], w_u=c["w_u"])


def _problem(cfg, model, goal_map, x0):
    cost = _goal_cost(cfg, goal_map)
    return TrajectoryProblem(model, cost.running, cost.terminal, x0, cfg["experiment"]["horizon"])


def _goal_distance(goal_map, target):
    target = np.atleast_1d(np.asarray(target, dtype=float))

    def measure(states, controls, cost):
        return float(np.linalg.norm(goal_map(states[-1]) - target))

    return measure


def _raw_cost(states, controls, cost):
    return float(cost)


def _pendulum(cfg):
    model = Pendulum(dt=cfg["experiment"]["dt"], **cfg["model"])
    tip = model.tip()
    problem = _problem(cfg, model, tip, _initial_state(cfg, [0.0, 0.0]))
    return Setup(problem, _goal_distance(tip, cfg["cost"]["target"]), "tip distance [m]", model)


def _double_pendulum(cfg):
    kw = dict(cfg["model"])
    for key in ("masses", "lengths", "friction"):
        if key in kw and kw[key] is not None:
            kw[key] = tuple(np.atleast_1d(kw[key]).tolist())
    model = DoublePendulum(dt=cfg["experiment"]["dt"], **kw)
    tip = model.tip()
    problem = _problem(cfg, model, tip, _initial_state(cfg, [0.0] * 4))
    return Setup(problem, _goal_distance(tip, cfg["cost"]["target"]), "tip distance [m]", model)


def _cartpole(cfg):
    kw = dict(cfg["model"])
    if "friction" in kw and kw["friction"] is not None:
        kw["friction"] = tuple(np.atleast_1d(kw["friction"]).tolist())
    model = CartPole(dt=cfg["experiment"]["dt"], **kw)
    problem = _problem(cfg, model, model.goal_map(), _initial_state(cfg, [0.0, np.pi, 0.0, 0.0]))
    return Setup(problem, _raw_cost, "raw cost", model)


def _cube(cfg):
    model = Cube(dt=cfg["experiment"]["dt"], **cfg["model"])
    pos = model.position()
    problem = _problem(cfg, model, pos, _initial_state(cfg, [0.0] * 4))
    return Setup(problem, _goal_distance(pos, cfg["cost"]["target"]), "cube distance [m]", model)


def _quadrotor(cfg):
    model = Quadrotor2D(dt=cfg["experiment"]["dt"], **cfg["model"])
    pos = model.position()
    problem = _problem(cfg, model, pos, _initial_state(cfg, [0.0] * 6))
    return Setup(problem, _goal_distance(pos, cfg["cost"]["target"]), "base distance [m]", model)


def _hopper(cfg):
    model = Hopper2D(dt=cfg["experiment"]["dt"], **cfg["model"])
    z0 = model.standing_height()
    x0 = _initial_state(cfg, [z0, 0.0, 0.0, 0.0, 0.0, 0.0])
    # the target is given as a rise above the standing base height
    c = cfg["cost"]
    target = np.atleast_1d(np.asarray(c["target"], dtype=float)) + x0[0]
    cost = QuadraticGoalCost(model.base_height(), target, w_p=c["w_p"], w_u=c["w_u"],
                             u_ref=None if c["u_ref"] is None else np.asarray(c["u_ref"], dtype=float))
    problem = TrajectoryProblem(model, cost.running, cost.terminal, x0, cfg["experiment"]["horizon"])
    return Setup(problem, _goal_distance(model.base_height(), target), "base height error [m]", model)


PENDULUM = {
    "experiment": {"horizon": 400, "dt": 5e-3, "seed": 1, "threshold": 0.1},
    "model": {"mass": 1.0, "length": 1.0},
    "cost": {"w_p": 2.0, "w_u": 2e-5, "target": [0.0, 1.0]},
    "noise": {"eps": 1.0, "samples": 4},
    "schedule": {"alpha0": 1e-2, "stall_budget": 20},
    "zeroth": {"eps": 0.3, "samples": 16, "step_size": 100.0, "iterations": 300},
}

# stiction holds the hanging pendulum, so the first gradient is tiny: start
# from a lower tolerance and more noise than the frictionless task
PENDULUM_FRICTION = {
    **PENDULUM,
    "model": {"mass": 1.0, "length": 1.0, "friction": 0.5},
    "noise": {"eps": 2.0, "samples": 4},
    "schedule": {"alpha0": 1e-3, "stall_budget": 20},
}

# with few samples the smoothed dynamics carry an offset of order eps, so the
# cascade runs down to eps/64 to keep raw and smoothed optima close
CARTPOLE = {
    "experiment": {"horizon": 100, "dt": 0.02, "seed": 0, "threshold": 0.5},
    "model": {"friction": [0.1, 0.1]},
    "cost": {"w_p": 2.0, "w_u": 1e-3, "target": [1.0, 1.0, 1.0]},
    "noise": {"eps": 1.0, "samples": 8},
    "schedule": {"alpha0": 1e-2, "stall_budget": 20, "eps_target": 0.015625},
    "zeroth": {"eps": 0.3, "samples": 16, "step_size": 1.0, "iterations": 200},
}

CUBE_LIFT = {
    "experiment": {"horizon": 100, "dt": 0.01, "seed": 0, "threshold": 0.02},
    "model": {"mass": 0.01},
    "cost": {"w_p": 10.0, "w_u": 1e-2, "target": [0.0, 0.2]},
    "noise": {"eps": 0.1, "samples": 8},
    "schedule": {"alpha0": 1e-3, "stall_budget": 20},
    "zeroth": {"eps": 0.05, "samples": 16, "step_size": 1e-2, "iterations": 200},
}

CUBE_SLIDE = {
    "experiment": {"horizon": 100, "dt": 0.01, "seed": 0, "threshold": 0.02},
    "model": {"mass": 0.01},
    "cost": {"w_p": 10.0, "w_u": 1e-2, "target": [0.2, 0.0]},
    "noise": {"eps": 0.1, "samples": 8},
    "schedule": {"alpha0": 1e-3, "stall_budget": 20},
    "zeroth": {"eps": 0.05, "samples": 16, "step_size": 1e-2, "iterations": 200},
}

DOUBLE_PENDULUM = {
    "experiment": {"horizon": 200, "dt": 0.01, "seed": 0, "threshold": 0.2},
    "model": {},
    "cost": {"w_p": 2.0, "w_u": 1e-4, "target": [0.0, 2.0]},
    "noise": {"eps": 2.0, "samples": 4},
    "schedule": {"alpha0": 1e-2, "stall_budget": 20},
    "zeroth": {"eps": 0.3, "samples": 16, "step_size": 10.0, "iterations": 200},
}

QUADROTOR = {
    "experiment": {"horizon": 25, "dt": 0.04, "seed": 0, "threshold": 0.2},
    "model": {},
    "cost": {"w_p": 4.0, "w_u": 1e-3, "target": [0.0, 1.0]},
    "noise": {"eps": 10.0, "samples": 8},
    "schedule": {"alpha0": 1e-3, "stall_budget": 50},
    "zeroth": {"eps": 1.0, "samples": 16, "step_size": 1.0, "iterations": 200},
}

HOPPER = {
    "experiment": {"horizon": 60, "dt": 0.01, "seed": 0, "threshold": 0.1},
    "model": {"thigh_mass": 0.5, "shank_mass": 0.5, "damping": [0.0, 1.0, 1.0]},
    "cost": {"w_p": 100.0, "w_u": 1e-5, "target": [0.3]},
    "noise": {"eps": 1.0, "samples": 8},
    "schedule": {"alpha0": 1e-2, "stall_budget": 30},
    "zeroth": {"eps": 0.3, "samples": 16, "step_size": 1e-3, "iterations": 200},
}

_EXPERIMENTS = [
    Experiment("pendulum-swingup", "Swing a pendulum from hanging to upright; DDP stalls at u = 0.",
               PENDULUM, _pendulum),
    Experiment("pendulum-friction", "Pendulum swing-up with Coulomb friction on the joint.",
               PENDULUM_FRICTION, _pendulum),
    Experiment("double-pendulum", "Shoulder-actuated double pendulum swing-up.",
               DOUBLE_PENDULUM, _double_pendulum),
    Experiment("cartpole-friction", "Carry an upright pole one meter with dry friction on cart and joint.",
               CARTPOLE, _cartpole),
    Experiment("cube-lift", "Lift a cube resting on a table to a target height.", CUBE_LIFT, _cube),
    Experiment("cube-slide", "Slide a cube along a table against Coulomb friction.", CUBE_SLIDE, _cube),
    Experiment("quadrotor-takeoff-2d", "Planar quadrotor takeoff from the ground to one meter up.",
               QUADROTOR, _quadrotor),
    Experiment("hopper-jump-2d", "Single leg jumping from a stretched stance to 0.3 m higher.",
               HOPPER, _hopper),
    Experiment("sample-sweep", "RDDP on cube-lift for several sample counts M.",
               {"composite": {"samples": [1, 2, 4, 8, 16, 32, 64]}}, base="cube-lift",
               composite="samples"),
    Experiment("schedule-compare", "DDP vs adaptive vs fixed-noise RDDP on cube-lift.",
               {"composite": {"solvers": ["ddp", "rddp", "rddp-fixed"]}}, base="cube-lift",
               composite="solvers"),
]

REGISTRY = {e.name: e for e in _EXPERIMENTS}


class UnknownExperimentError(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown experiment {self.name!r}; available: {', '.join(REGISTRY)}"


def registry():
    """All experiment descriptors, in a fixed order."""
    return list(_EXPERIMENTS)


def get_experiment(name):
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownExperimentError(name) from None
