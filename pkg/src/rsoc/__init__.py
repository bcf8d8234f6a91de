"""Randomized-smoothing DDP for nonsmooth trajectory optimization."""
from .adaptive import AdaptiveSchedule, solve_adaptive
from .core import DivergenceError, Trajectory, TrajectoryProblem, rollout, total_cost
from .ddp import SolverSettings, solve, trajectory_gradient
from .smoothing import NoiseConfig
from .zeroth import ZerothOrderSettings, solve_zeroth

__all__ = [
    "AdaptiveSchedule", "DivergenceError", "NoiseConfig", "SolverSettings", "Trajectory",
    "TrajectoryProblem", "ZerothOrderSettings", "rollout", "solve", "solve_adaptive",
    "solve_zeroth", "total_cost", "trajectory_gradient",
]
