"""Experiment registry, configuration files and the run/compare harness."""
from .compare import MismatchedRunsError, compare
from .config import SOLVERS, ExperimentConfig
from .experiments import Experiment, Setup, UnknownExperimentError, get_experiment, registry
from .runner import CompositeResult, RunResult, read_report, run_experiment, run_solver

__all__ = [
    "SOLVERS", "CompositeResult", "Experiment", "ExperimentConfig", "MismatchedRunsError",
    "RunResult", "Setup", "UnknownExperimentError", "compare", "get_experiment", "read_report",
    "registry", "run_experiment", "run_solver",
]
