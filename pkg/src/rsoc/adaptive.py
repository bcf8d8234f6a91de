"""Cascade of smoothed DDP problems with geometrically shrinking noise.

Each stage runs DDP on f_eps until the Q_u norm drops below alpha_tol (or the
stall budget runs out), warm-starts the next stage from its controls, then
divides eps by rho and alpha_tol by gamma. The cascade stops once both
eps < eps_target and alpha_tol < alpha_target.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .ddp import SolveReport, SolverSettings, solve
from .smoothing import NoiseConfig


@dataclass(frozen=True)
class AdaptiveSchedule:
    """Initial noise/tolerance, targets and shrink factors.

    Targets left as None default to one sixteenth of the initial values.
    """

    eps0: float = 1.0
    alpha0: float = 1e-2
    eps_target: float | None = None
    alpha_target: float | None = None
    rho: float = 2.0
    gamma: float = 2.0
    stall_budget: int = 50
    max_stages: int = 64

    def __post_init__(self):
        if self.eps_target is None:
            object.__setattr__(self, "eps_target", self.eps0 / 16)
        if self.alpha_target is None:
            object.__setattr__(self, "alpha_target", self.alpha0 / 16)
        if not (self.rho > 1 and self.gamma > 1):
            raise ValueError("shrink factors rho and gamma must be > 1")
        if self.eps0 < 0 or self.eps_target < 0:
            raise ValueError("noise levels must be >= 0")
        if self.eps0 > 0 and not self.eps0 >= self.eps_target:
            raise ValueError("need eps0 >= eps_target")
        if not (self.alpha0 > 0 and self.alpha_target > 0 and self.alpha0 >= self.alpha_target):
            raise ValueError("need alpha0 >= alpha_target > 0")
        if int(self.stall_budget) != self.stall_budget or self.stall_budget < 1:
            raise ValueError("stall_budget must be a positive integer")

    def stages(self):
        """The (eps, alpha_tol) pairs the cascade visits."""
        out = []
        eps, alpha = self.eps0, self.alpha0
        while True:
            out.append((eps, alpha))
            eps, alpha = eps / self.rho, alpha / self.gamma
            if (eps < self.eps_target and alpha < self.alpha_target) or len(out) >= self.max_stages:
                return out


@dataclass
class StageInfo:
    index: int
    eps: float
    alpha_tol: float
    first_iter: int
    status: str
    stalled: bool
    warm_start_cost: float
    final_cost: float


@dataclass
class AdaptiveReport(SolveReport):
    """SolveReport of the whole cascade plus per-stage bookkeeping.

    ``stage_starts`` are the iteration indices where each stage begins.
    """

    stages: list = field(default_factory=list)

    @property
    def stage_starts(self):
        return [s.first_iter for s in self.stages]

    @property
    def stalled_stages(self):
        return [s.index for s in self.stages if s.stalled]


def solve_adaptive(problem, initial_controls=None, schedule=None, settings=None, noise=None,
                   callback=None):
    """Run the noise cascade; with eps0 = 0 this is exactly :func:`rsoc.ddp.solve`.

    The sample count, seed and estimator come from ``noise``; its ``eps`` is
    ignored in favour of the schedule. Each stage starts a fresh noise epoch.
    ``callback(iter, controls)`` is called once per recorded iterate.
    """
    schedule = schedule or AdaptiveSchedule()
    settings = settings or SolverSettings()
    noise = noise or NoiseConfig()
    if schedule.eps0 == 0:
        return solve(problem, initial_controls, settings, callback=callback)
    inner = settings.replace(max_iterations=schedule.stall_budget)
    t0 = time.perf_counter()
    controls = initial_controls
    records, accepted, stages = [], [], []
    iter_offset, evals, epoch = 0, 0, 0
    rep = None
    feedback = None
    for index, (eps, alpha) in enumerate(schedule.stages()):
        rep = solve(problem, controls, inner, noise.with_eps(eps), epoch=epoch, stage=index,
                    alpha_tol=alpha, iter_offset=iter_offset, evals_offset=evals, t0=t0,
                    feedback=feedback, callback=callback)
        stages.append(StageInfo(index, eps, alpha, iter_offset, rep.status,
                                rep.status != "converged", rep.records[0].cost, rep.cost))
        records.extend(rep.records)
        accepted.extend(rep.accepted)
        # the next stage's row 0 restates this iterate under new noise
        iter_offset = rep.records[-1].iter + 1
        evals = rep.dyn_evals
        epoch = rep.epoch + 1
        controls = rep.controls
        if rep.status.startswith("diverged"):
            break
        if rep.gains is not None:
            feedback = (rep.states, rep.gains)
    status = "converged" if all(not s.stalled for s in stages) else \
        ("stalled" if not rep.status.startswith("diverged") else rep.status)
    return AdaptiveReport(status, rep.controls, rep.states, rep.cost, records, accepted,
                          evals, rep.epoch, "rddp", rep.gains, stages)
