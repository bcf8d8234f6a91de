"""Trajectory-level zeroth-order descent (score-function gradient with baseline).

The whole control sequence u (N x n_u) is perturbed at once and the raw
dynamics are rolled out for every sample:

    g = 1/(M eps) sum_i (J(u + eps Z_i) - J(u)) Z_i

The unperturbed cost J(u) plays the role of the baseline; it leaves the
mean unchanged and removes most of the variance.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .core import DivergenceError, _as_controls, rollout_batch
from .ddp import IterationRecord, SolveReport
from .smoothing import draw_block

log = logging.getLogger(__name__)

# key space of the trajectory-level streams, kept apart from the per-timestep ones
_STREAM = 1 << 20


@dataclass(frozen=True)
class ZerothOrderSettings:
    eps: float = 0.1
    samples: int = 16
    seed: int = 0
    step_size: float = 1e-2
    iterations: int = 200
    target_cost: float | None = None
    baseline: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not self.step_size > 0:
            raise ValueError("step size must be > 0")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError("samples must be a positive integer")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError("iterations must be a positive integer")


def _costs(problem, controls):
    xs, ok = rollout_batch(problem.dynamics, problem.initial_state, controls)
    with np.errstate(all="ignore"):
        J = problem.terminal_cost.value(xs[:, -1]) + np.sum(
            problem.running_cost.value(xs[:, :-1], controls), axis=-1)
    ok &= np.isfinite(J)
    return J, ok


def trajectory_costs(problem, controls):
    """Costs of a batch (B, N, n_u) of control sequences under raw dynamics."""
    return _costs(problem, np.asarray(controls, dtype=float))


def zeroth_order_gradient(problem, controls, settings, epoch=0, cost_fn=None, base=None):
    """Score-function gradient estimate over the stacked controls, shape (N, n_u).

    ``cost_fn`` maps a batch of control sequences to (costs, ok mask) and
    defaults to raw-dynamics rollouts of ``problem``. Diverged samples are
    dropped; if all diverge a DivergenceError is raised.

    Returns:
        (gradient, number of samples used)
    """
    us = np.asarray(controls, dtype=float)
    cost_fn = cost_fn or (lambda u: _costs(problem, u))
    Z = draw_block(settings.seed, (_STREAM, epoch), (settings.samples,) + us.shape)
    J, ok = cost_fn(us[None] + settings.eps * Z)
    if not ok.any():
        raise DivergenceError(-1, "every perturbed rollout diverged")
    if not ok.all():
        log.warning("dropped %d diverged samples of %d", int((~ok).sum()), ok.size)
    if settings.baseline:
        if base is None:
            J0, ok0 = cost_fn(us[None])
            if not ok0[0]:
                raise DivergenceError(-1, "unperturbed rollout diverged")
            base = J0[0]
        w = J[ok] - base
    else:
        w = J[ok]
    return np.einsum("m,m...->...", w, Z[ok]) / (ok.sum() * settings.eps), int(ok.sum())


def solve_zeroth(problem, initial_controls=None, settings=None, callback=None):
    """Fixed-step descent u <- u - eta g with the estimator above.

    Records follow the DDP report layout; ``qu_inf`` holds max |g| and
    ``dyn_evals`` the cumulative number of single-step dynamics calls.
    ``callback(iter, controls)`` is called once per recorded iterate.
    """
    settings = settings or ZerothOrderSettings()
    t0 = time.perf_counter()
    us = problem.zero_controls() if initial_controls is None else \
        _as_controls(initial_controls, problem.control_dim).copy()
    N = problem.horizon
    evals = 0
    records = []
    status = "max-iterations"
    J, ok = _costs(problem, us[None])
    evals += N
    cost = float(J[0])
    if not ok[0]:
        return SolveReport("diverged", us, np.nan, np.inf, records, [], evals, 0, "zeroth")
    g_inf = np.nan
    for it in range(settings.iterations + 1):
        records.append(IterationRecord(it, 0, cost, g_inf, np.nan, settings.eps, np.nan,
                                       settings.step_size if it else 0.0, np.nan, evals,
                                       1e3 * (time.perf_counter() - t0)))
        if callback is not None:
            callback(it, us)
        if settings.target_cost is not None and cost <= settings.target_cost:
            status = "target-reached"
            break
        if it == settings.iterations:
            break
        try:
            g, used = zeroth_order_gradient(problem, us, settings, epoch=it, base=cost)
        except DivergenceError:
            status = "diverged"
            break
        evals += settings.samples * N
        g_inf = float(np.max(np.abs(g)))
        us = us - settings.step_size * g
        J, ok = _costs(problem, us[None])
        evals += N
        if not ok[0]:
            status = "diverged"
            break
        cost = float(J[0])
    xs, _ = rollout_batch(problem.dynamics, problem.initial_state, us[None])
    return SolveReport(status, us, xs[0], cost, records, [], evals, settings.iterations, "zeroth")
