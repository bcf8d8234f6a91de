"""Discrete optimal-control problems, trajectories and rollouts.

The problem solved everywhere in this package is

    min_u  l_N(x_N) + sum_{t<N} l_t(x_t, u_t)
    s.t.   x_{t+1} = f(x_t, u_t),  x_0 = x0

with states stacked as plain coordinate vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DivergenceError(FloatingPointError):
    """A rollout produced a non-finite state."""

    def __init__(self, timestep, message=None):
        self.timestep = timestep
        super().__init__(message or f"non-finite state produced at timestep {timestep}")


@dataclass(frozen=True)
class TrajectoryProblem:
    """Finite-horizon problem: dynamics, stage costs, horizon and initial state.

    ``running_cost`` and ``terminal_cost`` are cost-stage objects (see
    :mod:`rsoc.costs`); ``dynamics`` is any object following the
    :class:`rsoc.models.DynamicsModel` contract.
    """

    dynamics: object
    running_cost: object
    terminal_cost: object
    initial_state: np.ndarray
    horizon: int
    dt: float | None = None

    def __post_init__(self):
        x0 = np.array(self.initial_state, dtype=float).reshape(-1)
        x0.setflags(write=False)
        object.__setattr__(self, "initial_state", x0)
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))
        dt = getattr(self.dynamics, "dt", None) if self.dt is None else self.dt
        if dt is None or not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        object.__setattr__(self, "dt", float(dt))
        if x0.shape[0] != self.dynamics.state_dim:
            raise ValueError(
                f"initial state has dimension {x0.shape[0]}, "
                f"dynamics expect {self.dynamics.state_dim}"
            )

    @property
    def state_dim(self):
        return self.dynamics.state_dim

    @property
    def control_dim(self):
        return self.dynamics.control_dim

    def zero_controls(self):
        return np.zeros((self.horizon, self.control_dim))

    def with_dynamics(self, dynamics):
        return TrajectoryProblem(
            dynamics, self.running_cost, self.terminal_cost,
            self.initial_state, self.horizon, self.dt,
        )

    def scaled(self, factor):
        """Same problem with every cost stage multiplied by ``factor``."""
        from .costs import ScaledCost

        return TrajectoryProblem(
            self.dynamics,
            ScaledCost(self.running_cost, factor),
            ScaledCost(self.terminal_cost, factor),
            self.initial_state, self.horizon, self.dt,
        )


@dataclass(frozen=True)
class Trajectory:
    """States x_0..x_N, shape (N+1, n_x), and controls u_0..u_{N-1}, shape (N, n_u)."""

    states: np.ndarray
    controls: np.ndarray
    feasible: bool = field(default=False, compare=False)

    def __post_init__(self):
        xs = np.array(self.states, dtype=float)
        us = np.array(self.controls, dtype=float)
        if us.ndim == 1:
            us = us[:, None]
        if xs.ndim != 2 or us.ndim != 2 or xs.shape[0] != us.shape[0] + 1:
            raise ValueError(
                f"need N+1 states and N controls, got states {xs.shape} and controls {us.shape}"
            )
        xs.setflags(write=False)
        us.setflags(write=False)
        object.__setattr__(self, "states", xs)
        object.__setattr__(self, "controls", us)

    @property
    def horizon(self):
        return self.controls.shape[0]


def _as_controls(controls, control_dim):
    us = np.asarray(controls, dtype=float)
    if us.ndim == 1 and control_dim == 1:
        us = us[:, None]
    if us.ndim != 2 or us.shape[1] != control_dim:
        raise ValueError(f"controls must have shape (N, {control_dim}), got {us.shape}")
    if us.shape[0] == 0:
        raise ValueError("control sequence is empty")
    return us


def rollout(dynamics, initial_state, controls):
    """Integrate ``controls`` through ``dynamics`` from ``initial_state``.

    Raises:
        ValueError: on dimension mismatch or an empty control sequence.
        DivergenceError: when a state becomes non-finite.
    """
    us = _as_controls(controls, dynamics.control_dim)
    x = np.array(initial_state, dtype=float).reshape(-1)
    if x.shape[0] != dynamics.state_dim:
        raise ValueError(
            f"initial state has dimension {x.shape[0]}, dynamics expect {dynamics.state_dim}"
        )
    xs = np.empty((us.shape[0] + 1, x.shape[0]))
    xs[0] = x
    for t in range(us.shape[0]):
        x = dynamics.step(x, us[t])
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t)
        xs[t + 1] = x
    return Trajectory(xs, us, feasible=True)


def rollout_batch(dynamics, initial_state, controls):
    """Roll out a batch of control sequences, shape (B, N, n_u), in lockstep.

    Returns states of shape (B, N+1, n_x) and a boolean mask of the samples
    that stayed finite. Diverged samples keep NaN states from the first bad step.
    """
    us = np.asarray(controls, dtype=float)
    batch, horizon = us.shape[:2]
    x = np.broadcast_to(np.asarray(initial_state, dtype=float), (batch, dynamics.state_dim)).copy()
    xs = np.empty((batch, horizon + 1, dynamics.state_dim))
    xs[:, 0] = x
    ok = np.ones(batch, dtype=bool)
    with np.errstate(all="ignore"):
        for t in range(horizon):
            x = dynamics.step(x, us[:, t])
            bad = ~np.all(np.isfinite(x), axis=-1)
            if bad.any():
                ok &= ~bad
                x[bad] = np.nan
            xs[:, t + 1] = x
    return xs, ok


def total_cost(problem, trajectory):
    """l_N(x_N) + sum_t l_t(x_t, u_t) for a trajectory of matching horizon."""
    if trajectory.horizon != problem.horizon:
        raise ValueError(
            f"trajectory horizon {trajectory.horizon} does not match problem horizon {problem.horizon}"
        )
    return trajectory_cost(problem, trajectory.states, trajectory.controls)


def trajectory_cost(problem, states, controls):
    running = problem.running_cost.value(states[:-1], controls)
    return float(problem.terminal_cost.value(states[-1]) + np.sum(running))
