"""Gauss-Newton DDP (iLQR) on raw or randomly smoothed dynamics.

Backward pass, per stage t with V' = V_{t+1}:

    Q_x  = l_x  + f_x' V'_x          Q_u  = l_u  + f_u' V'_x
    Q_xx = l_xx + f_x' V'_xx f_x     Q_uu = l_uu + f_u' V'_xx f_u
    Q_ux = l_ux + f_u' V'_xx f_x
    k = -(Q_uu + mu I)^-1 Q_u        K = -(Q_uu + mu I)^-1 Q_ux

(plus V'_x . f_** terms when the model supplies second-order tensors).
The forward pass rolls u = u_bar + alpha k + K (x - x_bar) through the same
dynamics, with a backtracking ladder on alpha.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .contact import ContactSolverError
from .core import DivergenceError, _as_controls
from .smoothing import (NoiseConfig, draw_noise, smoothed_jacobian_zeroth_order,
                        smoothed_jacobians_first_order, smoothed_step)

SOLVER_ERRORS = (FloatingPointError, ContactSolverError, np.linalg.LinAlgError)
CSV_FIELDS = ("iter", "stage", "cost", "qu_inf", "qu_w", "eps", "alpha_tol",
              "ls_alpha", "reg", "dyn_evals", "wall_ms")


@dataclass(frozen=True)
class SolverSettings:
    """Iteration budget, Levenberg-Marquardt schedule and line search.

    ``tol`` is the stopping threshold on the Q_u norm selected by ``norm``
    (``"weighted"`` for sqrt(sum Q_u' Q_uu^-1 Q_u), ``"inf"`` for max |Q_u|).
    """

    max_iterations: int = 100
    tol: float = 1e-6
    reg_init: float = 1e-9
    reg_min: float = 1e-9
    reg_max: float = 1e6
    reg_increase: float = 10.0
    reg_decrease: float = 2.0
    ladder: tuple = tuple(2.0 ** -i for i in range(11))
    accept_ratio: float = 1e-4
    norm: str = "weighted"
    use_second_order: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(float(a) for a in self.ladder))
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        for name in ("tol", "reg_init", "reg_min", "reg_max", "accept_ratio"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not (self.reg_increase > 1 and self.reg_decrease > 1):
            raise ValueError("regularization factors must be > 1")
        if not self.reg_min <= self.reg_init <= self.reg_max:
            raise ValueError("need reg_min <= reg_init <= reg_max")
        a = np.asarray(self.ladder)
        if a.size == 0 or np.any(a <= 0) or a[0] > 1 or np.any(np.diff(a) >= 0):
            raise ValueError("line-search ladder must be strictly decreasing within (0, 1]")
        if self.norm not in ("weighted", "inf"):
            raise ValueError("norm must be 'weighted' or 'inf'")

    def replace(self, **kw):
        from dataclasses import replace
        return replace(self, **kw)


class DynamicsOracle:
    """The dynamics a solver sees at each timestep: raw, or smoothed with frozen samples.

    Samples are drawn per (epoch, t) and stay fixed until :meth:`set_epoch`
    is called. ``evals`` counts calls of the underlying step map (a Jacobian
    is charged ``model.jacobian_evals()``).
    """

    def __init__(self, model, horizon, noise=None):
        self.model = model
        self.horizon = horizon
        self.noise = noise if noise is not None else NoiseConfig(0.0)
        self.evals = 0
        self.epoch = None
        self.Z = None
        self._jac_cost = model.jacobian_evals() if hasattr(model, "jacobian_evals") else \
            2 * (model.state_dim + model.control_dim)

    @property
    def eps(self):
        return self.noise.eps

    @property
    def smoothed(self):
        return self.noise.eps > 0

    def set_epoch(self, epoch):
        self.epoch = epoch
        if self.smoothed:
            self.Z = draw_noise(self.noise, epoch, self.horizon, self.model.control_dim)

    def step(self, t, x, u):
        if not self.smoothed:
            self.evals += 1
            return self.model.step(x, u)
        self.evals += self.noise.samples
        return smoothed_step(self.model, x, u, self.Z[t], self.eps)

    def rollout(self, x0, controls):
        xs = np.empty((controls.shape[0] + 1, np.shape(x0)[-1]))
        xs[0] = x0
        with np.errstate(all="ignore"):
            for t in range(controls.shape[0]):
                xs[t + 1] = self.step(t, xs[t], controls[t])
                if not np.all(np.isfinite(xs[t + 1])):
                    raise DivergenceError(t)
        return xs

    def jacobians(self, xs, us):
        """(f_x, f_u) at all stages, shapes (N, n_x, n_x) and (N, n_x, n_u)."""
        n = us.shape[0]
        if not self.smoothed:
            self.evals += n * self._jac_cost
            return self.model.jacobians(xs[:n], us)
        M = self.noise.samples
        fx, fu = smoothed_jacobians_first_order(self.model, xs[:n], us, self.Z, self.eps)
        self.evals += n * M * self._jac_cost
        if self.noise.estimator == "zeroth":
            base = self.model.step(xs[:n], us)
            fu = smoothed_jacobian_zeroth_order(self.model, xs[:n], us, self.Z, self.eps, base=base)
            self.evals += n * (M + 1)
        return fx, fu

    def second_order(self, xs, us):
        if self.smoothed:
            return None
        return self.model.second_order(xs[:us.shape[0]], us)


@dataclass
class StageDerivatives:
    """Dynamics and cost derivatives along a trajectory (stages 0..N-1 plus terminal)."""

    fx: np.ndarray
    fu: np.ndarray
    lx: np.ndarray
    lu: np.ndarray
    lxx: np.ndarray
    lux: np.ndarray
    luu: np.ndarray
    lNx: np.ndarray
    lNxx: np.ndarray
    second: tuple | None = None


def stage_derivatives(problem, oracle, xs, us, use_second_order=True):
    fx, fu = oracle.jacobians(xs, us)
    lx, lu, lxx, lux, luu = problem.running_cost.derivatives(xs[:-1], us)
    lNx, _, lNxx, _, _ = problem.terminal_cost.derivatives(xs[-1])
    second = oracle.second_order(xs, us) if use_second_order else None
    return StageDerivatives(fx, fu, lx, lu, lxx, lux, luu, lNx, lNxx, second)


def trajectory_gradient(problem, controls=None, noise=None, epoch=0):
    """Gradient of the total cost with respect to the controls, shape (N, n_u).

    Chain rule through the model Jacobians (adjoint sweep
    ``lam_t = l_x + f_x' lam_{t+1}``, ``dJ/du_t = l_u + f_u' lam_{t+1}``).
    With ``noise`` the rollout and Jacobians are those of the smoothed
    dynamics for the given sample epoch.
    """
    us = problem.zero_controls() if controls is None else _as_controls(controls, problem.control_dim)
    oracle = DynamicsOracle(problem.dynamics, problem.horizon, noise)
    oracle.set_epoch(epoch)
    xs = oracle.rollout(problem.initial_state, us)
    d = stage_derivatives(problem, oracle, xs, us, use_second_order=False)
    lam = d.lNx
    grad = np.empty_like(us)
    for t in range(us.shape[0] - 1, -1, -1):
        grad[t] = d.lu[t] + d.fu[t].T @ lam
        lam = d.lx[t] + d.fx[t].T @ lam
    return grad


@dataclass(frozen=True)
class QStageModel:
    """Local quadratic model of the Q-function at one stage."""

    Qx: np.ndarray
    Qu: np.ndarray
    Qxx: np.ndarray
    Qux: np.ndarray
    Quu: np.ndarray


def q_stage(d, t, Vx, Vxx):
    fx, fu = d.fx[t], d.fu[t]
    Qx = d.lx[t] + fx.T @ Vx
    Qu = d.lu[t] + fu.T @ Vx
    Vf = Vxx @ fx
    Qxx = d.lxx[t] + fx.T @ Vf
    Qux = d.lux[t] + fu.T @ Vf
    Quu = d.luu[t] + fu.T @ Vxx @ fu
    if d.second is not None:
        fxx, fux, fuu = (s[t] for s in d.second)
        Qxx = Qxx + np.einsum("i,ijk->jk", Vx, fxx)
        Qux = Qux + np.einsum("i,ijk->jk", Vx, fux)
        Quu = Quu + np.einsum("i,ijk->jk", Vx, fuu)
    return QStageModel(Qx, Qu, 0.5 * (Qxx + Qxx.T), Qux, 0.5 * (Quu + Quu.T))


@dataclass
class BackwardPassOutput:
    """Gains and diagnostics of one backward sweep.

    ``dV`` holds (sum k'Q_u, sum k'Q_uu k) so that the predicted change for
    step alpha is ``alpha dV[0] + alpha^2 dV[1] / 2``.
    """

    k: np.ndarray
    K: np.ndarray
    dV: tuple
    qu_inf: float
    qu_w: float
    reg: float
    Vx0: np.ndarray
    Vxx0: np.ndarray
    ok: bool = True
    failed_at: int | None = None

    def expected_change(self, alpha):
        return alpha * self.dV[0] + 0.5 * alpha * alpha * self.dV[1]


def backward_pass(derivatives, reg=0.0):
    """Riccati-style sweep; ``ok`` is False if a regularized Q_uu is not positive definite."""
    d = derivatives
    n, nu, nx = d.fu.shape[0], d.fu.shape[2], d.fx.shape[1]
    k = np.zeros((n, nu))
    K = np.zeros((n, nu, nx))
    Vx, Vxx = d.lNx.copy(), 0.5 * (d.lNxx + d.lNxx.T)
    s1 = s2 = 0.0
    qu_inf = 0.0
    eye = np.eye(nu)
    for t in range(n - 1, -1, -1):
        q = q_stage(d, t, Vx, Vxx)
        Quu_r = q.Quu + reg * eye
        try:
            L = np.linalg.cholesky(Quu_r)
        except np.linalg.LinAlgError:
            return BackwardPassOutput(k, K, (np.nan, np.nan), np.nan, np.nan, reg,
                                      Vx, Vxx, ok=False, failed_at=t)
        rhs = np.concatenate([q.Qu[:, None], q.Qux], axis=1)
        sol = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        kt, Kt = -sol[:, 0], -sol[:, 1:]
        k[t], K[t] = kt, Kt
        s1 += kt @ q.Qu
        s2 += kt @ Quu_r @ kt
        qu_inf = max(qu_inf, float(np.max(np.abs(q.Qu))) if nu else 0.0)
        # regularization-robust value recursion; equals Q_x - K'Q_uu k at reg = 0
        Vx = q.Qx + Kt.T @ q.Quu @ kt + Kt.T @ q.Qu + q.Qux.T @ kt
        Vxx = q.Qxx + Kt.T @ q.Quu @ Kt + Kt.T @ q.Qux + q.Qux.T @ Kt
        Vxx = 0.5 * (Vxx + Vxx.T)
    qu_w = float(np.sqrt(max(-s1, 0.0)))
    return BackwardPassOutput(k, K, (float(s1), float(s2)), qu_inf, qu_w, reg, Vx, Vxx)


def forward_pass(problem, oracle, xs_ref, us_ref, k, K, alpha):
    """Closed-loop rollout u_t = u_bar_t + alpha k_t + K_t (x_t - x_bar_t).

    Returns (states, controls, cost); cost is inf if the rollout diverged.
    """
    n = us_ref.shape[0]
    xs = np.empty_like(xs_ref)
    us = np.empty_like(us_ref)
    xs[0] = problem.initial_state
    try:
        with np.errstate(all="ignore"):
            for t in range(n):
                us[t] = us_ref[t] + alpha * k[t] + K[t] @ (xs[t] - xs_ref[t])
                xs[t + 1] = oracle.step(t, xs[t], us[t])
                if not np.all(np.isfinite(xs[t + 1])):
                    return xs, us, np.inf
            cost = _cost(problem, xs, us)
    except SOLVER_ERRORS:
        return xs, us, np.inf
    return xs, us, cost if np.isfinite(cost) else np.inf


def _cost(problem, xs, us):
    return float(problem.terminal_cost.value(xs[-1]) + np.sum(problem.running_cost.value(xs[:-1], us)))


@dataclass
class IterationRecord:
    iter: int
    stage: int
    cost: float
    qu_inf: float
    qu_w: float
    eps: float
    alpha_tol: float
    ls_alpha: float
    reg: float
    dyn_evals: int
    wall_ms: float

    def as_tuple(self):
        return tuple(getattr(self, f) for f in CSV_FIELDS)


@dataclass
class SolveReport:
    """Outcome of a solver run.

    ``records`` has one row per iterate: row 0 is the initial guess, row i
    the iterate after solver iteration i (a rejected iteration repeats the
    cost with ``ls_alpha = 0``). ``accepted`` lists (cost before, cost after)
    of every accepted step, both measured under the same noise samples.
    """

    status: str
    controls: np.ndarray
    states: np.ndarray
    cost: float
    records: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    dyn_evals: int = 0
    epoch: int = 0
    solver: str = "ddp"
    gains: np.ndarray | None = None

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def iterations(self):
        return self.records[-1].iter if self.records else 0

    @property
    def final_qu_inf(self):
        return self.records[-1].qu_inf if self.records else np.nan

    def costs(self):
        return np.array([r.cost for r in self.records])


def solve(problem, initial_controls=None, settings=None, noise=None, *, epoch=0,
          stage=0, alpha_tol=None, iter_offset=0, evals_offset=0, t0=None,
          feedback=None, callback=None):
    """DDP with Levenberg-Marquardt regularization and backtracking line search.

    With ``noise.eps > 0`` the dynamics are replaced by their Monte-Carlo
    smoothing; one sample set per (epoch, t) is used for the backward pass and
    all line-search trials of an iteration, and the epoch advances on every
    accepted step (the accepted controls are then re-rolled under the fresh
    samples).

    Whenever the samples change, the current iterate is re-rolled through
    the latest feedback policy u = u_bar + K (x - x_bar) rather than open
    loop, which keeps unstable systems near the nominal trajectory.

    The keyword-only arguments let a caller chain runs (iteration and
    evaluation counters, epoch, stage label and the tolerance logged in the
    ``alpha_tol`` column). ``feedback = (states, K)`` applies a previous
    policy to the initial rollout; ``callback(iter, controls)`` is called
    once per recorded iterate.
    """
    settings = settings or SolverSettings()
    t0 = time.perf_counter() if t0 is None else t0
    us = problem.zero_controls() if initial_controls is None else \
        _as_controls(initial_controls, problem.control_dim).copy()
    if us.shape[0] != problem.horizon:
        raise ValueError(f"expected {problem.horizon} controls, got {us.shape[0]}")
    oracle = DynamicsOracle(problem.dynamics, problem.horizon, noise)
    tol = settings.tol if alpha_tol is None else alpha_tol
    eps = oracle.eps
    reg = settings.reg_init
    records, accepted = [], []
    it = 0
    last_alpha = 0.0
    oracle.set_epoch(epoch)

    def record(cost, bp):
        if callback is not None:
            callback(iter_offset + it, us)
        records.append(IterationRecord(
            iter_offset + it, stage, cost,
            bp.qu_inf if bp is not None else np.nan, bp.qu_w if bp is not None else np.nan,
            eps, tol, last_alpha, reg, evals_offset + oracle.evals,
            1e3 * (time.perf_counter() - t0)))

    gains = None

    def report(status, xs, cost):
        return SolveReport(status, us, xs, cost, records, accepted,
                           evals_offset + oracle.evals, oracle.epoch, gains=gains)

    if feedback is not None:
        xs_ref, gains = feedback
        xs, us, cost = forward_pass(problem, oracle, np.asarray(xs_ref), us,
                                    np.zeros_like(us), gains, 0.0)
    else:
        try:
            xs = oracle.rollout(problem.initial_state, us)
            cost = _cost(problem, xs, us)
        except (DivergenceError,) + SOLVER_ERRORS:
            cost = np.inf
    if not np.isfinite(cost):
        record(np.inf, None)
        return report("diverged", np.full((problem.horizon + 1, problem.state_dim), np.nan), np.inf)

    status = None
    prev_bp = None
    derivs = None  # kept across rejected iterations, where the iterate is unchanged
    while status is None:
        if derivs is None:
            try:
                derivs = stage_derivatives(problem, oracle, xs, us, settings.use_second_order)
            except SOLVER_ERRORS as exc:
                record(cost, prev_bp)
                status = f"derivative-failed: {exc}"
                break
        bp = backward_pass(derivs, reg)
        while not bp.ok and reg < settings.reg_max:
            reg = min(reg * settings.reg_increase, settings.reg_max)
            bp = backward_pass(derivs, reg)
        if not bp.ok:
            record(cost, prev_bp)
            status = "backward-failed"
            break
        prev_bp = bp
        gains = bp.K
        record(cost, bp)
        measure = bp.qu_w if settings.norm == "weighted" else bp.qu_inf
        if measure < tol:
            status = "converged"
            break
        if it >= settings.max_iterations:
            status = "max-iterations"
            break

        it += 1
        step = None
        for alpha in settings.ladder:
            expected = -bp.expected_change(alpha)
            xs_new, us_new, cost_new = forward_pass(problem, oracle, xs, us, bp.k, bp.K, alpha)
            if cost_new < cost and expected > 0 and (cost - cost_new) >= settings.accept_ratio * expected:
                step = (alpha, xs_new, us_new, cost_new)
                break
        if step is None:
            last_alpha = 0.0
            if reg >= settings.reg_max:
                record(cost, bp)
                status = "line-search-failed"
                break
            reg = min(reg * settings.reg_increase, settings.reg_max)
            continue
        last_alpha, xs, us, cost_new = step
        derivs = None
        accepted.append((cost, cost_new))
        reg = max(reg / settings.reg_decrease, settings.reg_min)
        cost = cost_new
        if oracle.smoothed:
            oracle.set_epoch(oracle.epoch + 1)
            xs, us, cost = forward_pass(problem, oracle, xs, us, bp.k, bp.K, 0.0)
            if not np.isfinite(cost):
                record(np.inf, bp)
                return report("diverged", xs, np.inf)
    return report(status, xs, cost)
