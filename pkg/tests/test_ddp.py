import numpy as np
import pytest
import scipy.linalg
from conftest import lqr_optimum, random_lqr

from rsoc.core import TrajectoryProblem, rollout, total_cost
from rsoc.costs import QuadraticCost, ZeroCost
from rsoc.ddp import (CSV_FIELDS, DynamicsOracle, SolverSettings, backward_pass, forward_pass,
                      solve, stage_derivatives, trajectory_gradient)
from rsoc.models import LinearModel
from rsoc.smoothing import NoiseConfig


def derivs_at(problem, us):
    oracle = DynamicsOracle(problem.dynamics, problem.horizon)
    oracle.set_epoch(0)
    xs = oracle.rollout(problem.initial_state, us)
    return oracle, xs, stage_derivatives(problem, oracle, xs, us)


def test_zero_cost_gives_zero_gains():
    model = LinearModel(np.eye(2), np.ones((2, 1)))
    problem = TrajectoryProblem(model, ZeroCost(), ZeroCost(), [1.0, 2.0], 5)
    _, _, d = derivs_at(problem, problem.zero_controls())
    bp = backward_pass(d)
    assert np.all(bp.k == 0) and np.all(bp.K == 0)


def test_scalar_one_step_riccati():
    a, b, q, r, x0 = 1.3, 0.7, 2.0, 0.5, 1.5
    model = LinearModel([[a]], [[b]])
    problem = TrajectoryProblem(model, QuadraticCost([[q]], [[r]]), QuadraticCost([[q]]), [x0], 1)
    _, _, d = derivs_at(problem, problem.zero_controls())
    bp = backward_pass(d)
    P1 = q
    assert bp.k[0, 0] == pytest.approx(-(b * P1 * a * x0) / (r + b * b * P1), rel=1e-14)


def test_long_horizon_gain_matches_algebraic_riccati():
    problem, (A, B, Q, R, Qf) = random_lqr(seed=4, horizon=50)
    # fifty stages from the terminal weight are enough for the recursion to settle
    _, _, d = derivs_at(problem, problem.zero_controls())
    bp = backward_pass(d)
    P = scipy.linalg.solve_discrete_are(A, B, Q, R)
    G = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    assert np.allclose(bp.K[0], -G, atol=1e-6)


def test_forward_pass_identities():
    problem, _ = random_lqr(seed=1)
    oracle, xs, d = derivs_at(problem, problem.zero_controls())
    us = problem.zero_controls()
    bp = backward_pass(d)
    ref_cost = problem.terminal_cost.value(xs[-1]) + problem.running_cost.value(xs[:-1], us).sum()
    xs0, us0, c0 = forward_pass(problem, oracle, xs, us, bp.k, bp.K, 0.0)
    assert np.array_equal(xs0, xs) and np.array_equal(us0, us) and c0 == ref_cost
    zk, zK = np.zeros_like(bp.k), np.zeros_like(bp.K)
    xs1, us1, c1 = forward_pass(problem, oracle, xs, us, zk, zK, 1.0)
    assert np.array_equal(xs1, xs) and c1 == ref_cost


def test_forward_pass_full_step_reaches_lqr_optimum():
    problem, mats = random_lqr(seed=2)
    oracle, xs, d = derivs_at(problem, problem.zero_controls())
    bp = backward_pass(d)
    _, _, cost = forward_pass(problem, oracle, xs, problem.zero_controls(), bp.k, bp.K, 1.0)
    opt, _, _ = lqr_optimum(problem, mats)
    assert cost == pytest.approx(opt, rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_lqr_converges_to_riccati_optimum(seed):
    problem, mats = random_lqr(seed=seed)
    rng = np.random.default_rng(seed)
    start = rng.normal(size=(problem.horizon, problem.control_dim))
    rep = solve(problem, start)
    opt, P, G = lqr_optimum(problem, mats)
    assert rep.converged and rep.iterations <= 2
    assert rep.cost == pytest.approx(opt, rel=1e-8)
    # the optimal controls are the Riccati feedback law
    x = problem.initial_state
    for t in range(problem.horizon):
        assert np.allclose(rep.controls[t], -G[t] @ x, atol=1e-8)
        x = problem.dynamics.step(x, rep.controls[t])


def test_cost_scaling_leaves_gains_unchanged():
    problem, _ = random_lqr(seed=3)
    us = np.random.default_rng(0).normal(size=(problem.horizon, problem.control_dim))
    _, _, d1 = derivs_at(problem, us)
    _, _, d2 = derivs_at(problem.scaled(7.5), us)
    b1, b2 = backward_pass(d1), backward_pass(d2)
    assert np.allclose(b1.k, b2.k, rtol=1e-12, atol=1e-14)
    assert np.allclose(b1.K, b2.K, rtol=1e-12, atol=1e-14)
    r1, r2 = solve(problem, us), solve(problem.scaled(7.5), us)
    assert r2.cost == pytest.approx(7.5 * r1.cost, rel=1e-12)


def test_value_gradient_matches_finite_differences():
    problem, mats = random_lqr(seed=6)
    rep = solve(problem)
    _, _, d = derivs_at(problem, rep.controls)
    bp = backward_pass(d)
    h = 1e-5
    fd = np.zeros(problem.state_dim)
    for i in range(problem.state_dim):
        costs = []
        for s in (1, -1):
            x0 = problem.initial_state.copy()
            x0[i] += s * h
            p = TrajectoryProblem(problem.dynamics, problem.running_cost, problem.terminal_cost,
                                  x0, problem.horizon)
            costs.append(solve(p).cost)
        fd[i] = (costs[0] - costs[1]) / (2 * h)
    assert np.allclose(bp.Vx0, fd, rtol=1e-4, atol=1e-8)


def test_accepted_steps_decrease_cost():
    from rsoc.models import Pendulum
    from rsoc.costs import QuadraticGoalCost
    model = Pendulum(dt=0.02)
    cost = QuadraticGoalCost(model.tip(), np.array([0.0, 1.0]), w_p=2.0, w_u=1e-3)
    problem = TrajectoryProblem(model, cost.running, cost.terminal, [0.1, 0.0], 80)
    rep = solve(problem, settings=SolverSettings(max_iterations=40))
    assert rep.accepted
    assert all(after < before for before, after in rep.accepted)
    costs = rep.costs()
    assert np.all(np.diff(costs) <= 0)


def strip_wall(records):
    return [r.as_tuple()[:-1] for r in records]


def test_identical_runs_give_identical_reports():
    from rsoc.models import Pendulum
    from rsoc.costs import QuadraticGoalCost
    model = Pendulum(dt=0.02, friction=0.3)
    cost = QuadraticGoalCost(model.tip(), np.array([0.0, 1.0]), w_p=2.0, w_u=1e-3)
    problem = TrajectoryProblem(model, cost.running, cost.terminal, [0.0, 0.0], 50)
    noise = NoiseConfig(1.0, 4, seed=5)
    a = solve(problem, None, SolverSettings(max_iterations=15), noise)
    b = solve(problem, None, SolverSettings(max_iterations=15), noise)
    assert strip_wall(a.records) == strip_wall(b.records)
    assert np.array_equal(a.controls, b.controls) and a.status == b.status


def test_report_layout():
    problem, _ = random_lqr(seed=0)
    rep = solve(problem)
    assert CSV_FIELDS == ("iter", "stage", "cost", "qu_inf", "qu_w", "eps", "alpha_tol",
                          "ls_alpha", "reg", "dyn_evals", "wall_ms")
    its = [r.iter for r in rep.records]
    assert its == sorted(its) and its[0] == 0
    assert rep.records[-1].qu_w < SolverSettings().tol


def test_divergent_start_is_reported_not_raised():
    model = LinearModel([[1e200]], [[1.0]])
    problem = TrajectoryProblem(model, QuadraticCost([[1.0]], [[1.0]]), QuadraticCost([[1.0]]), [1e200], 4)
    rep = solve(problem)
    assert rep.status == "diverged"


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(max_iterations=0)
    with pytest.raises(ValueError):
        SolverSettings(ladder=(1.0, 1.0))
    with pytest.raises(ValueError):
        SolverSettings(reg_increase=1.0)
    with pytest.raises(ValueError):
        SolverSettings(norm="two")
    ladder = SolverSettings().ladder
    assert ladder[0] == 1.0 and ladder[-1] == 2.0 ** -10 and len(ladder) == 11


def test_expected_change_formula():
    problem, _ = random_lqr(seed=8)
    _, _, d = derivs_at(problem, problem.zero_controls())
    bp = backward_pass(d)
    a = 0.37
    assert bp.expected_change(a) == pytest.approx(a * bp.dV[0] + 0.5 * a * a * bp.dV[1])
    # on an LQR the quadratic model is exact
    oracle = DynamicsOracle(problem.dynamics, problem.horizon)
    oracle.set_epoch(0)
    xs = rollout(problem.dynamics, problem.initial_state, problem.zero_controls()).states
    c0 = problem.terminal_cost.value(xs[-1]) + problem.running_cost.value(xs[:-1], problem.zero_controls()).sum()
    _, _, c1 = forward_pass(problem, oracle, xs, problem.zero_controls(), bp.k, bp.K, a)
    assert c1 - c0 == pytest.approx(bp.expected_change(a), rel=1e-8)


def test_trajectory_gradient_matches_finite_differences():
    problem, _ = random_lqr(seed=9, horizon=6)
    us = np.random.default_rng(1).normal(size=(6, 2))
    g = trajectory_gradient(problem, us)
    fd = np.zeros_like(us)
    h = 1e-6
    for i in np.ndindex(us.shape):
        costs = []
        for s in (h, -h):
            v = us.copy()
            v[i] += s
            costs.append(total_cost(problem, rollout(problem.dynamics, problem.initial_state, v)))
        fd[i] = (costs[0] - costs[1]) / (2 * h)
    assert np.allclose(g, fd, rtol=1e-6, atol=1e-7)
    # at the optimum the gradient vanishes
    assert np.max(np.abs(trajectory_gradient(problem, solve(problem).controls))) < 1e-8
