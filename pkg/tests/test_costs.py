import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsoc.costs import (FunctionCost, GoalCost, QuadraticCost, QuadraticGoalCost, ScaledCost,
                        ZeroCost, cost_stage_derivatives, linear_goal_map)
from rsoc.models import CartPole, Pendulum


def fd_derivatives(cost, x, u, h=1e-5):
    """Central differences of value for gradients, of analytic gradients for Hessians."""
    nx, nu = x.size, u.size

    def val(z):
        return float(cost.value(z[:nx], z[nx:]))

    def grad(z):
        l_x, l_u = cost.derivatives(z[:nx], z[nx:])[:2]
        return np.concatenate([l_x, l_u])

    z = np.concatenate([x, u])
    g = np.zeros(nx + nu)
    H = np.zeros((nx + nu, nx + nu))
    for i in range(nx + nu):
        e = np.zeros(nx + nu)
        e[i] = h
        g[i] = (val(z + e) - val(z - e)) / (2 * h)
        H[:, i] = (grad(z + e) - grad(z - e)) / (2 * h)
    return g, H


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))


class Padded:
    """Terminal stage viewed as a function of (x, u) that ignores u."""

    def __init__(self, stage, nu):
        self.stage, self.nu = stage, nu

    def value(self, x, u):
        return self.stage.value(x)

    def derivatives(self, x, u):
        l_x, _, l_xx, _, _ = self.stage.derivatives(x)
        nx, nu = x.size, self.nu
        return l_x, np.zeros(nu), l_xx, np.zeros((nu, nx)), np.zeros((nu, nu))


def goal_costs():
    pend = Pendulum()
    cart = CartPole()
    yield QuadraticGoalCost(pend.tip(), np.array([0.0, 1.0]), w_p=2.0, w_u=2e-5), 2, 1
    yield QuadraticGoalCost(cart.goal_map(), np.array([1.0, 1.0, 1.0]), u_ref=np.array([0.3]), w_p=3.0, w_u=1e-2), 4, 1
    yield QuadraticGoalCost(linear_goal_map([[1.0, 0.0, 2.0]], [0.5]), np.array([1.0]),
                            w_p=1.5, w_u=0.7), 3, 2


@pytest.mark.parametrize("case", list(goal_costs()), ids=["pendulum", "cartpole", "linear"])
def test_goal_cost_derivatives_match_finite_differences(case):
    goal, nx, nu = case
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, u = rng.normal(size=nx), rng.normal(size=nu)
        for stage in (goal.running, Padded(goal.terminal, nu)):
            g, H = fd_derivatives(stage, x, u)
            l_x, l_u, l_xx, l_ux, l_uu = stage.derivatives(x, u)
            assert rel_err(np.concatenate([l_x, l_u]), g) < 1e-6
            assert rel_err(l_xx, H[:nx, :nx]) < 1e-6
            assert rel_err(l_ux, H[nx:, :nx]) < 1e-6
            assert rel_err(l_uu, H[nx:, nx:]) < 1e-6


def test_quadratic_cost_derivatives():
    rng = np.random.default_rng(1)
    Q, R = rng.normal(size=(3, 3)), rng.normal(size=(2, 2))
    cost = QuadraticCost(Q, R, x_ref=rng.normal(size=3), u_ref=rng.normal(size=2))
    for _ in range(20):
        x, u = rng.normal(size=3), rng.normal(size=2)
        g, H = fd_derivatives(cost, x, u)
        l_x, l_u, l_xx, l_ux, l_uu = cost.derivatives(x, u)
        assert rel_err(np.concatenate([l_x, l_u]), g) < 1e-8
        assert rel_err(l_xx, H[:3, :3]) < 1e-8 and rel_err(l_uu, H[3:, 3:]) < 1e-8
        assert np.all(l_ux == 0)


def test_function_cost_derivatives():
    fn = lambda x, u: float(np.sin(x[0]) * x[1] + u[0] ** 2 * x[0] + np.cos(u[0]))
    cost = FunctionCost(fn)
    rng = np.random.default_rng(2)
    for _ in range(20):
        x, u = rng.normal(size=2), rng.normal(size=1)
        l_x, l_u, l_xx, l_ux, l_uu = cost.derivatives(x, u)
        exact_x = [np.cos(x[0]) * x[1] + u[0] ** 2, np.sin(x[0])]
        exact_u = [2 * u[0] * x[0] - np.sin(u[0])]
        assert np.allclose(l_x, exact_x, atol=1e-8) and np.allclose(l_u, exact_u, atol=1e-8)
        assert np.allclose(l_xx, [[-np.sin(x[0]) * x[1], np.cos(x[0])], [np.cos(x[0]), 0.0]], atol=1e-4)
        assert np.allclose(l_ux, [[2 * u[0], 0.0]], atol=1e-4)
        assert np.allclose(l_uu, [[2 * x[0] - np.cos(u[0])]], atol=1e-4)


def test_pure_control_cost_at_reference():
    cost = GoalCost(None, None, 0.0, u_ref=np.array([0.2, -0.1]), w_u=0.5)
    l_x, l_u, l_xx, l_ux, l_uu = cost.derivatives(np.ones(3), np.array([0.2, -0.1]))
    assert np.all(l_u == 0) and np.array_equal(l_uu, 2 * 0.5 * np.eye(2))
    assert np.all(l_x == 0) and np.all(l_xx == 0) and np.all(l_ux == 0)


def test_zero_weights_give_zero_derivatives():
    goal = QuadraticGoalCost(Pendulum().tip(), np.array([0.0, 1.0]), w_p=0.0, w_u=0.0)
    x, u = np.array([0.4, 0.2]), np.array([1.3])
    for d in goal.running.derivatives(x, u) + goal.terminal.derivatives(x):
        assert np.all(d == 0)
    for d in ZeroCost().derivatives(x, u):
        assert np.all(d == 0)


def test_goal_gradient_formula():
    tip = Pendulum().tip()
    target = np.array([0.0, 1.0])
    cost = QuadraticGoalCost(tip, target, w_p=2.0).terminal
    x = np.array([0.7, 0.0])
    l_x = cost.derivatives(x)[0]
    assert np.allclose(l_x, 2 * 2.0 * tip.jacobian(x).T @ (tip(x) - target), rtol=1e-14)


def test_batched_derivatives_match_pointwise():
    goal = QuadraticGoalCost(CartPole().goal_map(), np.array([1.0, 1.0, 1.0]), w_p=2.0, w_u=1e-3)
    rng = np.random.default_rng(3)
    X, U = rng.normal(size=(7, 4)), rng.normal(size=(7, 1))
    batched = cost_stage_derivatives(goal.running, X, U)
    for i in range(7):
        for a, b in zip(batched, goal.running.derivatives(X[i], U[i])):
            assert np.allclose(a[i], b, rtol=1e-14, atol=0)
    term = goal.terminal.derivatives(X)
    assert term[0].shape == (7, 4) and term[2].shape == (7, 4, 4)


def test_scaled_cost():
    goal = QuadraticGoalCost(Pendulum().tip(), np.array([0.0, 1.0]), w_p=2.0, w_u=1e-3)
    x, u = np.array([0.2, 0.1]), np.array([0.5])
    sc = ScaledCost(goal.running, 3.0)
    assert sc.value(x, u) == pytest.approx(3.0 * goal.running.value(x, u))
    for a, b in zip(sc.derivatives(x, u), goal.running.derivatives(x, u)):
        assert np.allclose(a, 3.0 * b)


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        QuadraticGoalCost(Pendulum().tip(), np.array([0.0, 1.0]), w_p=-1.0)


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(th=finite, om=finite, u=finite, wp=st.floats(0, 10), wu=st.floats(0, 10))
def test_goal_cost_is_nonnegative(th, om, u, wp, wu):
    goal = QuadraticGoalCost(Pendulum().tip(), np.array([0.0, 1.0]), w_p=wp, w_u=wu)
    x = np.array([th, om])
    assert goal.running.value(x, np.array([u])) >= 0
    assert goal.terminal.value(x) >= 0


def test_goal_cost_zero_iff_on_target():
    goal = QuadraticGoalCost(Pendulum().tip(), np.array([0.0, 1.0]), w_p=2.0, w_u=1e-3)
    up = np.array([np.pi, 0.0])
    assert goal.terminal.value(up) == pytest.approx(0.0, abs=1e-28)
    assert goal.terminal.value(np.array([np.pi - 0.1, 0.0])) > 0
    assert goal.running.value(up, np.array([0.0])) == 0.0
    assert goal.running.value(up, np.array([1e-3])) > 0
