import numpy as np

from rsoc.core import TrajectoryProblem
from rsoc.costs import QuadraticCost
from rsoc.models import LinearModel


def random_lqr(seed=0, nx=4, nu=2, horizon=30, stable=True):
    """Random discrete LQR problem plus its matrices (A, B, Q, R, Qf)."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(nx, nx))
    if stable:
        A *= 0.9 / max(abs(np.linalg.eigvals(A)))
    B = rng.normal(size=(nx, nu))
    L = rng.normal(size=(nx, nx))
    Q = L @ L.T / nx + 0.1 * np.eye(nx)
    R = np.diag(rng.uniform(0.1, 1.0, nu))
    Qf = 2 * Q
    x0 = rng.normal(size=nx)
    problem = TrajectoryProblem(LinearModel(A, B), QuadraticCost(Q, R), QuadraticCost(Qf), x0, horizon)
    return problem, (A, B, Q, R, Qf)


def riccati(A, B, Q, R, Qf, horizon):
    """Backward Riccati recursion for sum x'Qx + u'Ru + x_N'Qf x_N.

    Returns the cost-to-go matrices P_0..P_N and gains G_t with u_t = -G_t x_t.
    """
    P = [None] * (horizon + 1)
    G = [None] * horizon
    P[horizon] = Qf
    for t in range(horizon - 1, -1, -1):
        Pn = P[t + 1]
        G[t] = np.linalg.solve(R + B.T @ Pn @ B, B.T @ Pn @ A)
        P[t] = Q + A.T @ Pn @ (A - B @ G[t])
        P[t] = 0.5 * (P[t] + P[t].T)
    return P, G


def lqr_optimum(problem, mats):
    P, G = riccati(*mats, problem.horizon)
    x0 = problem.initial_state
    return float(x0 @ P[0] @ x0), P, G


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
