"""Small analytic systems used as oracles and in tests."""
import numpy as np

from .base import DynamicsModel


class LinearModel(DynamicsModel):
    """x' = A x + B u."""

    smooth = True

    def __init__(self, A, B, dt=1.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.asarray(B, dtype=float).reshape(self.A.shape[0], -1)
        self.dt = dt
        self.state_dim = self.A.shape[0]
        self.control_dim = self.B.shape[1]

    def step(self, x, u):
        x = np.asarray(x)
        u = np.asarray(u)
        if u.ndim == 0:
            u = u[None]
        return x @ self.A.T + u @ self.B.T

    def jacobian_evals(self):
        return 1

    def jacobians(self, x, u):
        lead = np.broadcast_shapes(np.shape(x)[:-1], np.shape(u)[:-1] if np.ndim(u) else ())
        return (np.broadcast_to(self.A, lead + self.A.shape).copy(),
                np.broadcast_to(self.B, lead + self.B.shape).copy())


def double_integrator(dt=0.1):
    """Semi-implicit Euler double integrator: v' = v + u dt, p' = p + v' dt."""
    return LinearModel([[1.0, dt], [0.0, 1.0]], [[dt * dt], [dt]], dt=dt)


class FunctionModel(DynamicsModel):
    """Dynamics from a batched callable ``fn(x, u)``; Jacobians by differences."""

    def __init__(self, fn, state_dim, control_dim, dt=1.0, jacobians=None):
        self.fn = fn
        self.state_dim = state_dim
        self.control_dim = control_dim
        self.dt = dt
        self._jac = jacobians

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if u.ndim == 0:
            u = u[None]
        lead = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        return np.broadcast_to(self.fn(x, u), lead + (self.state_dim,))

    def jacobians(self, x, u):
        if self._jac is not None:
            return self._jac(x, u)
        return super().jacobians(x, u)


class Ramp(DynamicsModel):
    """Scalar test map f(x, u) = max(u, 0), ignoring the state.

    Its derivative is the Heaviside step, taken as 0 at the kink.
    """

    state_dim = 1
    control_dim = 1
    dt = 1.0

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if u.ndim == 0:
            u = u[None]
        lead = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        return np.broadcast_to(np.maximum(u, 0.0), lead + (1,)).copy()

    def jacobian_evals(self):
        return 1

    def jacobians(self, x, u):
        u = np.asarray(u, dtype=float)
        if u.ndim == 0:
            u = u[None]
        lead = np.broadcast_shapes(np.shape(x)[:-1], u.shape[:-1])
        fu = np.broadcast_to((u > 0).astype(float)[..., None], lead + (1, 1)).copy()
        return np.zeros(lead + (1, 1)), fu
