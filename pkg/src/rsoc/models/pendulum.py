import numpy as np

from ..costs import GoalMap
from .base import DryFrictionSpec
from .mechanics import MechanicalModel


class Pendulum(MechanicalModel):
    """Point-mass pendulum, x = (theta, theta_dot), theta = 0 hanging down.

    ml^2 theta_ddot = u - m g l sin(theta) - friction
    """

    nq = 1
    control_dim = 1

    def __init__(self, dt=5e-3, mass=1.0, length=1.0, g=9.81, friction=None):
        self.dt = dt
        self.mass = mass
        self.length = length
        self.g = g
        if friction is not None and not isinstance(friction, DryFrictionSpec):
            friction = DryFrictionSpec(friction)
        self.friction = friction

    def mass_matrix(self, q):
        return np.full(q.shape[:-1] + (1, 1), self.mass * self.length ** 2, dtype=q.dtype)

    def bias(self, q, v):
        return self.mass * self.g * self.length * np.sin(q)

    def generalized_force(self, q, u):
        return u

    def potential(self, q):
        return self.mass * self.g * self.length * (1 - np.cos(q[..., 0]))

    def step(self, x, u):
        if self.friction is not None:
            return super().step(x, u)
        x = np.asarray(x)
        u = np.asarray(u)
        if u.ndim == 0:
            u = u[None]
        th, om = x[..., 0], x[..., 1]
        inertia = self.mass * self.length ** 2
        acc = (u[..., 0] - self.mass * self.g * self.length * np.sin(th)) / inertia
        om2 = om + self.dt * acc
        return np.stack(np.broadcast_arrays(th + self.dt * om2, om2), axis=-1)

    def jacobians(self, x, u):
        if self.friction is not None:
            return super().jacobians(x, u)
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        lead = np.broadcast_shapes(x.shape[:-1], np.shape(u)[:-1] if np.ndim(u) else ())
        dt = self.dt
        inertia = self.mass * self.length ** 2
        a_th = -self.g * np.cos(x[..., 0]) / self.length
        fx = np.zeros(lead + (2, 2))
        fx[..., 1, 0] = dt * a_th
        fx[..., 1, 1] = 1.0
        fx[..., 0, 0] = 1.0 + dt * dt * a_th
        fx[..., 0, 1] = dt
        fu = np.zeros(lead + (2, 1))
        fu[..., 0, 0] = dt * dt / inertia
        fu[..., 1, 0] = dt / inertia
        return fx, fu

    def jacobian_evals(self):
        return 1 if self.friction is None else super().jacobian_evals()

    def tip(self):
        """Goal map: tip position (l sin theta, -l cos theta)."""
        l = self.length

        def fn(x):
            th = x[..., 0]
            return np.stack([l * np.sin(th), -l * np.cos(th)], axis=-1)

        def jac(x):
            th = x[..., 0]
            J = np.zeros(x.shape[:-1] + (2, 2))
            J[..., 0, 0] = l * np.cos(th)
            J[..., 1, 0] = l * np.sin(th)
            return J

        def hess(x):
            th = x[..., 0]
            H = np.zeros(x.shape[:-1] + (2, 2, 2))
            H[..., 0, 0, 0] = -l * np.sin(th)
            H[..., 1, 0, 0] = l * np.cos(th)
            return H

        return GoalMap(fn, jac, hess)
