import numpy as np

from ..costs import GoalMap
from .base import DryFrictionSpec
from .mechanics import MechanicalModel


class DoublePendulum(MechanicalModel):
    """Two-link pendulum with point masses at the link ends.

    x = (theta1, theta2, rates); theta1 absolute from hanging down, theta2
    relative to link 1. ``actuated`` selects which joints receive a control
    (default: shoulder only, an underactuated system).
    """

    nq = 2

    def __init__(self, dt=0.01, masses=(1.0, 1.0), lengths=(1.0, 1.0), g=9.81,
                 actuated=(0,), friction=None):
        self.dt = dt
        self.m1, self.m2 = masses
        self.l1, self.l2 = lengths
        self.g = g
        self.actuated = tuple(actuated)
        self.control_dim = len(self.actuated)
        B = np.zeros((2, self.control_dim))
        for j, joint in enumerate(self.actuated):
            B[joint, j] = 1.0
        self.B = B
        if friction is not None and not isinstance(friction, DryFrictionSpec):
            friction = DryFrictionSpec(friction)
        self.friction = friction

    def mass_matrix(self, q):
        m1, m2, l1, l2 = self.m1, self.m2, self.l1, self.l2
        c2 = np.cos(q[..., 1])
        M = np.empty(q.shape[:-1] + (2, 2), dtype=q.dtype)
        M[..., 0, 0] = (m1 + m2) * l1 ** 2 + m2 * l2 ** 2 + 2 * m2 * l1 * l2 * c2
        M[..., 0, 1] = M[..., 1, 0] = m2 * l2 ** 2 + m2 * l1 * l2 * c2
        M[..., 1, 1] = m2 * l2 ** 2
        return M

    def bias(self, q, v):
        m1, m2, l1, l2, g = self.m1, self.m2, self.l1, self.l2, self.g
        s1, s2 = np.sin(q[..., 0]), np.sin(q[..., 1])
        s12 = np.sin(q[..., 0] + q[..., 1])
        w1, w2 = v[..., 0], v[..., 1]
        k = m2 * l1 * l2 * s2
        h1 = -2 * k * w1 * w2 - k * w2 ** 2 + (m1 + m2) * g * l1 * s1 + m2 * g * l2 * s12
        h2 = k * w1 ** 2 + m2 * g * l2 * s12
        return np.stack([h1, h2], axis=-1)

    def generalized_force(self, q, u):
        return u @ self.B.T

    def potential(self, q):
        c1 = np.cos(q[..., 0])
        c12 = np.cos(q[..., 0] + q[..., 1])
        return -(self.m1 + self.m2) * self.g * self.l1 * c1 - self.m2 * self.g * self.l2 * c12

    def tip(self):
        """Goal map: position of the second link's end."""
        l1, l2 = self.l1, self.l2

        def fn(x):
            a, s = x[..., 0], x[..., 0] + x[..., 1]
            return np.stack([l1 * np.sin(a) + l2 * np.sin(s), -l1 * np.cos(a) - l2 * np.cos(s)], axis=-1)

        def jac(x):
            a, s = x[..., 0], x[..., 0] + x[..., 1]
            J = np.zeros(x.shape[:-1] + (2, 4))
            J[..., 0, 0] = l1 * np.cos(a) + l2 * np.cos(s)
            J[..., 0, 1] = l2 * np.cos(s)
            J[..., 1, 0] = l1 * np.sin(a) + l2 * np.sin(s)
            J[..., 1, 1] = l2 * np.sin(s)
            return J

        return GoalMap(fn, jac)
