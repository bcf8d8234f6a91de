import numpy as np

from ..costs import GoalMap
from .base import DryFrictionSpec
from .mechanics import MechanicalModel


class CartPole(MechanicalModel):
    """Cart-pole, x = (cart pos, pole angle, cart vel, pole rate), angle 0 hanging down.

    Point-mass pole of length l. ``friction`` holds the Coulomb bounds for
    (cart, pole joint); pass None for the frictionless system.
    """

    nq = 2
    control_dim = 1

    def __init__(self, dt=0.01, cart_mass=1.0, pole_mass=1.0, length=1.0, g=9.81,
                 friction=DryFrictionSpec((0.1, 0.1))):
        self.dt = dt
        self.cart_mass = cart_mass
        self.pole_mass = pole_mass
        self.length = length
        self.g = g
        if friction is not None and not isinstance(friction, DryFrictionSpec):
            friction = DryFrictionSpec(friction)
        self.friction = friction

    def mass_matrix(self, q):
        mp, l = self.pole_mass, self.length
        c = np.cos(q[..., 1])
        M = np.empty(q.shape[:-1] + (2, 2), dtype=q.dtype)
        M[..., 0, 0] = self.cart_mass + mp
        M[..., 0, 1] = M[..., 1, 0] = mp * l * c
        M[..., 1, 1] = mp * l * l
        return M

    def bias(self, q, v):
        mp, l = self.pole_mass, self.length
        s = np.sin(q[..., 1])
        return np.stack([-mp * l * s * v[..., 1] ** 2, mp * self.g * l * s], axis=-1)

    def generalized_force(self, q, u):
        return np.concatenate([u, np.zeros_like(u)], axis=-1)

    def potential(self, q):
        return -self.pole_mass * self.g * self.length * np.cos(q[..., 1])

    def goal_map(self):
        """(cart position, pole tip x, pole tip z)."""
        l = self.length

        def fn(x):
            xc, th = x[..., 0], x[..., 1]
            return np.stack([xc, xc + l * np.sin(th), -l * np.cos(th)], axis=-1)

        def jac(x):
            th = x[..., 1]
            J = np.zeros(x.shape[:-1] + (3, 4))
            J[..., 0, 0] = 1.0
            J[..., 1, 0] = 1.0
            J[..., 1, 1] = l * np.cos(th)
            J[..., 2, 1] = l * np.sin(th)
            return J

        def hess(x):
            th = x[..., 1]
            H = np.zeros(x.shape[:-1] + (3, 4, 4))
            H[..., 1, 1, 1] = -l * np.sin(th)
            H[..., 2, 1, 1] = l * np.cos(th)
            return H

        return GoalMap(fn, jac, hess)
