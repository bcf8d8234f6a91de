import numpy as np

from ..costs import linear_goal_map
from .mechanics import MechanicalModel, planar_contact_problem


class Quadrotor2D(MechanicalModel):
    """Planar quadrotor with two landing points on the ground.

    x = (horizontal, vertical, tilt, velocities); u = (left thrust, right
    thrust), clamped at zero from below. Thrust acts along the body axis;
    the landing points sit at +-arm along the body x axis.
    """

    nq = 3
    control_dim = 2
    has_contacts = True

    def __init__(self, dt=0.02, mass=1.0, arm=0.25, inertia=None, g=9.81, mu=0.9, erp=0.2):
        self.dt = dt
        self.mass = mass
        self.arm = arm
        self.inertia = mass * arm ** 2 if inertia is None else inertia
        self.g = g
        self.mu = mu
        self.erp = erp
        self.contact_iters = 20

    def mass_matrix(self, q):
        return np.broadcast_to(np.diag([self.mass, self.mass, self.inertia]), q.shape[:-1] + (3, 3))

    def bias(self, q, v):
        h = np.zeros(q.shape)
        h[..., 1] = self.mass * self.g
        return h

    def generalized_force(self, q, u):
        thrust = np.maximum(u, 0.0)
        total = thrust[..., 0] + thrust[..., 1]
        th = q[..., 2]
        return np.stack([-total * np.sin(th), total * np.cos(th),
                         self.arm * (thrust[..., 1] - thrust[..., 0])], axis=-1)

    def potential(self, q):
        return self.mass * self.g * q[..., 1]

    def landing_points(self, q):
        th = q[..., 2]
        c, s = np.cos(th), np.sin(th)
        sides = np.array([-1.0, 1.0])
        x = q[..., 0:1] + sides * self.arm * c[..., None]
        z = q[..., 1:2] + sides * self.arm * s[..., None]
        return x, z

    def contact_problem(self, q, v_free, M):
        lead = q.shape[:-1]
        th = q[..., 2]
        c, s = np.cos(th)[..., None], np.sin(th)[..., None]
        sides = np.array([-1.0, 1.0])
        normal = np.zeros(lead + (2, 3))
        normal[..., 1] = 1.0
        normal[..., 2] = sides * self.arm * c
        tangent = np.zeros(lead + (2, 3))
        tangent[..., 0] = 1.0
        tangent[..., 2] = -sides * self.arm * s
        _, gaps = self.landing_points(q)
        return planar_contact_problem(M, v_free, normal, tangent, gaps, self.mu, self.dt, self.erp)

    def position(self):
        return linear_goal_map(np.eye(2, 6))
