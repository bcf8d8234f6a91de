import numpy as np

from ..costs import linear_goal_map
from .mechanics import MechanicalModel, planar_contact_problem


class Cube(MechanicalModel):
    """Planar cube on a table, x = (horizontal pos, height, velocities), u = (f_x, f_z).

    The height is that of the bottom face; one point contact with Coulomb
    friction acts on it.
    """

    nq = 2
    control_dim = 2
    has_contacts = True

    def __init__(self, dt=0.01, mass=1.0, g=9.81, mu=0.9, erp=0.2):
        self.dt = dt
        self.mass = mass
        self.g = g
        self.mu = mu
        self.erp = erp

    def mass_matrix(self, q):
        return np.broadcast_to(self.mass * np.eye(2), q.shape[:-1] + (2, 2))

    def bias(self, q, v):
        h = np.zeros(q.shape)
        h[..., 1] = self.mass * self.g
        return h

    def generalized_force(self, q, u):
        return u

    def potential(self, q):
        return self.mass * self.g * q[..., 1]

    def contact_problem(self, q, v_free, M):
        lead = q.shape[:-1]
        normal = np.broadcast_to(np.array([[0.0, 1.0]]), lead + (1, 2))
        tangent = np.broadcast_to(np.array([[1.0, 0.0]]), lead + (1, 2))
        return planar_contact_problem(M, v_free, normal, tangent, q[..., 1:2], self.mu, self.dt, self.erp)

    def position(self):
        return linear_goal_map(np.eye(2, 4))
