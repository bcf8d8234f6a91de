import numpy as np

from ..costs import linear_goal_map
from .mechanics import MechanicalModel, planar_contact_problem


class Hopper2D(MechanicalModel):
    """Single leg on a vertical slider: base height z, hip and knee angles.

    x = (z, hip, knee, velocities), u = (hip torque, knee torque); the base
    is unactuated. Point masses sit at the base, the knee and the foot; the
    foot touches the ground through one frictional contact. Angles are zero
    for the stretched leg pointing straight down.
    """

    nq = 3
    control_dim = 2
    has_contacts = True

    def __init__(self, dt=0.01, base_mass=1.0, thigh_mass=0.2, shank_mass=0.2,
                 thigh=0.5, shank=0.5, g=9.81, mu=0.9, erp=0.2, damping=None,
                 torque_limit=None):
        self.dt = dt
        self.base_mass = base_mass
        self.thigh_mass = thigh_mass
        self.shank_mass = shank_mass
        self.thigh = thigh
        self.shank = shank
        self.g = g
        self.mu = mu
        self.erp = erp
        self.torque_limit = torque_limit
        self.damping = None if damping is None else tuple(np.broadcast_to(damping, (3,)).tolist())

    @property
    def total_mass(self):
        return self.base_mass + self.thigh_mass + self.shank_mass

    def standing_height(self):
        return self.thigh + self.shank

    def _points(self, q, v=None):
        """Knee and foot: positions, Jacobians (..., 2, 3) and J_dot v."""
        z, a, b = q[..., 0], q[..., 1], q[..., 2]
        s = a + b
        l1, l2 = self.thigh, self.shank
        lead = q.shape[:-1]
        ca, sa, cs, ss = np.cos(a), np.sin(a), np.cos(s), np.sin(s)
        knee = np.stack([l1 * sa, z - l1 * ca], axis=-1)
        foot = np.stack([l1 * sa + l2 * ss, z - l1 * ca - l2 * cs], axis=-1)
        Jk = np.zeros(lead + (2, 3), dtype=q.dtype)
        Jk[..., 0, 1] = l1 * ca
        Jk[..., 1, 0] = 1.0
        Jk[..., 1, 1] = l1 * sa
        Jf = np.zeros(lead + (2, 3), dtype=q.dtype)
        Jf[..., 0, 1] = l1 * ca + l2 * cs
        Jf[..., 0, 2] = l2 * cs
        Jf[..., 1, 0] = 1.0
        Jf[..., 1, 1] = l1 * sa + l2 * ss
        Jf[..., 1, 2] = l2 * ss
        if v is None:
            return knee, foot, Jk, Jf
        wa, ws = v[..., 1], v[..., 1] + v[..., 2]
        dk = np.stack([-l1 * sa * wa ** 2, l1 * ca * wa ** 2], axis=-1)
        df = np.stack([-l1 * sa * wa ** 2 - l2 * ss * ws ** 2,
                       l1 * ca * wa ** 2 + l2 * cs * ws ** 2], axis=-1)
        return knee, foot, Jk, Jf, dk, df

    def mass_matrix(self, q):
        _, _, Jk, Jf = self._points(q)
        M = (self.thigh_mass * np.swapaxes(Jk, -1, -2) @ Jk
             + self.shank_mass * np.swapaxes(Jf, -1, -2) @ Jf)
        M[..., 0, 0] += self.base_mass
        return M

    def bias(self, q, v):
        _, _, Jk, Jf, dk, df = self._points(q, v)
        grav = np.array([0.0, self.g])
        h = (self.thigh_mass * (np.swapaxes(Jk, -1, -2) @ (dk + grav)[..., None])[..., 0]
             + self.shank_mass * (np.swapaxes(Jf, -1, -2) @ (df + grav)[..., None])[..., 0])
        h[..., 0] += self.base_mass * self.g
        return h

    def generalized_force(self, q, u):
        if self.torque_limit is not None:
            u = np.clip(u, -self.torque_limit, self.torque_limit)
        return np.concatenate([np.zeros(u.shape[:-1] + (1,), dtype=u.dtype), u], axis=-1)

    def potential(self, q):
        knee, foot, _, _ = self._points(q)
        return self.g * (self.base_mass * q[..., 0] + self.thigh_mass * knee[..., 1]
                         + self.shank_mass * foot[..., 1])

    def foot(self, x):
        return self._points(np.asarray(x, dtype=float)[..., :3])[1]

    def contact_problem(self, q, v_free, M):
        _, foot, _, Jf = self._points(q)
        normal = Jf[..., 1:2, :]
        tangent = Jf[..., 0:1, :]
        return planar_contact_problem(M, v_free, normal, tangent, foot[..., 1:2],
                                      self.mu, self.dt, self.erp)

    def base_height(self):
        return linear_goal_map(np.eye(1, 6))
