"""Semi-implicit Euler for M(q) dv/dt + h(q, v) = tau, with friction and contacts."""
from __future__ import annotations

import numpy as np

from ..contact import ContactProblem, baumgarte_reference, solve_ncp_pgs
from .base import DynamicsModel, complex_step_jacobians, friction_impulse


class SingularityError(np.linalg.LinAlgError):
    """Mass matrix could not be inverted."""


class MechanicalModel(DynamicsModel):
    """State x = (q, v); one velocity-level step per call.

    Subclasses provide ``mass_matrix(q)``, ``bias(q, v)`` (Coriolis plus
    gravity) and ``generalized_force(q, u)``; they may override
    ``contact_problem`` to add unilateral contacts. Joint Coulomb friction is
    applied when ``self.friction`` is set. ``self.damping`` (per joint, or
    None) adds viscous joint damping, integrated implicitly.
    """

    nq: int
    g = 9.81
    friction = None
    damping = None
    contact_tol = 1e-10
    contact_iters = 200

    @property
    def state_dim(self):
        return 2 * self.nq

    @property
    def smooth(self):
        return self.friction is None and not self.has_contacts

    has_contacts = False

    def mass_matrix(self, q):
        raise NotImplementedError

    def bias(self, q, v):
        raise NotImplementedError

    def generalized_force(self, q, u):
        raise NotImplementedError

    def contact_problem(self, q, v_free, M):
        return None

    def free_velocity(self, q, v, u):
        M = self.mass_matrix(q)
        rhs = self.generalized_force(q, u) - self.bias(q, v)
        if self.damping is not None:
            # (M + dt D) v+ = M v + dt (tau - h): fold the damping into the inertia
            D = np.diag(np.broadcast_to(np.asarray(self.damping, dtype=float), (self.nq,)))
            rhs = rhs - v @ D
            M = M + self.dt * D
        if self.nq == 1:
            if np.any(M <= 0):
                raise SingularityError("mass matrix is not positive")
            return M, v + rhs / M[..., 0] * self.dt
        try:
            acc = np.linalg.solve(M, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularityError(f"mass matrix inversion failed: {exc}") from exc
        return M, v + acc * self.dt

    def split(self, x):
        return x[..., :self.nq], x[..., self.nq:]

    def post_velocity(self, q, v, u, return_impulses=False):
        """v+ after friction and contact impulses, optionally with contact impulses."""
        M, vf = self.free_velocity(q, v, u)
        if self.friction is not None:
            _, vf = friction_impulse(M, vf, self.friction.bounds(self.nq) * self.dt)
        impulses = None
        if self.has_contacts:
            prob = self.contact_problem(q, vf, M)
            sol = solve_ncp_pgs(prob, max_iters=self.contact_iters, tol=self.contact_tol)
            vf = sol.velocity
            impulses = sol.impulses
        return (vf, impulses) if return_impulses else vf

    def step(self, x, u):
        x = np.asarray(x)
        u = np.asarray(u)
        if u.ndim == 0:
            u = u[None]
        lead = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        x = np.broadcast_to(x, lead + (self.state_dim,))
        u = np.broadcast_to(u, lead + (self.control_dim,))
        q, v = self.split(x)
        v_next = self.post_velocity(q, v, u)
        return np.concatenate([q + self.dt * v_next, v_next], axis=-1)

    def contact_impulses(self, x, u):
        q, v = self.split(np.asarray(x, dtype=float))
        return self.post_velocity(q, v, np.asarray(u, dtype=float), return_impulses=True)[1]

    def jacobians(self, x, u):
        if self.smooth:
            return complex_step_jacobians(self.step, x, u, self.state_dim, self.control_dim)
        return super().jacobians(x, u)

    def jacobian_evals(self):
        n = self.state_dim + self.control_dim
        return n if self.smooth else 2 * n

    def energy(self, x):
        """Kinetic plus potential energy."""
        q, v = self.split(np.asarray(x, dtype=float))
        M = self.mass_matrix(q)
        kin = 0.5 * np.einsum("...i,...ij,...j->...", v, M, v)
        return kin + self.potential(q)

    def potential(self, q):
        raise NotImplementedError


def ground_reference(gap, dt, erp):
    """Normal reference velocity for a ground contact with signed gap.

    Positive gap: the contact may close by at most ``gap`` in one step.
    Penetration: Baumgarte push-out.
    """
    return np.where(gap > 0, -gap / dt, baumgarte_reference(-gap, dt, erp))


def planar_contact_problem(M, v_free, normal_rows, tangent_rows, gaps, mu, dt, erp):
    """Assemble a planar ContactProblem from per-contact rows (..., n_c, n_v)."""
    lead = v_free.shape[:-1]
    nc = normal_rows.shape[-2]
    nv = v_free.shape[-1]
    J = np.stack([normal_rows, tangent_rows], axis=-2).reshape(lead + (2 * nc, nv))
    cstar = np.zeros(lead + (2 * nc,))
    cstar[..., ::2] = ground_reference(gaps, dt, erp)
    return ContactProblem(M, v_free, J, cstar, np.broadcast_to(mu, lead + (nc,)), n_contacts=nc)
