"""Dynamics contract, finite differences and joint dry friction."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..contact import ContactSolverError, _spd_solve
from ..parallel import map_blocks


class DynamicsModel:
    """Discrete dynamics x' = f(x, u).

    Subclasses implement ``step`` for batched inputs, shapes (..., n_x) and
    (..., n_u). ``jacobians`` defaults to central differences;
    ``second_order`` returns None, meaning f_xx, f_ux, f_uu are taken as zero.
    """

    state_dim: int
    control_dim: int
    dt: float
    smooth = False

    def step(self, x, u):
        raise NotImplementedError

    def jacobians(self, x, u):
        return finite_diff_jacobians(self, x, u)

    def second_order(self, x, u):
        return None

    def jacobian_evals(self):
        """Dynamics evaluations charged for one Jacobian, for sample-cost accounting."""
        return 2 * (self.state_dim + self.control_dim)

    def __call__(self, x, u):
        return self.step(x, u)


def _broadcast_xu(model, x, u):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    lead = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
    return (np.broadcast_to(x, lead + (model.state_dim,)),
            np.broadcast_to(u, lead + (model.control_dim,)), lead)


def finite_diff_jacobians(model, x, u, h=1e-6):
    """Central-difference (f_x, f_u) of ``model.step``, batched over leading axes.

    The step for coordinate i is ``h * max(1, |z_i|)``.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be > 0")
    x, u, lead = _broadcast_xu(model, x, u)
    nx, nu = model.state_dim, model.control_dim
    n = nx + nu
    z = np.concatenate([x, u], axis=-1).reshape(-1, n)
    hs = h * np.maximum(1.0, np.abs(z))  # (B, n)
    eye = np.eye(n)
    # stencil rows: +h e_i then -h e_i, shape (B, 2n, n)
    delta = np.concatenate([eye, -eye])[None] * np.concatenate([hs, hs], axis=-1)[:, :, None]
    pts = (z[:, None, :] + delta).reshape(-1, n)
    out = map_blocks(model.step, pts[:, :nx], pts[:, nx:]).reshape(-1, 2 * n, nx)
    diff = (out[:, :n] - out[:, n:]) / (2 * hs[:, :, None])
    J = np.swapaxes(diff, 1, 2)  # (B, nx, n)
    J = J.reshape(lead + (nx, n))
    return J[..., :nx], J[..., nx:]


def complex_step_jacobians(step, x, u, nx, nu, h=1e-30):
    """Jacobians of an analytic step function by complex-step differentiation."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    lead = np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
    z = np.concatenate([np.broadcast_to(x, lead + (nx,)), np.broadcast_to(u, lead + (nu,))], axis=-1)
    n = nx + nu
    zc = z[..., None, :] + 1j * h * np.eye(n)
    out = step(zc[..., :nx], zc[..., nx:])  # (..., n, nx)
    J = np.swapaxes(out.imag / h, -1, -2)
    return J[..., :nx], J[..., nx:]


@dataclass(frozen=True)
class DryFrictionSpec:
    """Coulomb joint friction: bound ``coulomb`` per joint, stiction band ``v_stick``.

    ``v_stick`` is the speed under which a joint is reported as sticking by
    :func:`sticking_joints`; the impulse law itself locks joints exactly.
    """

    coulomb: tuple = (0.1,)
    v_stick: float = 1e-3

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coulomb))
        if any(v < 0 for v in c):
            raise ValueError("Coulomb friction bounds must be >= 0")
        if not self.v_stick > 0:
            raise ValueError("v_stick must be > 0")
        object.__setattr__(self, "coulomb", c)

    def bounds(self, n):
        c = np.asarray(self.coulomb)
        return np.broadcast_to(c, (n,)) if c.size == 1 else c


_CASES = {}


def _friction_cases(k):
    if k not in _CASES:
        # 0 = stick, +1 = sliding positive, -1 = sliding negative; stick first
        _CASES[k] = np.array(list(itertools.product((0, 1, -1), repeat=k)), dtype=float)
    return _CASES[k]


def friction_impulse(mass_matrix, v_free, bound):
    """Joint friction impulses for implicit velocity-level Coulomb friction.

    Finds f with |f_i| <= bound_i such that v+ = v_free + M^{-1} f, and each
    joint either sticks (v+_i = 0) or slides with f_i = -bound_i sign(v+_i).
    Solved exactly by enumerating stick/slide patterns (all at once); the
    solution of this box complementarity problem is unique for SPD M.

    Returns:
        (f, v_plus)
    """
    M = np.asarray(mass_matrix, dtype=float)
    vf = np.asarray(v_free, dtype=float)
    lead = vf.shape[:-1]
    n = vf.shape[-1]
    F = np.broadcast_to(np.asarray(bound, dtype=float), lead + (n,))
    active = np.flatnonzero(np.any(F.reshape(-1, n) > 0, axis=0))
    if active.size == 0:
        return np.zeros_like(vf), vf.copy()
    if n == 1:
        return _friction_impulse_scalar(M[..., 0, 0], vf, F)
    if n == 2 and active.size == 2:
        G = _inverse_spd_2x2(M)
        f, v, f_stick, sign = _pair_candidates(G, vf, F)
        return _select_pattern(f, v, f_stick, sign, G, vf, F)
    G = _spd_solve(M, np.broadcast_to(np.eye(n), lead + (n, n)))
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    cases = _friction_cases(active.size)
    nc = cases.shape[0]
    stick = np.zeros((nc, n), dtype=bool)
    sign = np.zeros((nc, n))
    stick[:, active] = cases == 0
    sign[:, active] = cases
    P = stick.astype(float)
    # broadcast layout: (..., case, n) and (..., case, n, n)
    Gc = G[..., None, :, :]
    Fc = F[..., None, :]
    vfc = vf[..., None, :]
    f_slide = -sign * Fc
    A = P[:, :, None] * Gc * P[:, None, :] + np.eye(n) * (1.0 - P)[:, None, :]
    rhs = -P * (vfc + (Gc @ f_slide[..., None])[..., 0])
    f_stick = np.linalg.solve(A, rhs[..., None])[..., 0] * P
    f = f_slide + f_stick
    v = np.where(stick, 0.0, vfc + (Gc @ f[..., None])[..., 0])
    return _select_pattern(f, v, f_stick, sign, G, vf, F)


def _select_pattern(f, v, f_stick, sign, G, vf, F):
    # candidates have layout (..., case, n); stick-first case ordering
    Fc = F[..., None, :]
    scale = np.abs(vf).max(axis=-1, keepdims=True) + (np.abs(G).max(axis=(-1, -2))[..., None] * F).max(axis=-1, keepdims=True)
    tol = (1e-11 * np.maximum(scale, 1e-300))[..., None, :]
    viol = (np.maximum(np.abs(f_stick) - Fc, 0.0).max(axis=-1)
            + np.maximum(-sign * v, 0.0).max(axis=-1))
    ok = viol <= tol[..., 0]
    # first valid pattern (stick-first ordering), else the least violating one
    pick = np.where(ok.any(axis=-1), np.argmax(ok, axis=-1), np.argmin(viol, axis=-1))
    idx = pick[..., None, None]
    f_best = np.take_along_axis(f, idx, axis=-2)[..., 0, :]
    v_best = np.take_along_axis(v, idx, axis=-2)[..., 0, :]
    return f_best, v_best


def _inverse_spd_2x2(M):
    a, b, c = M[..., 0, 0], 0.5 * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 1]
    det = a * c - b * b
    if np.any(a <= 0) or np.any(det <= 0):
        raise ContactSolverError("mass matrix is not positive definite")
    G = np.empty(np.shape(det) + (2, 2))
    G[..., 0, 0] = c / det
    G[..., 1, 1] = a / det
    G[..., 0, 1] = G[..., 1, 0] = -b / det
    return G


def _pair_candidates(G, vf, F):
    # two joints: every stick/slide pattern solved in closed form, same
    # case order as _friction_cases(2)
    sign = _friction_cases(2)
    s1, s2 = sign[:, 0], sign[:, 1]
    a, b, c = G[..., 0, 0, None], G[..., 0, 1, None], G[..., 1, 1, None]
    v1, v2 = vf[..., 0, None], vf[..., 1, None]
    g1 = -s1 * F[..., 0, None]
    g2 = -s2 * F[..., 1, None]
    st1, st2 = s1 == 0, s2 == 0
    det = a * c - b * b
    f1 = np.where(st1 & st2, (b * v2 - c * v1) / det, np.where(st1, -(v1 + b * g2) / a, g1))
    f2 = np.where(st1 & st2, (b * v1 - a * v2) / det, np.where(st2, -(v2 + b * g1) / c, g2))
    w1 = np.where(st1, 0.0, v1 + a * f1 + b * f2)
    w2 = np.where(st2, 0.0, v2 + b * f1 + c * f2)
    f = np.stack([f1, f2], axis=-1)
    v = np.stack([w1, w2], axis=-1)
    f_stick = f * np.stack([st1, st2], axis=-1)
    return f, v, f_stick, sign


def _friction_impulse_scalar(m, vf, F):
    # one joint: same stick test and tolerance as the enumeration above
    if np.any(m <= 0):
        raise np.linalg.LinAlgError("mass matrix is not positive definite")
    m = m[..., None]
    f_stick = -m * vf
    tol = 1e-11 * np.maximum(np.abs(vf) + F / m, 1e-300)
    stick = np.abs(f_stick) - F <= tol
    f = np.where(stick, f_stick, -np.sign(vf) * F)
    v = np.where(stick, 0.0, vf + f / m)
    return f, v


def sticking_joints(v_plus, spec):
    return np.abs(v_plus) < spec.v_stick
