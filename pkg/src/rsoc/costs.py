"""Cost stages and their first/second derivatives.

A cost stage exposes ``value(x, u=None)`` (batched over leading axes) and
``derivatives(x, u=None)`` returning ``(l_x, l_u, l_xx, l_ux, l_uu)``.
Terminal stages are called with ``u=None`` and return empty control blocks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def cost_stage_derivatives(cost, x, u=None):
    """Return ``(l_x, l_u, l_xx, l_ux, l_uu)`` of a cost stage at ``(x, u)``."""
    return cost.derivatives(x, u)


def _empty_control_blocks(x, nu=0):
    lead = x.shape[:-1]
    nx = x.shape[-1]
    return np.zeros(lead + (nu,)), np.zeros(lead + (nu, nx)), np.zeros(lead + (nu, nu))


class GoalMap:
    """Task-space map p(x) with Jacobian and Hessian.

    ``fn`` must accept batched states ``(..., n_x)``. Missing derivatives are
    filled in by central differences.
    """

    def __init__(self, fn, jacobian=None, hessian=None, step=1e-6):
        self._fn = fn
        self._jac = jacobian
        self._hess = hessian
        self.step = step

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self._jac is not None:
            return self._jac(x)
        return _fd_jacobian(self._fn, x, self.step)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if self._hess is not None:
            return self._hess(x)
        jac = self._jac if self._jac is not None else (lambda z: _fd_jacobian(self._fn, z, self.step))
        # d/dx of J(x): (..., n_p, n_x, n_x)
        return _fd_jacobian(jac, x, 1e-5)


def linear_goal_map(selector, offset=None):
    """p(x) = S x (+ offset) for a constant selection matrix S."""
    S = np.atleast_2d(np.asarray(selector, dtype=float))
    c = np.zeros(S.shape[0]) if offset is None else np.asarray(offset, dtype=float)

    def fn(x):
        return x @ S.T + c

    def jac(x):
        return np.broadcast_to(S, x.shape[:-1] + S.shape).copy()

    def hess(x):
        return np.zeros(x.shape[:-1] + S.shape + (S.shape[1],))

    return GoalMap(fn, jac, hess)


def _fd_jacobian(fn, x, step):
    """Central-difference Jacobian of a batched map, output (..., *out, n)."""
    n = x.shape[-1]
    cols = []
    for i in range(n):
        h = step * max(1.0, float(np.max(np.abs(x[..., i]))) if x.size else 1.0)
        dx = np.zeros(n)
        dx[i] = h
        cols.append((np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2 * h))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class GoalCost:
    """Stage cost ``w_p * |p(x) - p*|^2 + w_u * |u - u*|^2``.

    With ``w_u = 0`` it serves as a terminal stage, with ``w_p = 0`` as a pure
    control penalty.
    """

    goal_map: GoalMap | None
    target: np.ndarray | None
    w_p: float = 0.0
    u_ref: np.ndarray | None = None
    w_u: float = 0.0
    gauss_newton: bool = False

    def _residual(self, x):
        return self.goal_map(x) - np.asarray(self.target, dtype=float)

    def _du(self, u):
        return u if self.u_ref is None else u - np.asarray(self.u_ref, dtype=float)

    def value(self, x, u=None):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        if self.w_p and self.goal_map is not None:
            r = self._residual(x)
            out = out + self.w_p * np.sum(r * r, axis=-1)
        if u is not None and self.w_u:
            du = self._du(np.asarray(u, dtype=float))
            out = out + self.w_u * np.sum(du * du, axis=-1)
        return out

    def derivatives(self, x, u=None):
        x = np.asarray(x, dtype=float)
        nx = x.shape[-1]
        lead = x.shape[:-1]
        l_x = np.zeros(lead + (nx,))
        l_xx = np.zeros(lead + (nx, nx))
        if self.w_p and self.goal_map is not None:
            r = self._residual(x)
            J = self.goal_map.jacobian(x)
            l_x = 2 * self.w_p * np.einsum("...pi,...p->...i", J, r)
            l_xx = 2 * self.w_p * np.einsum("...pi,...pj->...ij", J, J)
            if not self.gauss_newton:
                H = self.goal_map.hessian(x)
                l_xx = l_xx + 2 * self.w_p * np.einsum("...p,...pij->...ij", r, H)
            l_xx = 0.5 * (l_xx + np.swapaxes(l_xx, -1, -2))
        if u is None:
            l_u, l_ux, l_uu = _empty_control_blocks(x)
            return l_x, l_u, l_xx, l_ux, l_uu
        u = np.asarray(u, dtype=float)
        nu = u.shape[-1]
        l_u = 2 * self.w_u * self._du(u)
        l_uu = np.broadcast_to(2 * self.w_u * np.eye(nu), lead + (nu, nu)).copy()
        l_ux = np.zeros(lead + (nu, nx))
        return l_x, l_u, l_xx, l_ux, l_uu


@dataclass(frozen=True)
class QuadraticGoalCost:
    """Goal-reaching objective ``w_p |p(x_N) - p*|^2 + sum_t w_u |u_t - u*|^2``.

    ``running`` and ``terminal`` give the two stages to hand to a
    :class:`~rsoc.core.TrajectoryProblem`.
    """

    goal_map: GoalMap
    target: np.ndarray
    u_ref: np.ndarray | None = None
    w_p: float = 1.0
    w_u: float = 0.0
    gauss_newton: bool = False

    def __post_init__(self):
        if self.w_p < 0 or self.w_u < 0:
            raise ValueError("cost weights must be nonnegative")

    @property
    def running(self):
        return GoalCost(None, None, 0.0, self.u_ref, self.w_u)

    @property
    def terminal(self):
        return GoalCost(self.goal_map, self.target, self.w_p, gauss_newton=self.gauss_newton)


@dataclass(frozen=True)
class QuadraticCost:
    """``(x - x_ref)' Q (x - x_ref) + (u - u_ref)' R (u - u_ref)`` (no 1/2 factor)."""

    Q: np.ndarray
    R: np.ndarray | None = None
    x_ref: np.ndarray | None = None
    u_ref: np.ndarray | None = None

    def value(self, x, u=None):
        x = np.asarray(x, dtype=float)
        dx = x if self.x_ref is None else x - self.x_ref
        out = np.einsum("...i,ij,...j->...", dx, np.asarray(self.Q, dtype=float), dx)
        if u is not None and self.R is not None:
            u = np.asarray(u, dtype=float)
            du = u if self.u_ref is None else u - self.u_ref
            out = out + np.einsum("...i,ij,...j->...", du, np.asarray(self.R, dtype=float), du)
        return out

    def derivatives(self, x, u=None):
        x = np.asarray(x, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        lead = x.shape[:-1]
        dx = x if self.x_ref is None else x - self.x_ref
        Qs = Q + Q.T
        l_x = dx @ Qs.T
        l_xx = np.broadcast_to(Qs, lead + Q.shape).copy()
        if u is None:
            l_u, l_ux, l_uu = _empty_control_blocks(x)
            return l_x, l_u, l_xx, l_ux, l_uu
        u = np.asarray(u, dtype=float)
        nu = u.shape[-1]
        R = np.zeros((nu, nu)) if self.R is None else np.asarray(self.R, dtype=float)
        du = u if self.u_ref is None else u - self.u_ref
        Rs = R + R.T
        l_u = du @ Rs.T
        l_uu = np.broadcast_to(Rs, lead + R.shape).copy()
        l_ux = np.zeros(lead + (nu, x.shape[-1]))
        return l_x, l_u, l_xx, l_ux, l_uu


class FunctionCost:
    """Cost stage from a plain function ``fn(x, u)`` (or ``fn(x)`` if terminal).

    ``fn`` works on single points; batches are looped. Derivatives come from
    central differences.
    """

    def __init__(self, fn, terminal=False, step=1e-5):
        self.fn = fn
        self.terminal = terminal
        self.step = step

    def _point(self, x, u):
        return float(self.fn(x) if self.terminal else self.fn(x, u))

    def value(self, x, u=None):
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        xf = x.reshape(-1, x.shape[-1])
        if self.terminal:
            vals = [self._point(xi, None) for xi in xf]
        else:
            uf = np.asarray(u, dtype=float).reshape(-1, np.shape(u)[-1])
            vals = [self._point(xi, ui) for xi, ui in zip(xf, uf)]
        return np.asarray(vals).reshape(lead)

    def derivatives(self, x, u=None):
        x = np.asarray(x, dtype=float)
        if x.ndim > 1:
            parts = [self.derivatives(xi, None if u is None else ui)
                     for xi, ui in zip(x, x if u is None else u)]
            return tuple(np.stack(p) for p in zip(*parts))
        nx = x.shape[0]
        if self.terminal or u is None:
            z = x.copy()

            def f(z):
                return self._point(z, None)
        else:
            z = np.concatenate([x, np.asarray(u, dtype=float)])

            def f(z):
                return self._point(z[:nx], z[nx:])
        g, H = _fd_grad_hess(f, z, self.step)
        if self.terminal or u is None:
            l_u, l_ux, l_uu = _empty_control_blocks(x)
            return g, l_u, H, l_ux, l_uu
        return g[:nx], g[nx:], H[:nx, :nx], H[nx:, :nx], H[nx:, nx:]


def _fd_grad_hess(f, z, step):
    n = z.shape[0]
    g = np.zeros(n)
    H = np.zeros((n, n))
    f0 = f(z)
    hs = step * np.maximum(1.0, np.abs(z))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = hs[i]
        fp, fm = f(z + ei), f(z - ei)
        g[i] = (fp - fm) / (2 * hs[i])
        H[i, i] = (fp - 2 * f0 + fm) / hs[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = hs[j]
            H[i, j] = H[j, i] = (
                f(z + ei + ej) - f(z + ei - ej) - f(z - ei + ej) + f(z - ei - ej)
            ) / (4 * hs[i] * hs[j])
    return g, H


@dataclass(frozen=True)
class ScaledCost:
    base: object
    factor: float

    def value(self, x, u=None):
        return self.factor * self.base.value(x, u)

    def derivatives(self, x, u=None):
        return tuple(self.factor * d for d in self.base.derivatives(x, u))


class ZeroCost:
    def value(self, x, u=None):
        return np.zeros(np.shape(x)[:-1])

    def derivatives(self, x, u=None):
        x = np.asarray(x, dtype=float)
        lead, nx = x.shape[:-1], x.shape[-1]
        nu = 0 if u is None else np.shape(u)[-1]
        return (np.zeros(lead + (nx,)), np.zeros(lead + (nu,)), np.zeros(lead + (nx, nx)),
                np.zeros(lead + (nu, nx)), np.zeros(lead + (nu, nu)))
