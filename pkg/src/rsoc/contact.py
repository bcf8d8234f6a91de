"""Velocity-level unilateral contact with Coulomb friction.

Discretized dynamics with contact impulses:

    M v+ = M v_f + J' lam,        c = J v+
    0 <= lam_N  _|_  c_N - c*_N >= 0
    |lam_T| <= mu lam_N, lam_T opposes c_T when sliding

Contacts are planar blocks of two rows (normal first, then tangential) or
single normal rows for frictionless problems. All arrays may carry leading
batch axes; the batch is solved in lockstep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ContactSolverError(RuntimeError):
    """The contact solver failed (singular inertia or no convergence)."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class ContactProblem:
    """One (or a batch of) contact impulse problem(s).

    Attributes:
        mass_matrix: (..., n_v, n_v) symmetric positive definite.
        free_velocity: (..., n_v) velocity without contact impulses.
        jacobian: (..., m, n_v) rows grouped per contact, normal row first.
        reference_velocity: (..., m) target constraint velocity c*; only the
            normal entries are used.
        friction: (..., n_c) friction coefficients, or a scalar.
    """

    mass_matrix: np.ndarray
    free_velocity: np.ndarray
    jacobian: np.ndarray
    reference_velocity: np.ndarray | None = None
    friction: np.ndarray | float = 0.0
    n_contacts: int | None = None

    def __post_init__(self):
        J = np.asarray(self.jacobian, dtype=float)
        m = J.shape[-2]
        nc = self.n_contacts
        if nc is None:
            nc = np.shape(self.friction)[-1] if np.ndim(self.friction) else m // 2 or 1
        if m % nc:
            raise ValueError(f"{m} constraint rows cannot be split into {nc} contacts")
        if m // nc not in (1, 2):
            raise ValueError("only planar (normal, tangential) or normal-only contact blocks are supported")
        object.__setattr__(self, "n_contacts", int(nc))
        if self.reference_velocity is None:
            object.__setattr__(self, "reference_velocity", np.zeros(J.shape[:-1]))
        if np.any(np.asarray(self.friction) < 0):
            raise ValueError("friction coefficients must be nonnegative")
        if self.block == 1 and np.any(np.asarray(self.friction) != 0):
            raise ValueError("normal-only contacts cannot carry friction")

    @property
    def block(self):
        return np.shape(self.jacobian)[-2] // self.n_contacts


@dataclass(frozen=True)
class ContactImpulses:
    """Solver output: impulses (..., m) and post-impact velocity (..., n_v)."""

    impulses: np.ndarray
    velocity: np.ndarray
    residual: np.ndarray
    iterations: int

    def normal(self, block=2):
        return self.impulses[..., ::block]

    def tangential(self, block=2):
        return self.impulses[..., 1::block]


def _cholesky(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ContactSolverError(f"mass matrix is not positive definite: {exc}") from exc


def _spd_solve(M, rhs):
    """Solve M X = rhs for SPD M with batched leading axes."""
    L = _cholesky(M)
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(np.swapaxes(L, -1, -2), y)


def free_velocity(mass_matrix, velocity, forces, dt):
    """v_f = v + M^{-1} (tau - C v - g) dt, with the bracket passed as ``forces``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    M = np.asarray(mass_matrix, dtype=float)
    f = np.asarray(forces, dtype=float)
    return np.asarray(velocity, dtype=float) + _spd_solve(M, f[..., None])[..., 0] * dt


def baumgarte_reference(penetration_depth, dt, erp):
    """Corrective normal velocity ``erp * depth / dt`` pushing out of penetration.

    ``penetration_depth`` is the (nonnegative) interpenetration; zero or
    negative values mean no penetration and give 0.
    """
    if not 0.0 <= erp <= 1.0:
        raise ValueError("erp must lie in [0, 1]")
    depth = np.maximum(np.asarray(penetration_depth, dtype=float), 0.0)
    return erp * depth / dt


def delassus(problem):
    """G = J M^{-1} J' and the constraint-space drift b = J v_f - c*."""
    J = np.asarray(problem.jacobian, dtype=float)
    Jt = np.swapaxes(J, -1, -2)
    MinvJt = _spd_solve(np.asarray(problem.mass_matrix, dtype=float), Jt)
    G = J @ MinvJt
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    cstar = np.asarray(problem.reference_velocity, dtype=float).copy()
    if problem.block == 2:
        cstar[..., 1::2] = 0.0
    b = (J @ np.asarray(problem.free_velocity, dtype=float)[..., None])[..., 0] - cstar
    return G, b, MinvJt


def _local_normal(A, r):
    return np.maximum(0.0, -r[..., 0] / A[..., 0, 0])[..., None]


def _local_planar(A, r, mu):
    """Exact solve of one planar frictional contact: separate / stick / slip."""
    ann, ant, att = A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]
    rn, rt = r[..., 0], r[..., 1]
    scale = np.maximum(np.abs(rn) + np.abs(rt), 1e-300)
    tol = 1e-12 * scale

    lam_n = np.zeros_like(rn)
    lam_t = np.zeros_like(rn)
    done = rn >= 0.0  # separating

    det = ann * att - ant * ant
    with np.errstate(divide="ignore", invalid="ignore"):
        sn = (-rn * att + rt * ant) / det
        st = (-rt * ann + rn * ant) / det
    stick = (~done & (det > 1e-14 * ann * att) & (sn >= 0.0)
             & (np.abs(st) <= mu * sn + tol / np.maximum(att, 1e-300)))
    lam_n = np.where(stick, sn, lam_n)
    lam_t = np.where(stick, st, lam_t)
    done = done | stick

    best_n, best_t, best_viol = np.zeros_like(rn), np.zeros_like(rn), np.full_like(rn, np.inf)
    for s in (1.0, -1.0):
        den = ann - s * mu * ant
        with np.errstate(divide="ignore", invalid="ignore"):
            ln = np.where(den > 0, -rn / den, 0.0)
        ln = np.maximum(ln, 0.0)
        lt = -s * mu * ln
        ct = ant * ln + att * lt + rt
        viol = np.maximum(-s * ct, 0.0) + np.where(den > 0, 0.0, np.inf)
        ok = ~done & (viol <= tol)
        lam_n = np.where(ok, ln, lam_n)
        lam_t = np.where(ok, lt, lam_t)
        done = done | ok
        better = viol < best_viol
        best_n = np.where(better, ln, best_n)
        best_t = np.where(better, lt, best_t)
        best_viol = np.where(better, viol, best_viol)
    # degenerate leftovers: least-violating slip candidate
    lam_n = np.where(done, lam_n, best_n)
    lam_t = np.where(done, lam_t, best_t)
    return np.stack([lam_n, lam_t], axis=-1)


def complementarity_residual(lam, c, mu, block):
    """Natural-map residual per contact, shape (..., n_c).

    Zero exactly when Signorini, the friction cone and maximum dissipation
    all hold.
    """
    ln = lam[..., ::block]
    cn = c[..., ::block]
    res = np.abs(np.minimum(ln, cn))
    if block == 2:
        lt = lam[..., 1::2]
        ct = c[..., 1::2]
        bound = mu * np.maximum(ln, 0.0)
        res = np.maximum(res, np.abs(lt - np.clip(lt - ct, -bound, bound)))
    return res


def solve_ncp_pgs(problem, max_iters=200, tol=1e-10):
    """Frictional contact impulses by per-contact projected Gauss-Seidel.

    Each sweep visits the contacts in order and solves every contact block
    exactly with the others frozen, so a single contact converges in one sweep.
    ``tol`` bounds the complementarity residual relative to max(1, |J v_f - c*|).
    Batch entries still above ``tol`` after ``max_iters`` sweeps (typically a
    rank-deficient Delassus matrix, such as two contacts on one planar body)
    are handed to :func:`solve_ncp_enum` when there are few contacts.

    Raises:
        ContactSolverError: if the residual stays above ``tol``.
    """
    G, b, MinvJt = delassus(problem)
    k = problem.block
    nc = problem.n_contacts
    mu = np.broadcast_to(np.asarray(problem.friction, dtype=float), b.shape[:-1] + (nc,))
    lam = np.zeros_like(b)
    res = np.full(b.shape[:-1], np.inf)
    # residuals are compared relative to the size of the drift term
    tol_eff = tol * np.maximum(1.0, np.abs(b).max(axis=-1, initial=0.0))
    it = 0
    for it in range(1, max_iters + 1):
        for i in range(nc):
            sl = slice(i * k, (i + 1) * k)
            r = b[..., sl] + (G[..., sl, :] @ lam[..., None])[..., 0] \
                - (G[..., sl, sl] @ lam[..., sl, None])[..., 0]
            A = G[..., sl, sl]
            lam[..., sl] = _local_normal(A, r) if k == 1 else _local_planar(A, r, mu[..., i])
        c = (G @ lam[..., None])[..., 0] + b
        res = np.asarray(complementarity_residual(lam, c, mu, k).max(axis=-1))
        if np.all(res < tol_eff):
            break
    else:
        bad = res >= tol_eff
        if nc > 1 and nc <= ENUM_MAX_CONTACTS:
            lam_e, res_e = _enumerate(G[bad], b[bad], mu[bad], k)
            better = res_e < res[bad]
            lam[bad] = np.where(better[:, None], lam_e, lam[bad])
            res[bad] = np.where(better, res_e, res[bad])
        if np.any(res >= tol_eff):
            worst = float(np.max(res))
            raise ContactSolverError(
                f"contact solver did not converge in {max_iters} sweeps (worst residual {worst:.3e})",
                worst,
            )
    v_plus = np.asarray(problem.free_velocity, dtype=float) + (MinvJt @ lam[..., None])[..., 0]
    return ContactImpulses(lam, v_plus, res, it)


ENUM_MAX_CONTACTS = 4
_MODES = {1: (0, 1), 2: (0, 1, 2, 3)}  # separate, stick, slip with c_T > 0, slip with c_T < 0


def _enumerate(G, b, mu, k):
    """Exact contact impulses by trying every combination of contact modes.

    Rows are (B, m). Each combination is a linear system, solved in the
    least-norm sense so that rank-deficient Delassus matrices are handled;
    the first combination meeting all sign and cone conditions wins.
    """
    import itertools

    B, m = b.shape
    nc = m // k
    scale = np.abs(b).max(axis=-1) + 1e-300
    best_lam = np.zeros_like(b)
    best_res = np.full(B, np.inf)
    found = np.zeros(B, dtype=bool)
    for combo in itertools.product(_MODES[k], repeat=nc):
        cols, rows = [], []
        for i, mode in enumerate(combo):
            if mode == 0:
                continue
            n = i * k
            rows.append(n)
            if mode == 1:
                cols.append((n, None))
                if k == 2:
                    rows.append(n + 1)
                    cols.append((n + 1, None))
            else:
                cols.append((n, -1.0 if mode == 2 else 1.0))
        D = np.zeros((B, m, len(cols)))
        for j, (row, slip) in enumerate(cols):
            D[:, row, j] = 1.0
            if slip is not None:
                D[:, row + 1, j] = slip * mu[:, row // k]
        lam = np.zeros_like(b)
        if cols:
            A = G[:, rows, :] @ D
            y = -(np.linalg.pinv(A) @ b[:, rows, None])[..., 0]
            lam = (D @ y[..., None])[..., 0]
        c = (G @ lam[..., None])[..., 0] + b
        res = complementarity_residual(lam, c, mu, k).max(axis=-1) / scale
        take = ~found & (res < best_res)
        best_lam = np.where(take[:, None], lam, best_lam)
        best_res = np.where(take, res, best_res)
        found |= res < 1e-12
    c = (G @ best_lam[..., None])[..., 0] + b
    return best_lam, complementarity_residual(best_lam, c, mu, k).max(axis=-1)


def solve_ncp_enum(problem):
    """Exact solve by mode enumeration; practical for a handful of contacts."""
    G, b, MinvJt = delassus(problem)
    k = problem.block
    nc = problem.n_contacts
    lead = b.shape[:-1]
    mu = np.broadcast_to(np.asarray(problem.friction, dtype=float), lead + (nc,))
    lam, res = _enumerate(G.reshape((-1,) + G.shape[-2:]), b.reshape(-1, b.shape[-1]),
                          mu.reshape(-1, nc), k)
    lam = lam.reshape(b.shape)
    v_plus = np.asarray(problem.free_velocity, dtype=float) + (MinvJt @ lam[..., None])[..., 0]
    return ContactImpulses(lam, v_plus, res.reshape(lead), 0)


def solve_signorini(problem, max_iters=200, tol=1e-10):
    """Frictionless unilateral contact (the Signorini LCP)."""
    if np.any(np.asarray(problem.friction) != 0):
        raise ValueError("solve_signorini expects zero friction; use solve_ncp_pgs")
    return solve_ncp_pgs(problem, max_iters=max_iters, tol=tol)
