"""Randomized smoothing of dynamics over the control input.

    f_eps(x, u) = E_Z f(x, u + eps Z),   Z ~ N(0, I)

estimated by Monte Carlo with a fixed sample set. Sample sets come from
counter-based streams keyed by (seed, epoch, t), so they can be regenerated
anywhere and in any order with identical results.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .parallel import map_blocks

DISTRIBUTIONS = ("gaussian",)
ESTIMATORS = ("first", "zeroth")


@dataclass(frozen=True)
class NoiseConfig:
    """Smoothing intensity ``eps``, sample count ``samples`` and stream seed.

    ``estimator`` selects the Jacobian estimator used by the solvers:
    ``"first"`` averages true Jacobians at perturbed controls, ``"zeroth"``
    uses function differences only (for f_u).
    """

    eps: float = 0.0
    samples: int = 4
    distribution: str = "gaussian"
    seed: int = 0
    estimator: str = "first"

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"sample count must be a positive integer, got {self.samples}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}; choose from {DISTRIBUTIONS}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "seed", int(self.seed))

    def with_eps(self, eps):
        return NoiseConfig(eps, self.samples, self.distribution, self.seed, self.estimator)


@dataclass(frozen=True)
class SampleSet:
    """M i.i.d. noise vectors, shape (M, n_u), and the key that generated them."""

    Z: np.ndarray
    key: tuple

    @property
    def size(self):
        return self.Z.shape[0]


def _generator(seed, epoch, t):
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(epoch), int(t)))
    return np.random.Generator(np.random.Philox(ss))


def draw_sample_set(config, epoch, t, control_dim=1):
    """Sample set for timestep ``t`` of solver epoch ``epoch``."""
    Z = _generator(config.seed, epoch, t).standard_normal((config.samples, control_dim))
    Z.setflags(write=False)
    return SampleSet(Z, (config.seed, int(epoch), int(t)))


def draw_noise(config, epoch, horizon, control_dim):
    """Stacked sample sets for t = 0..N-1, shape (N, M, n_u)."""
    return np.stack([draw_sample_set(config, epoch, t, control_dim).Z for t in range(horizon)])


def _as_Z(samples):
    return samples.Z if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)


def _perturbed(x, u, Z, eps):
    """Broadcast x (..., n_x), u (..., n_u), Z (..., M, n_u) to flat sample points."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    up = u[..., None, :] + eps * Z
    lead = up.shape[:-1]
    xp = np.broadcast_to(x[..., None, :], lead + (x.shape[-1],))
    return xp.reshape(-1, x.shape[-1]), up.reshape(-1, u.shape[-1]), lead


def _step_checked(model, xp, up):
    out = map_blocks(model.step, xp, up)
    bad = ~np.all(np.isfinite(out), axis=-1)
    if bad.any():
        raise FloatingPointError(f"dynamics returned a non-finite state for sample {int(np.argmax(bad))}")
    return out


def smoothed_step(model, x, u, samples, eps):
    """Monte-Carlo estimate of f_eps(x, u); the state is never perturbed.

    ``samples`` is a SampleSet or an array (..., M, n_u) whose leading axes
    match those of x and u. The mean is reduced over the sample axis in a
    fixed order, so results do not depend on how the evaluations were split.
    """
    if eps == 0:
        return model.step(x, u)
    Z = _as_Z(samples)
    xp, up, lead = _perturbed(x, u, Z, eps)
    out = _step_checked(model, xp, up).reshape(lead + (-1,))
    return out.mean(axis=-2)


def smoothed_jacobians_first_order(model, x, u, samples, eps):
    """Averages of (f_x, f_u) at the perturbed controls u + eps Z_i."""
    if eps == 0:
        return model.jacobians(x, u)
    Z = _as_Z(samples)
    xp, up, lead = _perturbed(x, u, Z, eps)
    fx, fu = map_blocks(model.jacobians, xp, up)
    return (fx.reshape(lead + fx.shape[-2:]).mean(axis=-3),
            fu.reshape(lead + fu.shape[-2:]).mean(axis=-3))


def smoothed_jacobian_zeroth_order(model, x, u, samples, eps, base=None):
    """Gaussian score estimate (1/(M eps)) sum_i (f(u + eps Z_i) - f(u)) Z_i'.

    ``base`` may carry a precomputed f(x, u) to save one evaluation.
    """
    if not eps > 0:
        raise ValueError("the zeroth-order estimator needs eps > 0")
    Z = _as_Z(samples)
    xp, up, lead = _perturbed(x, u, Z, eps)
    out = _step_checked(model, xp, up).reshape(lead + (-1,))
    if base is None:
        base = model.step(x, u)
    diff = out - np.asarray(base)[..., None, :]
    M = Z.shape[-2]
    return np.einsum("...mi,...mj->...ij", diff, Z) / (M * eps)


def smoothed_jacobian_zeroth_order_raw(model, x, u, samples, eps):
    """Score estimate without the baseline term, kept for variance comparisons."""
    if not eps > 0:
        raise ValueError("the zeroth-order estimator needs eps > 0")
    Z = _as_Z(samples)
    xp, up, lead = _perturbed(x, u, Z, eps)
    out = _step_checked(model, xp, up).reshape(lead + (-1,))
    return np.einsum("...mi,...mj->...ij", out, Z) / (Z.shape[-2] * eps)


def draw_block(seed, key, shape):
    """Standard normal array from the stream keyed by ``key`` (a tuple of ints)."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss)).standard_normal(shape)
