import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from rsoc import parallel
from rsoc.models import (CartPole, Cube, DoublePendulum, Hopper2D, LinearModel, Pendulum,
                         Quadrotor2D, Ramp)
from rsoc.smoothing import (NoiseConfig, SampleSet, draw_noise, draw_sample_set,
                            smoothed_jacobian_zeroth_order, smoothed_jacobian_zeroth_order_raw,
                            smoothed_jacobians_first_order, smoothed_step)

RAMP_VALUE = 1 / math.sqrt(2 * math.pi)


def smoothed_ramp(u, eps):
    """u Phi(u/eps) + eps phi(u/eps): Gaussian convolution of max(u, 0)."""
    return u * stats.norm.cdf(u / eps) + eps * stats.norm.pdf(u / eps)


def test_ramp_oracle_against_quadrature():
    for u, eps in [(0.0, 1.0), (0.3, 0.5), (-1.0, 2.0)]:
        quad, _ = integrate.quad(lambda z: max(u + eps * z, 0.0) * stats.norm.pdf(z), -12, 12,
                                 points=[-u / eps])
        assert smoothed_ramp(u, eps) == pytest.approx(quad, abs=1e-10)
    assert smoothed_ramp(0.0, 1.0) == pytest.approx(0.39894, abs=1e-5)


def ramp_samples(M, epoch=0, seed=0):
    return draw_sample_set(NoiseConfig(1.0, M, seed=seed), epoch, 0, 1)


def test_ramp_smoothed_value_within_three_sigma():
    M = 100_000
    S = ramp_samples(M)
    est = smoothed_step(Ramp(), np.zeros(1), np.zeros(1), S, 1.0)[0]
    sigma = np.maximum(S.Z[:, 0], 0).std(ddof=1) / math.sqrt(M)
    assert abs(est - RAMP_VALUE) < 3 * sigma


def test_ramp_gradient_estimators_within_three_sigma():
    M = 100_000
    S = ramp_samples(M, epoch=1)
    z = S.Z[:, 0]
    _, fu = smoothed_jacobians_first_order(Ramp(), np.zeros(1), np.zeros(1), S, 1.0)
    sigma1 = (z > 0).std(ddof=1) / math.sqrt(M)
    assert abs(fu[0, 0] - 0.5) < 3 * sigma1
    g0 = smoothed_jacobian_zeroth_order(Ramp(), np.zeros(1), np.zeros(1), S, 1.0)
    sigma0 = (np.maximum(z, 0) * z).std(ddof=1) / math.sqrt(M)
    assert abs(g0[0, 0] - 0.5) < 3 * sigma0


def test_estimator_error_decays_like_inverse_sqrt_m():
    reps = 200
    rms = {}
    for M in (100, 1000, 10_000):
        errs = []
        for r in range(reps):
            S = ramp_samples(M, epoch=r, seed=7)
            _, fu = smoothed_jacobians_first_order(Ramp(), np.zeros(1), np.zeros(1), S, 1.0)
            g0 = smoothed_jacobian_zeroth_order(Ramp(), np.zeros(1), np.zeros(1), S, 1.0)
            errs.append((fu[0, 0] - 0.5, g0[0, 0] - 0.5))
        rms[M] = np.sqrt(np.mean(np.square(errs), axis=0))
    # per-sample standard deviations: Bernoulli(1/2) and Z^2 1{Z>0}
    sd = np.array([0.5, math.sqrt(1.5 - 0.25)])
    for M, r in rms.items():
        assert np.all(r * math.sqrt(M) / sd > 0.75) and np.all(r * math.sqrt(M) / sd < 1.25)
    assert np.all(rms[100] / rms[10_000] > 7) and np.all(rms[100] / rms[10_000] < 14)


def test_baseline_reduces_variance():
    wins = 0
    for r in range(100):
        S = ramp_samples(1000, epoch=r, seed=3)
        z = S.Z[:, 0]
        f = np.maximum(1.0 + z, 0.0)
        with_base = (f - 1.0) * z
        no_base = f * z
        wins += with_base.var() < no_base.var()
        # the library estimators are the means of these terms
        g = smoothed_jacobian_zeroth_order(Ramp(), np.zeros(1), np.ones(1), S, 1.0)[0, 0]
        g_raw = smoothed_jacobian_zeroth_order_raw(Ramp(), np.zeros(1), np.ones(1), S, 1.0)[0, 0]
        assert g == pytest.approx(with_base.mean(), abs=1e-12)
        assert g_raw == pytest.approx(no_base.mean(), abs=1e-12)
    assert wins >= 95


def all_models():
    rng = np.random.default_rng(0)
    models = [
        Pendulum(), Pendulum(friction=0.5), DoublePendulum(), CartPole(friction=(0.1, 0.1)),
        Cube(), Quadrotor2D(), Hopper2D(),
        LinearModel(rng.normal(size=(3, 3)), rng.normal(size=(3, 2))), Ramp(),
    ]
    return models


def sample_state(model, rng):
    if isinstance(model, Hopper2D):
        return np.array([model.standing_height(), 0, 0, 0, 0, 0]) + 0.01 * rng.normal(size=6)
    return rng.normal(size=model.state_dim) * 0.3


@pytest.mark.parametrize("model", all_models(), ids=lambda m: type(m).__name__)
def test_zero_noise_is_bit_exact(model):
    rng = np.random.default_rng(1)
    S = draw_sample_set(NoiseConfig(0.0, 8), 0, 0, model.control_dim)
    for _ in range(5):
        x = sample_state(model, rng)
        u = rng.normal(size=model.control_dim)
        assert np.array_equal(smoothed_step(model, x, u, S, 0.0), model.step(x, u))
        fx, fu = smoothed_jacobians_first_order(model, x, u, S, 0.0)
        rx, ru = model.jacobians(x, u)
        assert np.array_equal(fx, rx) and np.array_equal(fu, ru)


def test_linear_dynamics_identity():
    rng = np.random.default_rng(2)
    A, B = rng.normal(size=(3, 3)), rng.normal(size=(3, 2))
    model = LinearModel(A, B)
    S = draw_sample_set(NoiseConfig(0.7, 5), 4, 2, 2)
    x, u = rng.normal(size=3), rng.normal(size=2)
    expected = A @ x + B @ (u + 0.7 * S.Z.mean(axis=0))
    assert np.allclose(smoothed_step(model, x, u, S, 0.7), expected, atol=1e-13)
    fx, fu = smoothed_jacobians_first_order(model, x, u, S, 0.7)
    # averaging M copies of a constant can move the last bit
    assert np.allclose(fx, A, rtol=1e-15, atol=0) and np.allclose(fu, B, rtol=1e-15, atol=0)


def test_zeroth_order_recovers_linear_input_matrix():
    rng = np.random.default_rng(3)
    A, B = rng.normal(size=(2, 2)), rng.normal(size=(2, 3))
    model = LinearModel(A, B)
    M, eps = 10_000, 0.5
    S = draw_sample_set(NoiseConfig(eps, M, seed=9), 0, 0, 3)
    x, u = rng.normal(size=2), rng.normal(size=3)
    est = smoothed_jacobian_zeroth_order(model, x, u, S, eps)
    # per-sample terms (B Z_i) Z_i', whose spread sets the confidence band
    terms = np.einsum("ij,mj,mk->mik", B, S.Z, S.Z)
    half = 3 * terms.std(axis=0, ddof=1) / math.sqrt(M)
    assert np.all(np.abs(est - B) < half)


def test_zeroth_order_constant_dynamics_is_zero():
    model = LinearModel(np.zeros((2, 2)), np.zeros((2, 1)))
    S = draw_sample_set(NoiseConfig(1.0, 64), 0, 0, 1)
    assert np.array_equal(smoothed_jacobian_zeroth_order(model, np.ones(2), np.ones(1), S, 1.0),
                          np.zeros((2, 1)))


def test_zeroth_order_rejects_zero_noise():
    S = ramp_samples(4)
    with pytest.raises(ValueError):
        smoothed_jacobian_zeroth_order(Ramp(), np.zeros(1), np.zeros(1), S, 0.0)


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(-1.0)
    with pytest.raises(ValueError):
        NoiseConfig(1.0, samples=0)
    with pytest.raises(ValueError):
        NoiseConfig(1.0, distribution="cauchy")
    with pytest.raises(ValueError):
        NoiseConfig(1.0, estimator="second")


def test_sample_streams_are_keyed_and_reproducible():
    cfg = NoiseConfig(1.0, 6, seed=11)
    a = draw_sample_set(cfg, 3, 5, 2)
    assert isinstance(a, SampleSet) and a.size == 6 and a.key == (11, 3, 5)
    assert np.array_equal(a.Z, draw_sample_set(cfg, 3, 5, 2).Z)
    assert not np.array_equal(a.Z, draw_sample_set(cfg, 4, 5, 2).Z)
    assert not np.array_equal(a.Z, draw_sample_set(cfg, 3, 6, 2).Z)
    # drawing the whole horizon at once gives the same per-step sets
    block = draw_noise(cfg, 3, 8, 2)
    assert np.array_equal(block[5], a.Z)


def test_errors_name_the_sample():
    def bad_step(x, u):
        out = np.asarray(u, dtype=float).copy()
        out[..., 0] = np.where(out[..., 0] > 0, np.nan, out[..., 0])
        return out

    from rsoc.models import FunctionModel
    model = FunctionModel(bad_step, 1, 1)
    Z = np.array([[-1.0], [-2.0], [3.0]])
    with pytest.raises(FloatingPointError, match="sample 2"):
        smoothed_step(model, np.zeros(1), np.zeros(1), Z, 1.0)


@pytest.mark.parametrize("threads", [1, 4, 8])
def test_parallel_evaluation_is_bit_identical(threads):
    model = Pendulum(friction=0.5)
    S = draw_sample_set(NoiseConfig(1.0, 5000, seed=2), 0, 0, 1)
    x, u = np.array([0.3, -0.2]), np.array([0.1])
    old = parallel.get_threads()
    try:
        parallel.set_threads(1)
        ref = smoothed_step(model, x, u, S, 1.0), smoothed_jacobians_first_order(model, x, u, S, 1.0)
        parallel.set_threads(threads)
        out = smoothed_step(model, x, u, S, 1.0), smoothed_jacobians_first_order(model, x, u, S, 1.0)
    finally:
        parallel.set_threads(old)
    assert np.array_equal(ref[0], out[0])
    assert np.array_equal(ref[1][0], out[1][0]) and np.array_equal(ref[1][1], out[1][1])


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 3), st.integers(0, 1000))
def test_smoothed_ramp_stays_between_ramp_and_its_upper_envelope(u, eps, seed):
    # Jensen: E max(u + eps Z, 0) >= max(u, 0), and it is at most max(u,0) + eps E|Z|
    S = draw_sample_set(NoiseConfig(eps, 256, seed=seed), 0, 0, 1)
    # use antithetic pairs so the sample mean of Z is exactly zero
    Z = np.concatenate([S.Z, -S.Z])
    val = smoothed_step(Ramp(), np.zeros(1), np.array([u]), Z, eps)[0]
    assert val >= max(u, 0.0) - 1e-12
    assert val <= max(u, 0.0) + eps * np.abs(Z).mean() + 1e-12
