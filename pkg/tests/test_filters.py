import math

import numpy as np
import pytest

from mbsfuse import geom
from mbsfuse.errors import SingularInnovation
from mbsfuse.filters import (
    DEFAULT_UT,
    GaussianBelief,
    LinearMeasSpec,
    NonlinearMeasSpec,
    TransitionSpec,
    UnscentedParams,
    cholesky_with_jitter,
    ekf_update,
    kf_update,
    predict,
    sigma_points,
    ukf_update,
)
from mbsfuse.geom import BsSite, Position3


def random_belief(rng):
    mean = rng.normal(0, 10, 4)
    a = rng.normal(0, 1, (4, 4))
    cov = a @ a.T + 0.5 * np.eye(4)
    return GaussianBelief(mean, cov)


def range_angle_model(bs):
    def h_fn(state):
        dx, dy = state[0] - bs.pos.x, state[1] - bs.pos.y
        return np.array([math.hypot(dx, dy), math.atan2(dy, dx)])

    def jac_fn(state):
        return geom.jacobian_rows(state, bs)

    def residual(obs, pred):
        d = obs - pred
        d[1] = geom.wrap_angle(d[1])
        return d

    return h_fn, jac_fn, residual


# ---------------------------------------------------------------- predict


def test_predict_pure_kinematics():
    belief = GaussianBelief([0, 0, 1, 2], np.eye(4))
    t = TransitionSpec.constant_velocity(1.0, accel_sigma=0.0)
    out = predict(belief, t)
    np.testing.assert_allclose(out.mean, [1, 2, 1, 2])


def test_predict_zero_noise_covariance():
    t = TransitionSpec.constant_velocity(0.5, accel_sigma=0.0)
    belief = GaussianBelief(np.zeros(4), np.eye(4))
    out = predict(belief, t)
    np.testing.assert_allclose(out.cov, t.phi @ t.phi.T, atol=1e-12)


def test_predict_noise_only_adds_uncertainty(rng):
    t = TransitionSpec.constant_velocity(0.5, accel_sigma=1.3)
    for _ in range(50):
        belief = random_belief(rng)
        out = predict(belief, t)
        base = t.phi @ belief.cov @ t.phi.T
        assert np.trace(out.cov) >= np.trace(base) - 1e-12


# ---------------------------------------------------------------- kf_update


def test_kf_update_zero_innovation(rng):
    belief = random_belief(rng)
    h = np.zeros((2, 4))
    h[0, 0] = h[1, 1] = 1.0
    m = LinearMeasSpec(h=h, r=0.01 * np.eye(2))
    z = h @ belief.mean
    out = kf_update(belief, z, m)
    np.testing.assert_allclose(out.mean, belief.mean, atol=1e-9)
    assert np.trace(out.cov) < np.trace(belief.cov)


def test_kf_update_uninformative_measurement(rng):
    belief = random_belief(rng)
    h = np.eye(4)
    m = LinearMeasSpec(h=h, r=1e12 * np.eye(4))
    out = kf_update(belief, belief.mean + 5.0, m)
    np.testing.assert_allclose(out.mean, belief.mean, atol=1e-6)
    np.testing.assert_allclose(out.cov, belief.cov, rtol=1e-6)


def test_kf_update_scalar_oracle():
    # one-dimensional KF by hand: K = 1/2, mean 1.0, var 0.5
    belief = GaussianBelief([0, 0, 0, 0], np.diag([1.0, 1e-9, 1e-9, 1e-9]))
    h = np.array([[1.0, 0.0, 0.0, 0.0]])
    m = LinearMeasSpec(h=h, r=np.array([[1.0]]))
    out = kf_update(belief, np.array([2.0]), m)
    assert out.mean[0] == pytest.approx(1.0)
    assert out.cov[0, 0] == pytest.approx(0.5)


def test_kf_update_singular_innovation():
    belief = GaussianBelief(np.zeros(4), np.zeros((4, 4)))
    h = np.zeros((2, 4))
    m = LinearMeasSpec(h=h, r=np.zeros((2, 2)))
    with pytest.raises(SingularInnovation):
        kf_update(belief, np.zeros(2), m)


def test_kf_update_trace_contraction(rng):
    h = np.zeros((2, 4))
    h[0, 0] = h[1, 1] = 1.0
    m = LinearMeasSpec(h=h, r=0.09 * np.eye(2))
    for _ in range(50):
        belief = random_belief(rng)
        out = kf_update(belief, rng.normal(0, 5, 2), m)
        assert np.trace(out.cov) <= np.trace(belief.cov) + 1e-12


# ---------------------------------------------------------------- ekf_update


def test_ekf_reduces_to_kf_for_linear_model(rng):
    h = rng.normal(0, 1, (3, 4))
    r = np.diag(rng.uniform(0.1, 1.0, 3))
    m_lin = LinearMeasSpec(h=h, r=r)
    m_nl = NonlinearMeasSpec(
        h_fn=lambda x: h @ x, jac_fn=lambda x: h, r=r
    )
    for _ in range(100):
        belief = random_belief(rng)
        z = rng.normal(0, 5, 3)
        a = kf_update(belief, z, m_lin)
        b = ekf_update(belief, z, m_nl)
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)
        np.testing.assert_allclose(a.cov, b.cov, atol=1e-12)


def test_ekf_residual_wraps_angles():
    bs = BsSite(0, Position3(0.0, 0.0, 0.0))
    h_fn, jac_fn, residual = range_angle_model(bs)
    obs = np.array([10.0, math.radians(179.0)])
    pred = np.array([10.0, math.radians(-179.0)])
    resid = residual(obs, pred)
    assert resid[1] == pytest.approx(math.radians(-2.0))


def test_ekf_innovation_uses_nonlinear_model():
    # affine model with an offset: h(x) = Hx + c. Feeding z = h(mean)
    # must leave the mean unchanged; an H x residual would shift it by c.
    h = np.zeros((2, 4))
    h[0, 0] = h[1, 1] = 1.0
    c = np.array([3.0, -7.0])
    m = NonlinearMeasSpec(
        h_fn=lambda x: h @ x + c, jac_fn=lambda x: h, r=0.01 * np.eye(2)
    )
    belief = GaussianBelief([1.0, 2.0, 0.0, 0.0], np.eye(4))
    out = ekf_update(belief, m.h_fn(belief.mean), m)
    np.testing.assert_allclose(out.mean, belief.mean, atol=1e-12)


def test_ekf_single_bs_update_matches_grid_map():
    # brute-force MAP over the position slice as an independent oracle
    bs = BsSite(0, Position3(0.0, 0.0, 0.0))
    h_fn, jac_fn, residual = range_angle_model(bs)
    truth = np.array([40.0, 30.0, 0.0, 0.0])
    prior_mean = np.array([38.5, 31.2, 0.0, 0.0])
    p0 = np.diag([4.0, 4.0, 1.0, 1.0])
    r = np.diag([0.3**2, math.radians(0.5) ** 2])
    z = h_fn(truth)
    m = NonlinearMeasSpec(h_fn=h_fn, jac_fn=jac_fn, r=r, residual_fn=residual)
    post = ekf_update(GaussianBelief(prior_mean, p0), z, m)

    def log_post(x, y):
        rp = np.hypot(x, y)
        ap = np.arctan2(y, x)
        da = (z[1] - ap + np.pi) % (2 * np.pi) - np.pi
        lik = -0.5 * ((z[0] - rp) ** 2 / r[0, 0] + da**2 / r[1, 1])
        prior = -0.5 * (
            (x - prior_mean[0]) ** 2 / p0[0, 0] + (y - prior_mean[1]) ** 2 / p0[1, 1]
        )
        return lik + prior

    xg = np.linspace(36.0, 44.0, 801)
    yg = np.linspace(26.0, 34.0, 801)
    gx, gy = np.meshgrid(xg, yg)
    iy, ix = np.unravel_index(np.argmax(log_post(gx, gy)), gx.shape)
    xf = np.linspace(xg[ix] - 0.02, xg[ix] + 0.02, 401)
    yf = np.linspace(yg[iy] - 0.02, yg[iy] + 0.02, 401)
    gx, gy = np.meshgrid(xf, yf)
    iy, ix = np.unravel_index(np.argmax(log_post(gx, gy)), gx.shape)
    map_xy = np.array([xf[ix], yf[iy]])

    moved = np.linalg.norm(post.mean[:2] - truth[:2]) < np.linalg.norm(
        prior_mean[:2] - truth[:2]
    )
    assert moved
    assert np.linalg.norm(post.mean[:2] - map_xy) < 0.05


# ---------------------------------------------------------------- sigma points


def test_sigma_points_identity_cov():
    # lam + n = 4 puts the off-centre points at mean +- 2 e_i
    p = UnscentedParams.scaled(n=4, alpha=1.0, beta=2.0, kappa=0.0)
    belief = GaussianBelief(np.arange(4.0), np.eye(4))
    pts = sigma_points(belief, p)
    assert pts.shape == (9, 4)
    np.testing.assert_allclose(pts[0], belief.mean)
    for i in range(4):
        np.testing.assert_allclose(pts[1 + i] - belief.mean, 2.0 * np.eye(4)[i])
        np.testing.assert_allclose(pts[5 + i] - belief.mean, -2.0 * np.eye(4)[i])


def test_sigma_points_reconstruct_moments(rng):
    p = DEFAULT_UT
    assert p.mean_weights.sum() == pytest.approx(1.0)
    for _ in range(50):
        belief = random_belief(rng)
        pts = sigma_points(belief, p)
        mean = p.mean_weights @ pts
        np.testing.assert_allclose(mean, belief.mean, atol=1e-9)
        dev = pts - mean
        cov = dev.T @ (dev * p.cov_weights[:, None])
        np.testing.assert_allclose(cov, belief.cov, atol=1e-9)


def test_sigma_point_count_default():
    belief = GaussianBelief(np.zeros(4), np.eye(4))
    assert sigma_points(belief, DEFAULT_UT).shape[0] == 9


def test_cholesky_jitter_policy():
    # slightly indefinite matrix from roundoff is repaired by jitter
    cov = np.diag([1.0, 1.0, 1.0, 1e-18])
    cov[3, 3] = 0.0
    chol = cholesky_with_jitter(cov + 1e-15 * np.ones((4, 4)))
    assert np.all(np.isfinite(chol))


# ---------------------------------------------------------------- ukf_update


def test_ukf_matches_kf_for_affine_model(rng):
    h = rng.normal(0, 1, (3, 4))
    c = rng.normal(0, 2, 3)
    r = np.diag(rng.uniform(0.1, 1.0, 3))
    m_lin = LinearMeasSpec(h=h, r=r)
    for _ in range(100):
        belief = random_belief(rng)
        z = rng.normal(0, 5, 3)
        a = kf_update(belief, z - c, m_lin)
        b = ukf_update(belief, z, lambda x: h @ x + c, r)
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-9)
        np.testing.assert_allclose(a.cov, b.cov, atol=1e-9)


def test_ukf_zero_innovation(rng):
    belief = random_belief(rng)
    h = np.zeros((2, 4))
    h[0, 0] = h[1, 1] = 1.0
    z = h @ belief.mean
    out = ukf_update(belief, z, lambda x: h @ x, 0.01 * np.eye(2))
    np.testing.assert_allclose(out.mean, belief.mean, atol=1e-9)


def test_ukf_beats_ekf_near_bs():
    # paired Monte-Carlo: posterior Mahalanobis distance to truth under
    # each filter's own covariance, strong curvature (UE within 1 m of BS)
    bs = BsSite(0, Position3(0.0, 0.0, 0.0))
    h_fn, jac_fn, residual = range_angle_model(bs)
    mask = np.array([False, True])
    r = np.diag([0.1**2, math.radians(5.0) ** 2])
    rng = np.random.default_rng(42)
    wins = 0
    n = 500
    for _ in range(n):
        ang = rng.uniform(-math.pi, math.pi)
        rad = rng.uniform(0.3, 1.0)
        truth = np.array([rad * math.cos(ang), rad * math.sin(ang), 0.0, 0.0])
        prior = truth + np.concatenate([rng.normal(0, 0.5, 2), np.zeros(2)])
        p0 = np.diag([0.25, 0.25, 0.25, 0.25])
        z = h_fn(truth) + rng.normal(0, 1, 2) * np.array([0.1, math.radians(5.0)])
        spec = NonlinearMeasSpec(
            h_fn=h_fn, jac_fn=jac_fn, r=r, residual_fn=residual, angle_mask=mask
        )
        pe = ekf_update(GaussianBelief(prior.copy(), p0.copy()), z, spec)
        pu = ukf_update(GaussianBelief(prior.copy(), p0.copy()), z, h_fn, r, DEFAULT_UT, mask)

        def maha(b):
            d = b.mean - truth
            return float(d @ np.linalg.solve(b.cov, d))

        if maha(pu) < maha(pe):
            wins += 1
    assert wins / n >= 0.6


def test_updates_keep_covariance_healthy(rng):
    # random predict/update chains keep P Cholesky-factorizable
    t = TransitionSpec.constant_velocity(0.5, accel_sigma=1.0)
    h = np.zeros((2, 4))
    h[0, 0] = h[1, 1] = 1.0
    m = LinearMeasSpec(h=h, r=0.04 * np.eye(2))
    belief = GaussianBelief(np.zeros(4), np.diag([100.0, 100.0, 25.0, 25.0]))
    for _ in range(200):
        belief = predict(belief, t)
        belief = kf_update(belief, belief.mean[:2] + rng.normal(0, 0.2, 2), m)
        cholesky_with_jitter(belief.cov)
        np.testing.assert_allclose(belief.cov, belief.cov.T, atol=1e-12)
