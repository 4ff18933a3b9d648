"""Linear KF, EKF, and UKF cores over a 4-state constant-velocity model.

State vector is [x, y, vx, vy] (meters, meters/second). All operations
are value-in/value-out: beliefs are never mutated, so they can be copied
and shipped between threads freely.

The update equations are the standard ones: gain K = P H^T S^{-1} with
S = H P H^T + R solved rather than inverted, innovation computed against
the nonlinear model h(x) (not H x) for the EKF, and the UKF posterior
x+ = x- + K (z - zhat), P+ = P- - K Pz K^T. Covariances are
resymmetrized after every step to bound floating-point drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import NonPsdCovariance, SingularInnovation

STATE_DIM = 4

Residual = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class GaussianBelief:
    """Filter state: mean [x, y, vx, vy] and 4x4 covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(STATE_DIM)
        cov = np.asarray(self.cov, dtype=float).reshape(STATE_DIM, STATE_DIM)
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("belief mean/cov must be finite")
        if np.max(np.abs(cov - cov.T)) > 1e-9 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("belief covariance is not symmetric")
        self.cov = 0.5 * (cov + cov.T)

    def position(self) -> np.ndarray:
        return self.mean[:2].copy()


@dataclass
class TransitionSpec:
    """Constant-velocity transition with white-acceleration process noise.

    phi is the dt-dependent transition matrix, g couples the 2D
    acceleration noise (covariance q) into the state.
    """

    phi: np.ndarray
    g: np.ndarray
    q: np.ndarray
    dt: float
    gqg: np.ndarray = field(init=False)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.gqg = self.g @ self.q @ self.g.T

    @classmethod
    def constant_velocity(cls, dt: float, accel_sigma: float = 1.0) -> "TransitionSpec":
        """Build the spec for a time step dt and acceleration noise sigma."""
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        phi = np.eye(STATE_DIM)
        phi[0, 2] = dt
        phi[1, 3] = dt
        g = np.array(
            [
                [0.5 * dt * dt, 0.0],
                [0.0, 0.5 * dt * dt],
                [dt, 0.0],
                [0.0, dt],
            ]
        )
        q = (accel_sigma**2) * np.eye(2)
        return cls(phi=phi, g=g, q=q, dt=dt)


@dataclass
class LinearMeasSpec:
    """Linear measurement model: z = H x + noise, noise ~ N(0, R)."""

    h: np.ndarray
    r: np.ndarray


@dataclass
class NonlinearMeasSpec:
    """Nonlinear measurement model with its Jacobian and residual rule.

    residual_fn(observed, predicted) must wrap angle components; the
    default is plain subtraction. angle_mask marks angle rows for the
    sigma-point update, which cannot take a callback.
    """

    h_fn: Callable[[np.ndarray], np.ndarray]
    jac_fn: Callable[[np.ndarray], np.ndarray]
    r: np.ndarray
    residual_fn: Residual = lambda obs, pred: obs - pred
    angle_mask: np.ndarray | None = None


@dataclass(frozen=True)
class UnscentedParams:
    """Sigma-point spread parameter and the 2n+1 weight vectors."""

    lam: float
    mean_weights: np.ndarray
    cov_weights: np.ndarray

    @classmethod
    def scaled(
        cls,
        n: int = STATE_DIM,
        alpha: float = 1.0,
        beta: float = 2.0,
        kappa: float | None = None,
    ) -> "UnscentedParams":
        """Standard scaled unscented transform weights.

        kappa defaults to 3 - n; lam = alpha^2 (n + kappa) - n. Mean
        weights sum to one by construction.
        """
        if kappa is None:
            kappa = 3.0 - n
        lam = alpha * alpha * (n + kappa) - n
        if n + lam <= 0.0:
            raise ValueError("need n + lambda > 0 for sigma-point spread")
        wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
        wc = wm.copy()
        wm[0] = lam / (n + lam)
        wc[0] = wm[0] + (1.0 - alpha * alpha + beta)
        return cls(lam=lam, mean_weights=wm, cov_weights=wc)


DEFAULT_UT = UnscentedParams.scaled()


def cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; one diagonal-jitter retry, then error."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        n = cov.shape[0]
        jitter = 1e-12 * np.trace(cov) / n
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise NonPsdCovariance(
                "covariance is not positive semi-definite "
                f"(jitter {jitter:.3e} did not help)"
            ) from exc


def predict(belief: GaussianBelief, t: TransitionSpec) -> GaussianBelief:
    """Time update: x <- phi x, P <- phi P phi^T + G Q G^T."""
    mean, cov = kernels.predict_cv(belief.mean, belief.cov, t.phi, t.gqg)
    return GaussianBelief(mean=mean, cov=cov)


def kf_update(
    belief: GaussianBelief, z: np.ndarray, m: LinearMeasSpec
) -> GaussianBelief:
    """Linear measurement update."""
    z = np.asarray(z, dtype=float)
    resid = z - m.h @ belief.mean
    try:
        mean, cov = kernels.gain_update(belief.mean, belief.cov, resid, m.h, m.r)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    return GaussianBelief(mean=mean, cov=cov)


def ekf_update(
    belief: GaussianBelief, z: np.ndarray, m: NonlinearMeasSpec
) -> GaussianBelief:
    """Extended update: linearize at the prior mean, residual via h(x).

    The residual is always z - h(x-); the Jacobian only shapes the gain.
    Using H x- in the residual would bias the filter, so it never is.
    """
    z = np.asarray(z, dtype=float)
    resid = m.residual_fn(z, m.h_fn(belief.mean))
    jac = m.jac_fn(belief.mean)
    try:
        mean, cov = kernels.gain_update(belief.mean, belief.cov, resid, jac, m.r)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    return GaussianBelief(mean=mean, cov=cov)


def sigma_points(belief: GaussianBelief, p: UnscentedParams) -> np.ndarray:
    """The 2n+1 sigma points of a belief, shape (2n+1, n).

    Row 0 is the mean; rows i and n+i are mean +- sqrt(n+lam) L[:, i]
    with L the lower Cholesky factor (after the jitter policy).
    """
    n = belief.mean.shape[0]
    chol = cholesky_with_jitter(belief.cov)
    spread = math.sqrt(n + p.lam)
    pts = np.empty((2 * n + 1, n))
    pts[0] = belief.mean
    for i in range(n):
        col = spread * chol[:, i]
        pts[1 + i] = belief.mean + col
        pts[1 + n + i] = belief.mean - col
    return pts


def ukf_update(
    belief: GaussianBelief,
    z: np.ndarray,
    h_fn: Callable[[np.ndarray], np.ndarray],
    r: np.ndarray,
    p: UnscentedParams = DEFAULT_UT,
    angle_mask: np.ndarray | None = None,
) -> GaussianBelief:
    """Sigma-point measurement update.

    h_fn is evaluated at each sigma point; angle rows named in
    angle_mask are averaged and differenced on the circle. Exact for
    affine h_fn, where it reproduces kf_update.
    """
    z = np.asarray(z, dtype=float)
    pts = sigma_points(belief, p)
    zpts = np.stack([np.asarray(h_fn(pt), dtype=float) for pt in pts])
    if angle_mask is None:
        angle_mask = np.zeros(zpts.shape[1], dtype=bool)
    try:
        mean, cov, _ = kernels.ut_update(
            belief.mean,
            belief.cov,
            pts,
            zpts,
            p.mean_weights,
            p.cov_weights,
            z,
            np.asarray(r, dtype=float),
            angle_mask,
        )
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    return GaussianBelief(mean=mean, cov=cov)
