"""Hot numeric kernels with optional numba acceleration.

Every kernel is written as a plain numpy function that is also valid
numba nopython code. At import time each one is either compiled with
``numba.njit`` or left as-is, depending on the ``MBSFUSE_NUMBA``
environment variable (set it to ``0``/``off``/``false`` to force the
pure-numpy fallback). The uncompiled originals stay reachable through
``PY_IMPLS`` so benchmarks can compare both paths in one process.

Kernels take bare float64 arrays and never touch package types; the
wrapping modules (filters, fusion, geom) own validation and error
translation.
"""

from __future__ import annotations

import os

import numpy as np

TWO_PI = 2.0 * np.pi


def _numba_requested() -> bool:
    flag = os.environ.get("MBSFUSE_NUMBA", "").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()


def _wrap_angles(a):
    """Wrap angles (array) into (-pi, pi]."""
    w = (a + np.pi) % TWO_PI - np.pi
    return np.where(w == -np.pi, np.pi, w)


def _predict_cv(mean, cov, phi, gqg):
    """Constant-velocity time update: propagate mean, inflate covariance."""
    mean2 = phi @ mean
    cov2 = phi @ cov @ phi.T + gqg
    cov2 = 0.5 * (cov2 + cov2.T)
    return mean2, cov2


def _gain_update(mean, cov, resid, h, r):
    """Gain-weighted correction shared by the linear KF and the EKF.

    The gain solves against the innovation covariance instead of forming
    an explicit inverse. Raises numpy's LinAlgError when that covariance
    is singular; callers translate it.
    """
    ph_t = cov @ h.T
    s = h @ ph_t + r
    gain = np.linalg.solve(s, ph_t.T).T
    mean2 = mean + gain @ resid
    cov2 = cov - gain @ (h @ cov)
    cov2 = 0.5 * (cov2 + cov2.T)
    return mean2, cov2


def _stack_pred(state, bs_en, hybrid):
    """Predicted measurement stack for one state against N base stations.

    Rows per BS: horizontal range, then (hybrid only) azimuth in (-pi, pi].
    """
    n = bs_en.shape[0]
    step = 2 if hybrid else 1
    out = np.empty(n * step)
    for i in range(n):
        dx = state[0] - bs_en[i, 0]
        dy = state[1] - bs_en[i, 1]
        out[i * step] = np.sqrt(dx * dx + dy * dy)
        if hybrid:
            a = np.arctan2(dy, dx)
            if a <= -np.pi:
                a = np.pi
            out[i * step + 1] = a
    return out


def _stack_jac(state, bs_en, hybrid):
    """Measurement Jacobian stack matching ``_stack_pred`` row order.

    Range row: [dx/r, dy/r, 0, 0]; azimuth row: [-dy/r^2, dx/r^2, 0, 0].
    Velocity columns are identically zero.
    """
    n = bs_en.shape[0]
    step = 2 if hybrid else 1
    jac = np.zeros((n * step, 4))
    for i in range(n):
        dx = state[0] - bs_en[i, 0]
        dy = state[1] - bs_en[i, 1]
        rr = dx * dx + dy * dy
        r = np.sqrt(rr)
        jac[i * step, 0] = dx / r
        jac[i * step, 1] = dy / r
        if hybrid:
            jac[i * step + 1, 0] = -dy / rr
            jac[i * step + 1, 1] = dx / rr
    return jac


def _fix_stack(bs_enz, r_meas, az, ue_height):
    """Per-BS horizontal position fixes from measured (range, azimuth).

    Returns the (N, 2) fixes and a validity mask; rows where the measured
    3D range is shorter than the known height difference are flagged
    invalid instead of raising, so one bad BS cannot sink an epoch.
    """
    n = bs_enz.shape[0]
    out = np.empty((n, 2))
    ok = np.ones(n, dtype=np.bool_)
    for i in range(n):
        dz = ue_height - bs_enz[i, 2]
        rr = r_meas[i] * r_meas[i] - dz * dz
        if rr < 0.0:
            ok[i] = False
            out[i, 0] = np.nan
            out[i, 1] = np.nan
        else:
            r2d = np.sqrt(rr)
            out[i, 0] = bs_enz[i, 0] + r2d * np.cos(az[i])
            out[i, 1] = bs_enz[i, 1] + r2d * np.sin(az[i])
    return out, ok


def _ut_update(mean, cov, pts, zpts, wm, wc, z, r, angle_mask):
    """Unscented measurement update from propagated sigma points.

    ``zpts`` holds h(sigma point) rows. Angle components (marked by
    ``angle_mask``) are averaged relative to the centre point and every
    residual in those columns is wrapped into (-pi, pi], so stacks that
    straddle the +-pi cut stay well-behaved.
    """
    mdim = zpts.shape[1]
    base = zpts[0].copy()
    dz = zpts - base
    for j in range(mdim):
        if angle_mask[j]:
            dz[:, j] = _wrap_col(dz[:, j])
    zbar = base + wm @ dz
    dev = zpts - zbar
    for j in range(mdim):
        if angle_mask[j]:
            dev[:, j] = _wrap_col(dev[:, j])
    wcol = wc.reshape(-1, 1)
    pz = dev.T @ (dev * wcol) + r
    dx = pts - mean
    pxz = dx.T @ (dev * wcol)
    gain = np.linalg.solve(pz, pxz.T).T
    innov = z - zbar
    for j in range(mdim):
        if angle_mask[j]:
            w = (innov[j] + np.pi) % TWO_PI - np.pi
            if w == -np.pi:
                w = np.pi
            innov[j] = w
    mean2 = mean + gain @ innov
    cov2 = cov - gain @ pz @ gain.T
    cov2 = 0.5 * (cov2 + cov2.T)
    return mean2, cov2, innov


def _wrap_col(a):
    w = (a + np.pi) % TWO_PI - np.pi
    return np.where(w == -np.pi, np.pi, w)


PY_IMPLS = {
    "wrap_angles": _wrap_angles,
    "predict_cv": _predict_cv,
    "gain_update": _gain_update,
    "stack_pred": _stack_pred,
    "stack_jac": _stack_jac,
    "fix_stack": _fix_stack,
    "ut_update": _ut_update,
}

if NUMBA_ENABLED:
    from numba import njit

    _wrap_col = njit(cache=True)(_wrap_col)
    wrap_angles = njit(cache=True)(_wrap_angles)
    predict_cv = njit(cache=True)(_predict_cv)
    gain_update = njit(cache=True)(_gain_update)
    stack_pred = njit(cache=True)(_stack_pred)
    stack_jac = njit(cache=True)(_stack_jac)
    fix_stack = njit(cache=True)(_fix_stack)
    ut_update = njit(cache=True)(_ut_update)
else:
    wrap_angles = _wrap_angles
    predict_cv = _predict_cv
    gain_update = _gain_update
    stack_pred = _stack_pred
    stack_jac = _stack_jac
    fix_stack = _fix_stack
    ut_update = _ut_update
