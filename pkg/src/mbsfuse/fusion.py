"""Per-epoch measurement assembly and filter stepping for the five schemes.

Schemes
-------
* LC-KF: each admitted BS is turned into an independent horizontal
  position fix outside the filter; the fixes are fused by a linear KF
  whose observation matrix is a stack of [I2 0] blocks, so the filter
  never linearizes anything.
* TC-EKF / TC-UKF: ranges and azimuths of all admitted BSs enter one
  filter through the nonlinear stack (hybrid).
* TC-EKF-R / TC-UKF-R: same, with the azimuth rows dropped (range-only).

Measured 3D ranges are reduced to horizontal ranges with the known
BS/UE height difference before they reach any filter, which keeps the
observation model and the measurement consistent. BSs are always
stacked in ascending id order so results are permutation invariant.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import geom, kernels
from .errors import InconsistentGeometry, NoVisibleBs
from .filters import (
    DEFAULT_UT,
    GaussianBelief,
    LinearMeasSpec,
    NonlinearMeasSpec,
    TransitionSpec,
    UnscentedParams,
    ekf_update,
    kf_update,
    predict,
    ukf_update,
)
from .geom import BsSite, LosVerdict, NlosInputs, detect_nlos

log = logging.getLogger(__name__)

# Scheme-neutral prior spread: ~10 m position, ~5 m/s velocity.
INIT_POS_STD = 10.0
INIT_VEL_STD = 5.0
# Two-point velocity starts faster than this are discarded as biased.
MAX_INIT_SPEED = 60.0


class SchemeId(enum.Enum):
    LC_KF = "lc-kf"
    TC_EKF = "tc-ekf"
    TC_EKF_R = "tc-ekf-r"
    TC_UKF = "tc-ukf"
    TC_UKF_R = "tc-ukf-r"

    @classmethod
    def from_token(cls, token: str) -> "SchemeId":
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scheme {token!r}; valid: {valid}") from None

    @property
    def hybrid(self) -> bool:
        return self in (SchemeId.TC_EKF, SchemeId.TC_UKF)

    @property
    def centralized(self) -> bool:
        return self is not SchemeId.LC_KF


@dataclass(frozen=True)
class RawMeasurement:
    """What one BS reports for one epoch."""

    r_toa_m: float
    azimuth_rad: float
    r_rss_m: float
    los_truth: bool


@dataclass
class EpochFrame:
    """One time step: ground truth plus the per-BS observations."""

    t: float
    truth: np.ndarray  # [x, y, vx, vy]; evaluation only, filters never see it
    obs: list[tuple[BsSite, RawMeasurement]]
    ue_height: float

    def __post_init__(self):
        self.truth = np.asarray(self.truth, dtype=float).reshape(4)
        ids = [bs.id for bs, _ in self.obs]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate BS ids within one epoch")


@dataclass(frozen=True)
class NoiseDefaults:
    """Filter-side measurement covariances (not the injected noise).

    Empirically tuned on the default synthetic scenario: 2 cm on
    centralized range rows, 0.1 degrees on azimuth rows, 3 cm per axis
    on the decentralized position fixes. Deliberately tighter than the
    injected corruption; the weighting mismatch is part of what the
    benchmark measures.
    """

    sigma_range_filter: float = 0.02
    sigma_angle_filter: float = math.radians(0.1)
    sigma_fix_filter: float = 0.03


@dataclass
class EpochDiagnostics:
    t: float
    n_admitted: int
    n_used: int
    innovation_norm: float
    error_2d: float
    predict_only: bool


@dataclass(frozen=True)
class FilterTuning:
    """Everything the filters need beyond the frames themselves."""

    noise: NoiseDefaults = NoiseDefaults()
    accel_sigma: float = 1.0
    nlos_epsilon: float = geom.DEFAULT_NLOS_EPSILON
    ut_alpha: float = 1.0
    ut_beta: float = 2.0
    ut_kappa: float | None = None

    def ut(self) -> UnscentedParams:
        return UnscentedParams.scaled(
            alpha=self.ut_alpha, beta=self.ut_beta, kappa=self.ut_kappa
        )


def admit_obs(
    obs: Sequence[tuple[BsSite, RawMeasurement]],
    gate_on: bool,
    epsilon: float = geom.DEFAULT_NLOS_EPSILON,
) -> list[tuple[BsSite, RawMeasurement]]:
    """Apply the NLOS gate (or admit everything) and sort by BS id."""
    kept = []
    for bs, m in obs:
        if gate_on:
            verdict = detect_nlos(
                NlosInputs(r_toa=m.r_toa_m, r_rss=m.r_rss_m, epsilon=epsilon)
            )
            if verdict is LosVerdict.NLOS:
                continue
        kept.append((bs, m))
    kept.sort(key=lambda pair: pair[0].id)
    return kept


def _horizontal_ranges(
    frame: EpochFrame,
) -> tuple[list[tuple[BsSite, RawMeasurement]], np.ndarray]:
    """Reduce 3D TOA ranges to horizontal ranges; drop inconsistent BSs."""
    kept = []
    ranges = []
    for bs, m in frame.obs:
        dz = frame.ue_height - bs.pos.z
        try:
            ranges.append(geom.range_2d(m.r_toa_m, dz))
        except InconsistentGeometry:
            log.debug(
                "epoch %.3f: BS %d range %.2f m below height gap, dropped",
                frame.t,
                bs.id,
                m.r_toa_m,
            )
            continue
        kept.append((bs, m))
    return kept, np.asarray(ranges, dtype=float)


def assemble_centralized(
    frame: EpochFrame, hybrid: bool, noise: NoiseDefaults = NoiseDefaults()
) -> tuple[np.ndarray, NonlinearMeasSpec]:
    """Stack (range[, azimuth]) rows of every BS in the frame.

    The returned spec's h_fn/jac_fn evaluate the stacked horizontal
    range/azimuth model at an arbitrary state, so the same closure
    serves the EKF linearization and the UKF sigma points.
    """
    if not frame.obs:
        raise NoVisibleBs("no observations in frame")
    kept, r2d = _horizontal_ranges(frame)
    if not kept:
        raise NoVisibleBs("every BS failed the height-consistency check")
    n = len(kept)
    step = 2 if hybrid else 1
    z = np.empty(n * step)
    z[::step] = r2d
    if hybrid:
        z[1::step] = [m.azimuth_rad for _, m in kept]

    bs_en = np.array([[bs.pos.x, bs.pos.y] for bs, _ in kept])
    angle_mask = np.zeros(n * step, dtype=bool)
    if hybrid:
        angle_mask[1::step] = True

    def h_fn(state: np.ndarray) -> np.ndarray:
        return kernels.stack_pred(np.asarray(state, dtype=float), bs_en, hybrid)

    def jac_fn(state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        d = np.hypot(state[0] - bs_en[:, 0], state[1] - bs_en[:, 1])
        if np.min(d) < geom.MIN_HORIZONTAL_RANGE:
            raise geom.DegenerateGeometry(
                "state estimate coincides with a BS; Jacobian undefined"
            )
        return kernels.stack_jac(state, bs_en, hybrid)

    def residual_fn(obs_vec: np.ndarray, pred_vec: np.ndarray) -> np.ndarray:
        resid = obs_vec - pred_vec
        if hybrid:
            resid[angle_mask] = kernels.wrap_angles(resid[angle_mask])
        return resid

    diag = np.empty(n * step)
    diag[::step] = noise.sigma_range_filter**2
    if hybrid:
        diag[1::step] = noise.sigma_angle_filter**2
    spec = NonlinearMeasSpec(
        h_fn=h_fn,
        jac_fn=jac_fn,
        r=np.diag(diag),
        residual_fn=residual_fn,
        angle_mask=angle_mask,
    )
    return z, spec


def assemble_decentralized(
    frame: EpochFrame, noise: NoiseDefaults = NoiseDefaults()
) -> tuple[np.ndarray, LinearMeasSpec]:
    """One horizontal fix per BS, stacked under the constant H of
    repeated [I2 0] blocks.

    BSs whose measured range cannot support the known height difference
    are dropped with a diagnostic instead of failing the epoch.
    """
    if not frame.obs:
        raise NoVisibleBs("no observations in frame")
    bs_enz = np.array([[bs.pos.x, bs.pos.y, bs.pos.z] for bs, _ in frame.obs])
    r_meas = np.array([m.r_toa_m for _, m in frame.obs])
    az = np.array([m.azimuth_rad for _, m in frame.obs])
    fixes, ok = kernels.fix_stack(bs_enz, r_meas, az, frame.ue_height)
    if not np.all(ok):
        for (bs, m), good in zip(frame.obs, ok):
            if not good:
                log.debug(
                    "epoch %.3f: BS %d fix dropped (range %.2f m below height gap)",
                    frame.t,
                    bs.id,
                    m.r_toa_m,
                )
    fixes = fixes[ok]
    n = fixes.shape[0]
    if n == 0:
        raise NoVisibleBs("every BS fix failed the height-consistency check")
    z = fixes.ravel()
    h = np.zeros((2 * n, 4))
    h[0::2, 0] = 1.0
    h[1::2, 1] = 1.0
    r = (noise.sigma_fix_filter**2) * np.eye(2 * n)
    return z, LinearMeasSpec(h=h, r=r)


def _nearest_fix(frame: EpochFrame, gate_on: bool, epsilon: float):
    candidates = admit_obs(frame.obs, gate_on, epsilon) or admit_obs(
        frame.obs, False
    )
    for bs, m in sorted(candidates, key=lambda pair: pair[1].r_toa_m):
        try:
            return geom.fix_2d(
                bs,
                geom.RangeAngle(range_m=m.r_toa_m, azimuth_rad=m.azimuth_rad),
                frame.ue_height,
            )
        except InconsistentGeometry:
            continue
    return None


def initial_belief(
    frame: EpochFrame,
    gate_on: bool = True,
    epsilon: float = geom.DEFAULT_NLOS_EPSILON,
    next_frame: EpochFrame | None = None,
) -> GaussianBelief:
    """Scheme-neutral start from the nearest admitted BS's fix.

    With a second frame available, velocity starts from the two-point
    fix difference; otherwise it starts at zero. Falls back to ungated
    observations if the gate empties the frame.
    """
    if not frame.obs:
        raise NoVisibleBs("cannot initialize from a frame with no observations")
    fix = _nearest_fix(frame, gate_on, epsilon)
    if fix is None:
        raise NoVisibleBs("no admitted BS produced a usable fix")
    vel = np.zeros(2)
    if next_frame is not None and next_frame.obs:
        fix2 = _nearest_fix(next_frame, gate_on, epsilon)
        dt = next_frame.t - frame.t
        if fix2 is not None and dt > 0.0:
            vel = np.array([(fix2.x - fix.x) / dt, (fix2.y - fix.y) / dt])
            speed = float(np.hypot(vel[0], vel[1]))
            if speed > MAX_INIT_SPEED:  # biased fix pair; distrust it
                vel = np.zeros(2)
    mean = np.array([fix.x, fix.y, vel[0], vel[1]])
    cov = np.diag(
        [INIT_POS_STD**2, INIT_POS_STD**2, INIT_VEL_STD**2, INIT_VEL_STD**2]
    )
    return GaussianBelief(mean=mean, cov=cov)


def step(
    scheme: SchemeId,
    belief: GaussianBelief,
    frame: EpochFrame,
    trans: TransitionSpec,
    gate_on: bool,
    noise: NoiseDefaults = NoiseDefaults(),
    nlos_epsilon: float = geom.DEFAULT_NLOS_EPSILON,
    ut: UnscentedParams = DEFAULT_UT,
) -> tuple[GaussianBelief, EpochDiagnostics]:
    """Advance one epoch: predict always, update iff any BS is admitted."""
    pred = predict(belief, trans)
    admitted = admit_obs(frame.obs, gate_on, nlos_epsilon)
    diag = EpochDiagnostics(
        t=frame.t,
        n_admitted=len(admitted),
        n_used=0,
        innovation_norm=0.0,
        error_2d=0.0,
        predict_only=True,
    )
    post = pred
    if admitted:
        gated = replace(frame, obs=admitted)
        try:
            if scheme is SchemeId.LC_KF:
                z, lin = assemble_decentralized(gated, noise)
                diag.innovation_norm = float(
                    np.linalg.norm(z - lin.h @ pred.mean)
                )
                diag.n_used = z.size // 2
                post = kf_update(pred, z, lin)
            else:
                z, spec = assemble_centralized(gated, scheme.hybrid, noise)
                resid = spec.residual_fn(z, spec.h_fn(pred.mean))
                diag.innovation_norm = float(np.linalg.norm(resid))
                diag.n_used = z.size // (2 if scheme.hybrid else 1)
                if scheme in (SchemeId.TC_EKF, SchemeId.TC_EKF_R):
                    post = ekf_update(pred, z, spec)
                else:
                    post = ukf_update(
                        pred, z, spec.h_fn, spec.r, ut, spec.angle_mask
                    )
            diag.predict_only = False
        except NoVisibleBs:
            post = pred
    diag.error_2d = float(np.linalg.norm(post.mean[:2] - frame.truth[:2]))
    return post, diag
