"""Linearization-error studies and scenario error statistics.

Two Monte-Carlo style studies probe how badly a first-order expansion of
the range/azimuth model distorts distributions (weighting errors) and
point predictions (transformation errors), and a scenario driver runs a
full simulated drive through any fusion scheme and reduces the result
to RMS / max / threshold / CDF statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sim
from .errors import DegenerateGeometry, EmptySeries
from .filters import TransitionSpec
from .fusion import FilterTuning, SchemeId, initial_belief, step

# Error thresholds (m) reported by every metrics row.
METRIC_THRESHOLDS = (2.0, 1.0, 0.3)

# Mesh cells closer to the BS than this are dropped: the azimuth (and
# its expansion) is undefined there.
MESH_EXCLUDE_RADIUS = 1e-6


@dataclass
class PdfStudyResult:
    """Same point cloud pushed through the exact and the linearized map."""

    quantity: str  # "range" or "angle"
    nonlinear: np.ndarray
    linearized: np.ndarray

    @property
    def nonlinear_mean(self) -> float:
        return float(np.mean(self.nonlinear))

    @property
    def linearized_mean(self) -> float:
        return float(np.mean(self.linearized))

    @property
    def nonlinear_var(self) -> float:
        return float(np.var(self.nonlinear))

    @property
    def linearized_var(self) -> float:
        return float(np.var(self.linearized))


@dataclass
class MeshStudyResult:
    """Absolute first-order model error over a UE-offset grid.

    Arrays are indexed [iy, ix]. Cells inside MESH_EXCLUDE_RADIUS of the
    BS are NaN. Angle errors are raw |exact - extrapolated| differences:
    the linear extrapolation is unbounded, so its miss can exceed pi and
    folding it back onto the circle would hide exactly the failure this
    study exists to expose.
    """

    dx: np.ndarray
    dy: np.ndarray
    range_err: np.ndarray
    angle_err: np.ndarray
    lin_point: tuple[float, float]


@dataclass
class ErrorSeries:
    """Per-epoch 2D positioning error and admitted-BS count."""

    t: np.ndarray
    error_m: np.ndarray
    n_bs: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]


@dataclass
class MetricsReport:
    rms: float
    max: float
    pct_lt: dict[float, float]
    cdf_errors: np.ndarray = field(repr=False)
    cdf_quantiles: np.ndarray = field(repr=False)


def _range_angle(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.hypot(points[:, 0], points[:, 1])
    a = np.arctan2(points[:, 1], points[:, 0])
    return r, a


def pdf_transform_study(
    mean_offset: tuple[float, float],
    sigma: float,
    n: int,
    rng: np.random.Generator,
) -> tuple[PdfStudyResult, PdfStudyResult]:
    """Push a Gaussian cloud of UE offsets through both measurement maps.

    The cloud is N(mean_offset, sigma^2 I) around a BS at the origin.
    The exact map is (range, azimuth); the linearized map is its
    first-order expansion about the cloud mean, which is what a filter
    linearizing at its state estimate would use. Returns (range study,
    angle study).
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    mu = np.asarray(mean_offset, dtype=float)
    r0 = math.hypot(mu[0], mu[1])
    if r0 < MESH_EXCLUDE_RADIUS:
        raise DegenerateGeometry("cloud mean coincides with the BS")
    cloud = mu + sigma * rng.standard_normal((n, 2))
    r_nl, a_nl = _range_angle(cloud)

    delta = cloud - mu
    jac_r = mu / r0
    jac_a = np.array([-mu[1], mu[0]]) / (r0 * r0)
    r_lin = r0 + delta @ jac_r
    a_lin = math.atan2(mu[1], mu[0]) + delta @ jac_a

    return (
        PdfStudyResult(quantity="range", nonlinear=r_nl, linearized=r_lin),
        PdfStudyResult(quantity="angle", nonlinear=a_nl, linearized=a_lin),
    )


def _axis(spec: tuple[float, float, float]) -> np.ndarray:
    lo, hi, step = spec
    if step <= 0 or hi < lo:
        raise ValueError(f"bad grid axis {spec!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def mesh_linearization_study(
    x_spec: tuple[float, float, float],
    y_spec: tuple[float, float, float],
    lin_point: tuple[float, float],
) -> MeshStudyResult:
    """Tabulate |h(x) - (h(x0) + H (x - x0))| over a UE-offset mesh.

    x_spec/y_spec are (min, max, step) for the UE-minus-BS offsets;
    lin_point is the offset the expansion is taken about.
    """
    x = _axis(x_spec)
    y = _axis(y_spec)
    x0, y0 = float(lin_point[0]), float(lin_point[1])
    rr0 = x0 * x0 + y0 * y0
    r0 = math.sqrt(rr0)
    if r0 < MESH_EXCLUDE_RADIUS:
        raise DegenerateGeometry("linearization point coincides with the BS")
    gx, gy = np.meshgrid(x, y)
    r = np.hypot(gx, gy)
    a = np.arctan2(gy, gx)

    a0 = math.atan2(y0, x0)
    r_lin = r0 + (x0 * (gx - x0) + y0 * (gy - y0)) / r0
    a_lin = a0 + (-y0 * (gx - x0) + x0 * (gy - y0)) / rr0

    range_err = np.abs(r - r_lin)
    angle_err = np.abs(a - a_lin)
    near = r < MESH_EXCLUDE_RADIUS
    range_err[near] = np.nan
    angle_err[near] = np.nan
    return MeshStudyResult(
        dx=x, dy=y, range_err=range_err, angle_err=angle_err, lin_point=(x0, y0)
    )


def metrics(errors: ErrorSeries) -> MetricsReport:
    """Reduce an error series to the summary statistics row."""
    if len(errors) == 0:
        raise EmptySeries("no epochs in error series")
    e = np.asarray(errors.error_m, dtype=float)
    srt = np.sort(e)
    quantiles = np.arange(1, srt.size + 1) / srt.size
    pct = {thr: float(np.mean(e < thr)) for thr in METRIC_THRESHOLDS}
    return MetricsReport(
        rms=float(np.sqrt(np.mean(e * e))),
        max=float(np.max(e)),
        pct_lt=pct,
        cdf_errors=srt,
        cdf_quantiles=quantiles,
    )


def run_frames(
    frames: list,
    dt: float,
    scheme: SchemeId,
    gate_on: bool = True,
    tuning: FilterTuning = FilterTuning(),
) -> tuple[ErrorSeries, MetricsReport]:
    """Run one scheme over pre-built epoch frames.

    The belief is initialized from the first frame that offers any
    observation (frames before that, if any, are not scored).
    """
    first = next((i for i, f in enumerate(frames) if f.obs), None)
    if first is None:
        raise EmptySeries("scenario produced no observations at all")
    belief = initial_belief(
        frames[first],
        gate_on=gate_on,
        epsilon=tuning.nlos_epsilon,
        next_frame=frames[first + 1] if first + 1 < len(frames) else None,
    )
    trans = TransitionSpec.constant_velocity(dt, tuning.accel_sigma)
    ut = tuning.ut()

    times = [frames[first].t]
    errs = [float(np.linalg.norm(belief.mean[:2] - frames[first].truth[:2]))]
    nbs = [len(frames[first].obs)]
    for frame in frames[first + 1 :]:
        belief, diag = step(
            scheme,
            belief,
            frame,
            trans,
            gate_on=gate_on,
            noise=tuning.noise,
            nlos_epsilon=tuning.nlos_epsilon,
            ut=ut,
        )
        times.append(diag.t)
        errs.append(diag.error_2d)
        nbs.append(diag.n_used)
    series = ErrorSeries(
        t=np.asarray(times), error_m=np.asarray(errs), n_bs=np.asarray(nbs)
    )
    return series, metrics(series)


def run_scenario(
    cfg: sim.ScenarioConfig,
    scheme: SchemeId,
    measurement_mode: str = "noisy",
    gate_on: bool = True,
    tuning: FilterTuning = FilterTuning(),
) -> tuple[ErrorSeries, MetricsReport]:
    """Simulate one scenario and run one scheme over every epoch.

    Output is fully determined by (cfg, scheme, mode, gate_on, tuning).
    """
    _, _, frames = sim.build_scenario(cfg, measurement_mode)
    return run_frames(frames, cfg.dt, scheme, gate_on=gate_on, tuning=tuning)
