"""Synthetic urban scenario: trajectory, BS deployment, LOS process,
measurement corruption.

This stands in for a ray-traced measurement source. The injected noise
magnitudes, the exponential NLOS excess-path model, and the sidewalk
offset of the BS line are all tunable knobs of the benchmark, not
physical truths; see ScenarioConfig.

Everything is a pure function of (config, seed): two runs with the same
inputs produce identical output, byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InfeasibleProfile
from .fusion import EpochFrame, RawMeasurement
from .geom import BsSite, Position3

# A ~5.6 km downtown loop with eleven 90-degree corners.
DEFAULT_WAYPOINTS: tuple[tuple[float, float], ...] = (
    (0.0, 0.0),
    (600.0, 0.0),
    (600.0, 400.0),
    (200.0, 400.0),
    (200.0, 800.0),
    (800.0, 800.0),
    (800.0, 1200.0),
    (0.0, 1200.0),
    (0.0, 600.0),
    (-400.0, 600.0),
    (-400.0, 0.0),
    (0.0, 0.0),
)

DEFAULT_STOPS: tuple[tuple[float, float], ...] = (
    (900.0, 10.0),
    (2600.0, 8.0),
    (4300.0, 12.0),
)


@dataclass(frozen=True)
class SpeedProfile:
    """Nominal cruise speed plus stop/accelerate behaviour.

    stops are (arc position m, dwell s) events; the vehicle brakes to a
    halt there, waits, then accelerates away. Waypoint corners are
    rounded into circular arcs of turn_radius and swept at corner_speed.
    All speed changes use the constant accel magnitude.
    """

    nominal: float = 12.0
    accel: float = 2.0
    corner_speed: float = 4.0
    turn_radius: float = 10.0
    stops: tuple[tuple[float, float], ...] = DEFAULT_STOPS


@dataclass(frozen=True)
class NoiseInjection:
    """Injected measurement corruption (distinct from the filter's R).

    Under NLOS, r_toa gains an exponential excess-path bias and the
    azimuth is deflected by a wide uniform error: the departure angle
    of a reflected path points at the reflector, which in a built-up
    area can sit almost anywhere relative to the receiver.
    """

    sigma_range: float = 0.01
    sigma_angle: float = math.radians(0.1)
    sigma_rss_range: float = 15.0
    nlos_bias_mean: float = 250.0
    nlos_angle_bias: float = math.radians(180.0)

    @classmethod
    def zero(cls) -> "NoiseInjection":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class LosProcessConfig:
    """Connectivity process settings.

    count_marginals[c] is the long-run fraction of time exactly c BSs
    are in LOS (c = 0..3). The count holds for an exponential dwell,
    then redraws. NLOS links among the n_obs nearest BSs still deliver
    (biased) measurements with probability nlos_link_prob each epoch.
    """

    count_marginals: tuple[float, ...] = (0.03, 0.21, 0.46, 0.30)
    mean_dwell_s: float = 5.0
    n_obs: int = 4
    nlos_link_prob: float = 0.10

    def __post_init__(self):
        if abs(sum(self.count_marginals) - 1.0) > 1e-9:
            raise ValueError("count_marginals must sum to 1")
        if any(p < 0 for p in self.count_marginals):
            raise ValueError("count_marginals must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    dt: float = 0.5
    waypoints: tuple[tuple[float, float], ...] = DEFAULT_WAYPOINTS
    speed: SpeedProfile = SpeedProfile()
    bs_spacing: float = 250.0
    bs_height: float = 10.0
    ue_height: float = 2.0
    bs_lateral_offset: float = 3.0
    noise: NoiseInjection = NoiseInjection()
    los: LosProcessConfig = LosProcessConfig()
    seed: int = 20240801


@dataclass
class TrajectoryTruth:
    """Reference solution: times and [x, y, vx, vy] rows.

    Velocity rows are forward differences of position, so position
    deltas equal velocity * dt exactly.
    """

    t: np.ndarray
    states: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    def positions(self) -> np.ndarray:
        return self.states[:, :2]


class _Polyline:
    """Arc-length parameterization of a point chain.

    slow_zones lists (s_start, s_end) arc intervals (the rounded
    corners) where cruise speed does not apply.
    """

    def __init__(
        self,
        pts: np.ndarray,
        slow_zones: tuple[tuple[float, float], ...] = (),
    ):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise InfeasibleProfile("need at least two 2D waypoints")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len < 1e-9):
            raise InfeasibleProfile("consecutive path points coincide")
        self.pts = pts
        self.seg = seg
        self.seg_len = seg_len
        self.cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.length = float(self.cum[-1])
        self.slow_zones = slow_zones

    def _segment(self, s: float) -> int:
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        return min(max(i, 0), len(self.seg_len) - 1)

    def point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.length)
        i = self._segment(s)
        frac = (s - self.cum[i]) / self.seg_len[i]
        return self.pts[i] + frac * self.seg[i]

    def tangent_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.length)
        i = self._segment(s)
        return self.seg[i] / self.seg_len[i]


ARC_SAMPLE_STEP = 0.5  # m; resolution of the rounded-corner sampling


def _rounded_path(
    waypoints: Iterable[tuple[float, float]], radius: float
) -> _Polyline:
    """Replace interior waypoint corners with circular arcs.

    Each corner eats radius*tan(angle/2) off its two legs; the turn is
    swept as a dense point chain. Raises InfeasibleProfile if the legs
    are too short for the requested radius.
    """
    pts = np.asarray(list(waypoints), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise InfeasibleProfile("need at least two 2D waypoints")
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    if np.any(seg_len < 1e-6):
        raise InfeasibleProfile("consecutive waypoints coincide")

    chain: list[np.ndarray] = [pts[0]]
    zones: list[tuple[float, float]] = []
    run = 0.0  # arc length accumulated along the chain

    def extend(point: np.ndarray) -> None:
        nonlocal run
        run += float(np.hypot(*(point - chain[-1])))
        chain.append(point)

    for k in range(1, pts.shape[0] - 1):
        u_in = seg[k - 1] / seg_len[k - 1]
        u_out = seg[k] / seg_len[k]
        cross = u_in[0] * u_out[1] - u_in[1] * u_out[0]
        dot = float(np.clip(u_in @ u_out, -1.0, 1.0))
        turn = math.atan2(abs(cross), dot)
        if turn < 1e-9 or radius <= 0.0:
            extend(pts[k])
            continue
        if turn > math.pi - 1e-6:
            raise InfeasibleProfile(f"U-turn at waypoint {k} cannot be rounded")
        trim = radius * math.tan(turn / 2.0)
        if trim > 0.5 * min(seg_len[k - 1], seg_len[k]):
            raise InfeasibleProfile(
                f"waypoints around corner {k} are too close for turn radius {radius} m"
            )
        entry = pts[k] - u_in * trim
        extend(entry)
        zone_start = run
        # circle centre sits perpendicular to the incoming leg
        sign = 1.0 if cross > 0 else -1.0
        centre = entry + sign * radius * np.array([-u_in[1], u_in[0]])
        a0 = math.atan2(entry[1] - centre[1], entry[0] - centre[0])
        n_steps = max(2, int(math.ceil(radius * turn / ARC_SAMPLE_STEP)))
        for j in range(1, n_steps + 1):
            a = a0 + sign * turn * j / n_steps
            extend(centre + radius * np.array([math.cos(a), math.sin(a)]))
        zones.append((zone_start, run))
    extend(pts[-1])
    return _Polyline(np.asarray(chain), slow_zones=tuple(zones))


def synth_trajectory(cfg: ScenarioConfig) -> TrajectoryTruth:
    """Drive the waypoint polyline with the configured speed profile.

    The vehicle starts at cruise speed, brakes to corner_speed for each
    interior corner, halts at stop events, and otherwise holds nominal
    speed. Purely deterministic; the seed plays no role here.
    """
    sp = cfg.speed
    if sp.nominal <= 0 or sp.accel <= 0:
        raise InfeasibleProfile("nominal speed and accel must be > 0")
    if not 0 < sp.corner_speed <= sp.nominal:
        raise InfeasibleProfile("corner_speed must lie in (0, nominal]")
    line = _rounded_path(cfg.waypoints, sp.turn_radius)
    stops = sorted(sp.stops)
    for s_stop, dwell in stops:
        if not 0.0 < s_stop < line.length:
            raise InfeasibleProfile(
                f"stop at arc {s_stop} m lies outside the path (0, {line.length:.1f})"
            )
        if dwell < 0:
            raise InfeasibleProfile("stop dwell must be >= 0")

    zones = line.slow_zones

    def speed_limit(s: float, pending: list[tuple[float, float]]) -> float:
        v = sp.nominal
        for z0, z1 in zones:
            d = 0.0 if z0 <= s <= z1 else min(abs(s - z0), abs(s - z1))
            v = min(v, math.sqrt(sp.corner_speed**2 + 2.0 * sp.accel * d))
        for s_stop, _ in pending:
            if s_stop >= s:
                v = min(v, math.sqrt(2.0 * sp.accel * (s_stop - s)))
                break  # stops are sorted; nearest ahead dominates
        return v

    dt = cfg.dt
    max_steps = int(line.length / (dt * min(sp.corner_speed, 1.0)) + sum(d for _, d in stops) / dt) + 10_000
    pending = list(stops)
    positions = []
    t = 0.0
    s = 0.0
    v = min(sp.nominal, speed_limit(0.0, pending))
    dwell_left = 0.0
    for _ in range(max_steps):
        positions.append(line.point_at(s))
        if s >= line.length - 1e-9:
            break
        if dwell_left > 0.0:
            dwell_left -= dt
            v = 0.0
        else:
            v = min(v + sp.accel * dt, speed_limit(s, pending))
            ds = v * dt
            if pending and s + ds >= pending[0][0] and s < pending[0][0]:
                s = pending[0][0]
                dwell_left = pending[0][1]
                v = 0.0
                pending.pop(0)
            else:
                s += ds
        t += dt
    else:
        raise InfeasibleProfile("trajectory integration did not terminate")

    pos = np.asarray(positions)
    n = pos.shape[0]
    vel = np.empty_like(pos)
    vel[:-1] = (pos[1:] - pos[:-1]) / dt
    vel[-1] = vel[-2] if n > 1 else 0.0
    states = np.hstack([pos, vel])
    times = dt * np.arange(n)
    return TrajectoryTruth(t=times, states=states)


def place_bs(
    truth: TrajectoryTruth,
    spacing: float,
    height: float,
    lateral_offset: float = 15.0,
) -> list[BsSite]:
    """Drop BSs every `spacing` meters of driven arc length, offset to a
    sidewalk line on the left of the driving direction."""
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    pos = truth.positions()
    step = np.diff(pos, axis=0)
    step_len = np.hypot(step[:, 0], step[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(step_len)])
    length = float(cum[-1])
    if length <= 0.0:
        raise ValueError("trajectory has no extent")
    moving = np.flatnonzero(step_len > 1e-9)
    sites = []
    count = int(length / spacing) + 1
    for k in range(count):
        s = min(k * spacing, length)
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, step_len.size - 1)
        if step_len[i] <= 1e-9:
            # stationary dwell; borrow the nearest moving step's direction
            j = moving[np.argmin(np.abs(moving - i))]
            tangent = step[j] / step_len[j]
            p = pos[i]
        else:
            frac = (s - cum[i]) / step_len[i]
            p = pos[i] + frac * step[i]
            tangent = step[i] / step_len[i]
        e = p[0] - tangent[1] * lateral_offset
        n = p[1] + tangent[0] * lateral_offset
        sites.append(BsSite(id=k, pos=Position3(x=e, y=n, z=height)))
    return sites


def los_count_series(
    n_steps: int, cfg: LosProcessConfig, dt: float, rng: np.random.Generator
) -> np.ndarray:
    """Semi-Markov simultaneous-LOS count sequence.

    Each segment draws a count from count_marginals and holds it for an
    exponential dwell (>= 1 step). Because every count shares the same
    dwell law, the long-run time fractions match the marginals.
    """
    mean_dwell_steps = max(1.0, cfg.mean_dwell_s / dt)
    p = np.asarray(cfg.count_marginals)
    chunks = []
    filled = 0
    while filled < n_steps:
        m = int((n_steps - filled) / mean_dwell_steps * 1.5) + 16
        states = rng.choice(len(p), size=m, p=p)
        dwells = np.maximum(1, np.ceil(rng.exponential(mean_dwell_steps, size=m)).astype(np.int64))
        seg = np.repeat(states, dwells)
        chunks.append(seg)
        filled += seg.size
    return np.concatenate(chunks)[:n_steps].astype(np.int64)


class LosProcess:
    """Stateful per-epoch view of the LOS count process.

    step() returns a boolean LOS flag per site, granting LOS to the
    `count` nearest sites first.
    """

    def __init__(self, cfg: LosProcessConfig, dt: float, rng: np.random.Generator):
        self._cfg = cfg
        self._dt = dt
        self._rng = rng
        self._queue: list[int] = []

    def _next_count(self) -> int:
        if not self._queue:
            self._queue = list(los_count_series(256, self._cfg, self._dt, self._rng))
        return self._queue.pop(0)

    def step(self, ue_pos: Position3, sites: list[BsSite]) -> np.ndarray:
        count = min(self._next_count(), len(sites))
        d = np.array(
            [
                (s.pos.x - ue_pos.x) ** 2
                + (s.pos.y - ue_pos.y) ** 2
                + (s.pos.z - ue_pos.z) ** 2
                for s in sites
            ]
        )
        flags = np.zeros(len(sites), dtype=bool)
        flags[np.argsort(d, kind="stable")[:count]] = True
        return flags


def synth_measurements(
    truth: TrajectoryTruth,
    sites: list[BsSite],
    counts: np.ndarray,
    noise: NoiseInjection,
    rng: np.random.Generator,
    ue_height: float,
    n_obs: int = 4,
    nlos_link_prob: float = 0.35,
    include_nlos: bool = True,
) -> list[EpochFrame]:
    """Corrupt the forward model into per-epoch observation frames.

    Per included BS: r_toa is the true 3D range plus Gaussian noise plus
    (under NLOS) an exponential excess-path bias; the azimuth gets
    Gaussian noise plus (under NLOS) a wide uniform deflection; r_rss
    is the true range plus its own, much larger, Gaussian noise. The
    `counts[k]` nearest BSs are LOS at epoch k; remaining nearby BSs
    are NLOS and appear only with nlos_link_prob (never when
    include_nlos is False).
    """
    n_epochs = len(truth)
    if counts.shape[0] != n_epochs:
        raise ValueError("counts length must match trajectory length")
    site_e = np.array([s.pos.x for s in sites])
    site_n = np.array([s.pos.y for s in sites])
    site_u = np.array([s.pos.z for s in sites])
    ue = truth.positions()
    dx = ue[:, 0:1] - site_e[None, :]
    dy = ue[:, 1:2] - site_n[None, :]
    dz = ue_height - site_u[None, :]
    dist3 = np.sqrt(dx * dx + dy * dy + dz * dz)
    az = np.arctan2(dy, dx)

    k_obs = min(n_obs, len(sites))
    order = np.argsort(dist3, axis=1, kind="stable")[:, :k_obs]
    rows = np.arange(n_epochs)[:, None]
    d_sel = dist3[rows, order]
    az_sel = az[rows, order]

    shape = (n_epochs, k_obs)
    toa_noise = rng.normal(0.0, 1.0, shape) * noise.sigma_range
    ang_noise = rng.normal(0.0, 1.0, shape) * noise.sigma_angle
    rss_noise = rng.normal(0.0, 1.0, shape) * noise.sigma_rss_range
    nlos_bias = rng.exponential(1.0, shape) * noise.nlos_bias_mean
    ang_bias = rng.uniform(-1.0, 1.0, shape) * noise.nlos_angle_bias
    link_draw = rng.uniform(0.0, 1.0, shape)

    slot_idx = np.arange(k_obs)[None, :]
    los_mask = slot_idx < np.minimum(counts, k_obs)[:, None]

    r_toa = d_sel + toa_noise + np.where(los_mask, 0.0, nlos_bias)
    az_meas = az_sel + ang_noise + np.where(los_mask, 0.0, ang_bias)
    az_meas = (az_meas + np.pi) % (2.0 * np.pi) - np.pi
    az_meas[az_meas == -np.pi] = np.pi
    r_rss = d_sel + rss_noise
    included = los_mask | (include_nlos & (link_draw < nlos_link_prob))
    r_toa = np.maximum(r_toa, 0.0)
    r_rss = np.maximum(r_rss, 0.0)

    frames = []
    for k in range(n_epochs):
        obs = []
        for j in range(k_obs):
            if not included[k, j]:
                continue
            site = sites[order[k, j]]
            obs.append(
                (
                    site,
                    RawMeasurement(
                        r_toa_m=float(r_toa[k, j]),
                        azimuth_rad=float(az_meas[k, j]),
                        r_rss_m=float(r_rss[k, j]),
                        los_truth=bool(los_mask[k, j]),
                    ),
                )
            )
        frames.append(
            EpochFrame(
                t=float(truth.t[k]),
                truth=truth.states[k],
                obs=obs,
                ue_height=ue_height,
            )
        )
    return frames


def build_scenario(
    cfg: ScenarioConfig, mode: str = "noisy"
) -> tuple[TrajectoryTruth, list[BsSite], list[EpochFrame]]:
    """Full pipeline: trajectory, deployment, LOS process, measurements.

    mode "perfect" delivers exact measurements from the nearby BSs at
    every epoch, so that any positioning error is attributable to the
    fusion scheme alone; mode "noisy" drives visibility from the LOS
    process and applies the configured corruption, letting NLOS links
    through (to be caught, or not, by the gate downstream).
    """
    if mode not in ("perfect", "noisy"):
        raise ValueError(f"mode must be 'perfect' or 'noisy', got {mode!r}")
    truth = synth_trajectory(cfg)
    sites = place_bs(truth, cfg.bs_spacing, cfg.bs_height, cfg.bs_lateral_offset)
    ss = np.random.SeedSequence(cfg.seed)
    rng_los, rng_meas = (np.random.default_rng(s) for s in ss.spawn(2))
    perfect = mode == "perfect"
    if perfect:
        counts = np.full(len(truth), cfg.los.n_obs, dtype=np.int64)
    else:
        counts = los_count_series(len(truth), cfg.los, cfg.dt, rng_los)
    frames = synth_measurements(
        truth,
        sites,
        counts,
        NoiseInjection.zero() if perfect else cfg.noise,
        rng_meas,
        ue_height=cfg.ue_height,
        n_obs=cfg.los.n_obs,
        nlos_link_prob=cfg.los.nlos_link_prob,
        include_nlos=not perfect,
    )
    return truth, sites, frames
