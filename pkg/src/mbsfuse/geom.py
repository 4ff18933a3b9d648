"""Geometric measurement models, single-BS position fixing, NLOS gate.

Conventions used everywhere in this package:

* Local tangent frame, x east / y north / z up, all lengths in meters.
* Offsets are UE minus BS: ``dx = x_ue - x_bs`` and so on.
* Azimuth is the two-argument arctangent of (dy, dx), i.e. the angle
  from the +x axis, always reported in (-pi, pi]. The inverse mapping
  is therefore ``x = x_bs + r2d*cos(az)``, ``y = y_bs + r2d*sin(az)``,
  which makes fixing the exact inverse of measuring.
* Angles are radians; degrees exist only at CLI/config/report edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometry,
    InconsistentGeometry,
    MissingElevation,
)

# Horizontal offsets below this are treated as sitting on the azimuth
# singularity and rejected loudly.
MIN_HORIZONTAL_RANGE = 1e-6

# Default gap (m) between time-based and power-based range above which a
# link is declared non-line-of-sight.
DEFAULT_NLOS_EPSILON = 80.0


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Position3:
    """Point in the local tangent frame (east, north, up), meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite("Position3", self.x, self.y, self.z)


@dataclass(frozen=True)
class Position2:
    """Horizontal point (east, north), meters."""

    x: float
    y: float

    def __post_init__(self):
        _require_finite("Position2", self.x, self.y)


@dataclass(frozen=True)
class BsSite:
    """A base station: integer identity plus fixed antenna position."""

    id: int
    pos: Position3


@dataclass(frozen=True)
class RangeAngle:
    """One BS observation: 3D range, azimuth, optional elevation."""

    range_m: float
    azimuth_rad: float
    elevation_rad: float | None = None

    def __post_init__(self):
        _require_finite("RangeAngle", self.range_m, self.azimuth_rad)
        if self.range_m < 0.0:
            raise ValueError(f"range must be >= 0, got {self.range_m}")
        if self.elevation_rad is not None:
            _require_finite("RangeAngle.elevation", self.elevation_rad)
            if abs(self.elevation_rad) > math.pi / 2:
                raise ValueError("elevation must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class NlosInputs:
    """Inputs to the LOS/NLOS gate: the two range proxies and threshold."""

    r_toa: float
    r_rss: float
    epsilon: float = DEFAULT_NLOS_EPSILON

    def __post_init__(self):
        _require_finite("NlosInputs", self.r_toa, self.r_rss, self.epsilon)
        if self.r_toa < 0.0 or self.r_rss < 0.0:
            raise ValueError("ranges must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")


class LosVerdict(enum.Enum):
    LOS = "los"
    NLOS = "nlos"


def wrap_angle(a: float) -> float:
    """Wrap a single angle into (-pi, pi]."""
    w = (a + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if w == -math.pi else w


def range_3d(ue: Position3, bs: Position3) -> float:
    """Euclidean distance between UE and BS."""
    return math.sqrt(
        (ue.x - bs.x) ** 2 + (ue.y - bs.y) ** 2 + (ue.z - bs.z) ** 2
    )


def azimuth(ue: Position3, bs: Position3) -> float:
    """Azimuth of the UE as seen from the BS, in (-pi, pi].

    Raises DegenerateGeometry when the horizontal offset is below
    MIN_HORIZONTAL_RANGE; the angle is undefined there.
    """
    dx = ue.x - bs.x
    dy = ue.y - bs.y
    if math.hypot(dx, dy) < MIN_HORIZONTAL_RANGE:
        raise DegenerateGeometry(
            f"horizontal offset {math.hypot(dx, dy):.2e} m is below "
            f"{MIN_HORIZONTAL_RANGE} m; azimuth undefined"
        )
    a = math.atan2(dy, dx)
    return math.pi if a <= -math.pi else a


def elevation(ue: Position3, bs: Position3) -> float:
    """Elevation of the UE as seen from the BS, in [-pi/2, pi/2]."""
    r = range_3d(ue, bs)
    if r < MIN_HORIZONTAL_RANGE:
        raise DegenerateGeometry("UE and BS coincide; elevation undefined")
    return math.asin((ue.z - bs.z) / r)


def measure(bs: BsSite, ue: Position3, with_elevation: bool = False) -> RangeAngle:
    """Noise-free forward model: the RangeAngle a BS would report."""
    return RangeAngle(
        range_m=range_3d(ue, bs.pos),
        azimuth_rad=azimuth(ue, bs.pos),
        elevation_rad=elevation(ue, bs.pos) if with_elevation else None,
    )


def range_2d(range3: float, delta_z: float) -> float:
    """Horizontal range from a 3D range and a known height difference."""
    if range3 < abs(delta_z):
        raise InconsistentGeometry(
            f"3D range {range3:.3f} m is shorter than the height "
            f"difference {abs(delta_z):.3f} m"
        )
    return math.sqrt(range3 * range3 - delta_z * delta_z)


def fix_2d(bs: BsSite, meas: RangeAngle, ue_height: float) -> Position2:
    """Horizontal position fix from one BS's range and azimuth.

    Exact inverse of (range_3d, azimuth) given the UE height, so a
    noise-free measurement round-trips to the original position.
    """
    dz = ue_height - bs.pos.z
    r2d = range_2d(meas.range_m, dz)
    return Position2(
        x=bs.pos.x + r2d * math.cos(meas.azimuth_rad),
        y=bs.pos.y + r2d * math.sin(meas.azimuth_rad),
    )


def fix_3d(bs: BsSite, meas: RangeAngle) -> Position3:
    """Full 3D position fix; requires the elevation angle."""
    if meas.elevation_rad is None:
        raise MissingElevation("fix_3d needs an elevation angle")
    rh = meas.range_m * math.cos(meas.elevation_rad)
    return Position3(
        x=bs.pos.x + rh * math.cos(meas.azimuth_rad),
        y=bs.pos.y + rh * math.sin(meas.azimuth_rad),
        z=bs.pos.z + meas.range_m * math.sin(meas.elevation_rad),
    )


def detect_nlos(inputs: NlosInputs) -> LosVerdict:
    """Gate a link as LOS iff the TOA/RSS range gap stays within epsilon."""
    if inputs.r_toa - inputs.r_rss <= inputs.epsilon:
        return LosVerdict.LOS
    return LosVerdict.NLOS


def jacobian_rows(state_mean: np.ndarray, bs: BsSite) -> np.ndarray:
    """Rows of the measurement Jacobian for one BS at the given state.

    Row 0 is the gradient of the horizontal range (a unit vector in the
    position columns), row 1 the gradient of the azimuth. Velocity
    columns are zero because neither observable depends on velocity.
    """
    state_mean = np.asarray(state_mean, dtype=float)
    dx = state_mean[0] - bs.pos.x
    dy = state_mean[1] - bs.pos.y
    rr = dx * dx + dy * dy
    r = math.sqrt(rr)
    if r < MIN_HORIZONTAL_RANGE:
        raise DegenerateGeometry(
            "state lies on top of the BS; measurement Jacobian undefined"
        )
    return np.array(
        [
            [dx / r, dy / r, 0.0, 0.0],
            [-dy / rr, dx / rr, 0.0, 0.0],
        ]
    )
