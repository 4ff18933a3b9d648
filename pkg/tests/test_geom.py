import math

import numpy as np
import pytest

from mbsfuse import geom
from mbsfuse.errors import (
    DegenerateGeometry,
    InconsistentGeometry,
    MissingElevation,
)
from mbsfuse.geom import (
    BsSite,
    LosVerdict,
    NlosInputs,
    Position2,
    Position3,
    RangeAngle,
)

ORIGIN_BS = BsSite(0, Position3(0.0, 0.0, 0.0))


def test_range_3d_345():
    assert geom.range_3d(Position3(3, 4, 0), Position3(0, 0, 0)) == 5.0


def test_range_3d_identity():
    p = Position3(7, -2, 10)
    assert geom.range_3d(p, p) == 0.0


def test_range_3d_122():
    assert geom.range_3d(Position3(1, 2, 2), Position3(0, 0, 0)) == 3.0


def test_range_3d_symmetry_and_triangle(rng):
    for _ in range(200):
        a, b, c = (Position3(*rng.uniform(-100, 100, 3)) for _ in range(3))
        assert geom.range_3d(a, b) == pytest.approx(geom.range_3d(b, a), abs=0)
        assert geom.range_3d(a, c) <= geom.range_3d(a, b) + geom.range_3d(b, c) + 1e-9


def test_azimuth_quadrants():
    assert geom.azimuth(Position3(1, 1, 0), Position3(0, 0, 0)) == pytest.approx(math.pi / 4)
    assert geom.azimuth(Position3(1, 0, 0), Position3(0, 0, 0)) == 0.0
    assert geom.azimuth(Position3(-1, 0, 0), Position3(0, 0, 0)) == pytest.approx(math.pi)


def test_azimuth_range(rng):
    for _ in range(500):
        ue = Position3(*rng.uniform(-50, 50, 3))
        if math.hypot(ue.x, ue.y) < 1e-3:
            continue
        a = geom.azimuth(ue, ORIGIN_BS.pos)
        assert -math.pi < a <= math.pi


def test_azimuth_degenerate():
    with pytest.raises(DegenerateGeometry):
        geom.azimuth(Position3(0.0, 0.0, 5.0), Position3(0, 0, 0))


def test_range_2d_cases():
    assert geom.range_2d(5.0, 3.0) == pytest.approx(4.0)
    assert geom.range_2d(10.0, 0.0) == 10.0
    with pytest.raises(InconsistentGeometry):
        geom.range_2d(2.0, 3.0)


def test_fix_2d_axis_aligned():
    bs = BsSite(1, Position3(0.0, 0.0, 10.0))
    meas = RangeAngle(range_m=math.sqrt(200.0), azimuth_rad=0.0)
    fix = geom.fix_2d(bs, meas, ue_height=0.0)
    assert fix.x == pytest.approx(10.0)
    assert fix.y == pytest.approx(0.0, abs=1e-12)


def test_fix_2d_diagonal():
    bs = BsSite(1, Position3(5.0, 5.0, 0.0))
    meas = RangeAngle(range_m=math.sqrt(2.0), azimuth_rad=math.pi / 4)
    fix = geom.fix_2d(bs, meas, ue_height=0.0)
    assert fix.x == pytest.approx(6.0)
    assert fix.y == pytest.approx(6.0)


def test_fix_2d_round_trip(rng):
    # forward (range, azimuth) then fix must reproduce the position
    for _ in range(1000):
        bs = BsSite(2, Position3(*rng.uniform(-200, 200, 2), rng.uniform(0, 30)))
        ue = Position3(*rng.uniform(-200, 200, 2), rng.uniform(0, 5))
        if math.hypot(ue.x - bs.pos.x, ue.y - bs.pos.y) < 1e-3:
            continue
        fix = geom.fix_2d(bs, geom.measure(bs, ue), ue.z)
        assert abs(fix.x - ue.x) < 1e-9
        assert abs(fix.y - ue.y) < 1e-9


def test_fix_2d_angle_period(rng):
    bs = BsSite(3, Position3(10.0, -4.0, 12.0))
    ue = Position3(60.0, 33.0, 1.5)
    meas = geom.measure(bs, ue)
    shifted = RangeAngle(meas.range_m, meas.azimuth_rad + 2 * math.pi)
    f1 = geom.fix_2d(bs, meas, ue.z)
    f2 = geom.fix_2d(bs, shifted, ue.z)
    assert f1.x == pytest.approx(f2.x, abs=1e-9)
    assert f1.y == pytest.approx(f2.y, abs=1e-9)


def test_fix_3d_straight_up():
    bs = BsSite(4, Position3(2.0, 3.0, 4.0))
    meas = RangeAngle(range_m=10.0, azimuth_rad=1.0, elevation_rad=math.pi / 2)
    p = geom.fix_3d(bs, meas)
    assert p.x == pytest.approx(2.0, abs=1e-9)
    assert p.y == pytest.approx(3.0, abs=1e-9)
    assert p.z == pytest.approx(14.0)


def test_fix_3d_coplanar_matches_fix_2d():
    bs = BsSite(5, Position3(0.0, 0.0, 7.0))
    meas = RangeAngle(range_m=10.0, azimuth_rad=0.3, elevation_rad=0.0)
    p3 = geom.fix_3d(bs, meas)
    p2 = geom.fix_2d(bs, RangeAngle(10.0, 0.3), ue_height=7.0)
    assert p3.z == pytest.approx(7.0)
    assert p3.x == pytest.approx(p2.x)
    assert p3.y == pytest.approx(p2.y)


def test_fix_3d_round_trip(rng):
    for _ in range(1000):
        bs = BsSite(6, Position3(*rng.uniform(-100, 100, 3)))
        ue = Position3(*rng.uniform(-100, 100, 3))
        if math.hypot(ue.x - bs.pos.x, ue.y - bs.pos.y) < 1e-3:
            continue
        p = geom.fix_3d(bs, geom.measure(bs, ue, with_elevation=True))
        assert abs(p.x - ue.x) < 1e-9
        assert abs(p.y - ue.y) < 1e-9
        assert abs(p.z - ue.z) < 1e-9


def test_fix_3d_missing_elevation():
    with pytest.raises(MissingElevation):
        geom.fix_3d(ORIGIN_BS, RangeAngle(10.0, 0.0))


def test_detect_nlos_cases():
    assert geom.detect_nlos(NlosInputs(100, 50, 80)) is LosVerdict.LOS
    assert geom.detect_nlos(NlosInputs(200, 50, 80)) is LosVerdict.NLOS
    # boundary is inclusive: a gap of exactly epsilon stays LOS
    assert geom.detect_nlos(NlosInputs(130, 50, 80)) is LosVerdict.LOS


def test_detect_nlos_monotone():
    r_rss, eps = 70.0, 80.0
    verdicts = [
        geom.detect_nlos(NlosInputs(r_toa, r_rss, eps)) for r_toa in np.arange(0, 400, 0.5)
    ]
    flips = sum(
        1 for a, b in zip(verdicts, verdicts[1:]) if a is not b
    )
    assert flips == 1
    assert verdicts[0] is LosVerdict.LOS
    assert verdicts[-1] is LosVerdict.NLOS


def test_jacobian_rows_345():
    rows = geom.jacobian_rows(np.array([3.0, 4.0, 1.0, 1.0]), ORIGIN_BS)
    np.testing.assert_allclose(rows[0], [0.6, 0.8, 0.0, 0.0])
    np.testing.assert_allclose(rows[1], [-0.16, 0.12, 0.0, 0.0])


def test_jacobian_rows_axis_aligned():
    r = 7.0
    rows = geom.jacobian_rows(np.array([r, 0.0, 0.0, 0.0]), ORIGIN_BS)
    np.testing.assert_allclose(rows[0], [1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(rows[1], [0.0, 1.0 / r, 0.0, 0.0])


def test_jacobian_rows_degenerate():
    with pytest.raises(DegenerateGeometry):
        geom.jacobian_rows(np.zeros(4), ORIGIN_BS)


def _finite_diff_rows(state, bs, step=1e-6):
    def h(s):
        dx, dy = s[0] - bs.pos.x, s[1] - bs.pos.y
        return np.array([math.hypot(dx, dy), math.atan2(dy, dx)])

    rows = np.zeros((2, 4))
    for j in range(2):
        sp, sm = state.copy(), state.copy()
        sp[j] += step
        sm[j] -= step
        d = h(sp) - h(sm)
        d[1] = geom.wrap_angle(d[1])
        rows[:, j] = d / (2 * step)
    return rows


def test_jacobian_matches_finite_differences(rng):
    for _ in range(300):
        ang = rng.uniform(-math.pi, math.pi)
        rad = rng.uniform(1.0, 500.0)
        state = np.array(
            [rad * math.cos(ang), rad * math.sin(ang), rng.normal(), rng.normal()]
        )
        analytic = geom.jacobian_rows(state, ORIGIN_BS)
        fd = _finite_diff_rows(state, ORIGIN_BS)
        np.testing.assert_allclose(analytic, fd, rtol=1e-5, atol=1e-8)


def test_wrap_angle_edges():
    assert geom.wrap_angle(math.pi) == pytest.approx(math.pi)
    assert geom.wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert geom.wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert geom.wrap_angle(math.radians(358)) == pytest.approx(math.radians(-2))


def test_position_validation():
    with pytest.raises(ValueError):
        Position3(math.nan, 0, 0)
    with pytest.raises(ValueError):
        Position2(math.inf, 0)
    with pytest.raises(ValueError):
        RangeAngle(-1.0, 0.0)
    with pytest.raises(ValueError):
        NlosInputs(10.0, 10.0, 0.0)
